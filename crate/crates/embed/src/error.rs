use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("dictionary has no pairs present in both vocabularies")]
    EmptyDictionary,
    #[error("all-zero vector for {0:?}")]
    DegenerateVector(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Text(#[from] polyglot_text::TextError),
    #[error(transparent)]
    Tensor(#[from] polyglot_core::TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EmbedError> = std::result::Result<T, E>;
