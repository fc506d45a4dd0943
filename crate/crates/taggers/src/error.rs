use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("{0} values for {1} tokens")]
    LengthMismatch(usize, usize),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("no tag sequence satisfies the constraints")]
    NoValidPath,
    #[error(transparent)]
    Tensor(#[from] polyglot_core::TensorError),
    #[error(transparent)]
    Lm(#[from] polyglot_lm::LmError),
    #[error(transparent)]
    Text(#[from] polyglot_text::TextError),
}

pub type Result<T, E = TaggerError> = std::result::Result<T, E>;
