use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("window mixes languages {0:?} and {1:?}")]
    MixedLanguages(String, String),
    #[error("bad file {path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Tensor(#[from] polyglot_core::TensorError),
    #[error(transparent)]
    Text(#[from] polyglot_text::TextError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = LmError> = std::result::Result<T, E>;
