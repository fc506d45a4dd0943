use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid BIO tag {tag:?} at token {position}")]
    InvalidBio { position: usize, tag: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid sentence: {0}")]
    InvalidSentence(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = TextError> = std::result::Result<T, E>;

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> TextError {
    TextError::Parse {
        line,
        message: message.into(),
    }
}
