use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),
    #[error("{} test sentence(s) also occur in the LM corpus, first: {:?}", .0.len(), .0.first())]
    Overlap(Vec<String>),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Text(#[from] polyglot_text::TextError),
    #[error(transparent)]
    Embed(#[from] polyglot_embed::EmbedError),
    #[error(transparent)]
    Lm(#[from] polyglot_lm::LmError),
    #[error(transparent)]
    Parser(#[from] polyglot_parser::ParserError),
    #[error(transparent)]
    Tagger(#[from] polyglot_taggers::TaggerError),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
