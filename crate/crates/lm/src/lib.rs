//! Bidirectional language models over character-CNN word encodings, in
//! three flavours: monolingual, bilingual with characters only, and
//! bilingual with an additional aligned word-type embedding. Trained with
//! truncated BPTT and a sampled softmax; used downstream through per-token
//! layer stacks and a learned scalar mix.

pub mod batch;
pub mod chars;
pub mod checkpoint;
pub mod config;
pub mod encoder;
pub mod error;
pub mod mix;
pub mod model;
pub mod repr;
pub mod softmax;
pub mod stack;
pub mod train;

pub use chars::CharVocab;
pub use config::{CharEncoderConfig, LmConfig, Variant};
pub use error::{LmError, Result};
pub use mix::ScalarMix;
pub use model::{LmModel, WordVectors};
pub use repr::{ReprInput, ReprLayer, ReprSpec};
pub use stack::LayerStack;
pub use train::{train_lm, train_lm_with, EpochStats, TrainReport};
