//! Static word embeddings: fastText-style skip-gram training with hashed
//! character n-grams, closed-form orthogonal alignment between two
//! languages, and word-translation evaluation.

pub mod align;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod sgns;
pub mod subword;

pub use align::{procrustes_align, read_dictionary, AlignmentMap};
pub use error::{EmbedError, Result};
pub use eval::{translation_eval, Metric};
pub use matrix::EmbeddingMatrix;
pub use sgns::{train_sgns, SgnsConfig, SgnsModel};
