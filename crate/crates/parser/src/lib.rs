//! Graph-based dependency parser: a highway BiLSTM over per-token
//! representations and POS embeddings, biaffine arc scoring, bilinear
//! relation scoring, and single-root maximum spanning tree decoding.

pub mod config;
pub mod error;
pub mod eval;
pub mod model;
pub mod mst;
pub mod train;

pub use config::ParserConfig;
pub use error::{ParserError, Result};
pub use eval::{las_eval, strip_subtype, AttachmentCounts, ParserMetrics};
pub use model::{ArcScores, Parse, ParseExample, ParserModel};
pub use mst::{decode_mst, greedy_heads, is_tree, tree_score};
pub use train::{train_parser, train_parser_with, ParserEpoch, ParserTrainReport};
