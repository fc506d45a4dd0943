//! Sequence taggers over per-token representations: a linear-chain CRF
//! with constrained Viterbi, BIO tag sets, span scoring, and the semantic
//! role and named-entity models.

pub mod config;
pub mod crf;
pub mod error;
pub mod eval;
pub mod example;
pub mod ner;
pub mod srl;
pub mod tagset;
pub mod train;

pub use config::{NerConfig, Schedule, SrlConfig};
pub use crf::{crf_nll, CrfParams};
pub use error::{Result, TaggerError};
pub use eval::{span_counts, span_f1, SpanCounts, SpanMetrics, VERB};
pub use example::TagExample;
pub use ner::NerModel;
pub use srl::SrlModel;
pub use tagset::{Prefix, TagSet, TransitionMask, OUTSIDE};
pub use train::{evaluate, train_tagger, train_tagger_with, SequenceTagger, TaggerEpoch, TaggerTrainReport};
