//! Text handling shared by the language models and the task models:
//! normalization, token streams, vocabularies, bilingual batch planning,
//! and readers/writers for CoNLL-U and tab-separated tagging data.

pub mod bio;
pub mod columnar;
pub mod conllu;
pub mod error;
pub mod fixtures;
pub mod labels;
pub mod mix;
pub mod normalize;
pub mod sentence;
pub mod stream;
pub mod vocab;

pub use bio::{bio_to_spans, spans_to_bio};
pub use columnar::{read_columnar, write_columnar, Column, Schema};
pub use conllu::{read_conllu, write_conllu};
pub use error::{Result, TextError};
pub use labels::LabelSet;
pub use mix::{plan_polyglot_mix, MixBlock, MixedBatchPlan};
pub use normalize::{is_arabic, normalize};
pub use sentence::{AnnotatedSentence, Span};
pub use stream::TokenStream;
pub use vocab::{build_vocab, Vocabulary};
