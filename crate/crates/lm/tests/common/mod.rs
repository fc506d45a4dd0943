#![allow(dead_code)]

use polyglot_core::{OptimizerConfig, OptimizerKind};
use polyglot_lm::{CharEncoderConfig, LmConfig, Variant};
use polyglot_text::TokenStream;

/// A model small enough for finite differences.
pub fn micro(variant: Variant) -> LmConfig {
    LmConfig {
        variant,
        chars: CharEncoderConfig {
            char_dim: 3,
            filters: vec![(1, 2), (2, 3)],
            highway_layers: 1,
            projection: 4,
            max_word_len: 8,
        },
        lstm_size: 5,
        layers: 2,
        projection: 4,
        skip_connections: true,
        dropout: 0.0,
        word_dim: 3,
        max_vocab: None,
        negatives: 4,
        unroll: 3,
        batch_size: 2,
        epochs: 1,
        optimizer: OptimizerConfig::new(OptimizerKind::adagrad(0.2, 1.0)),
        seed: 3,
    }
}

pub fn stream(lines: &[&str], lang: &str) -> TokenStream {
    TokenStream::from_text(&lines.join("\n"), lang, "test")
}

pub fn toks(s: &str) -> Vec<String> {
    s.split(' ').map(String::from).collect()
}
