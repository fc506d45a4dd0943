use serde::{Deserialize, Serialize};

use polyglot_core::{OptimizerConfig, OptimizerKind};

use crate::error::{LmError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// One language, character input.
    MonoChar,
    /// Two languages, character input.
    RositaChar,
    /// Two languages, character input plus an aligned word-type vector.
    RositaWord,
}

impl Variant {
    pub fn is_polyglot(self) -> bool {
        !matches!(self, Variant::MonoChar)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::MonoChar => "mono_char",
            Variant::RositaChar => "rosita_char",
            Variant::RositaWord => "rosita_word",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharEncoderConfig {
    pub char_dim: usize,
    /// `(width, count)` per convolution.
    pub filters: Vec<(usize, usize)>,
    pub highway_layers: usize,
    pub projection: usize,
    pub max_word_len: usize,
}

impl CharEncoderConfig {
    pub fn paper() -> Self {
        CharEncoderConfig {
            char_dim: 16,
            filters: vec![
                (1, 32),
                (2, 32),
                (3, 68),
                (4, 128),
                (5, 256),
                (6, 512),
                (7, 1024),
            ],
            highway_layers: 2,
            projection: 256,
            max_word_len: 50,
        }
    }

    pub fn total_filters(&self) -> usize {
        self.filters.iter().map(|&(_, c)| c).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_word_len < 3 {
            return Err(LmError::Config(
                "max word length must leave room for markers".into(),
            ));
        }
        if self.filters.is_empty() || self.char_dim == 0 || self.projection == 0 {
            return Err(LmError::Config(
                "char encoder sizes must be positive".into(),
            ));
        }
        if let Some(&(w, _)) = self
            .filters
            .iter()
            .find(|&&(w, c)| w == 0 || w > self.max_word_len || c == 0)
        {
            return Err(LmError::Config(format!("bad filter width {}", w)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub variant: Variant,
    pub chars: CharEncoderConfig,
    pub lstm_size: usize,
    pub layers: usize,
    /// Width of each direction's layer output; equals the char projection.
    pub projection: usize,
    pub skip_connections: bool,
    pub dropout: f64,
    /// Word-type vector width (rosita_word only).
    pub word_dim: usize,
    /// Softmax vocabulary cap; `None` keeps every training word.
    pub max_vocab: Option<usize>,
    pub negatives: usize,
    pub unroll: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl LmConfig {
    /// Published sizes.
    pub fn paper(variant: Variant) -> Self {
        LmConfig {
            variant,
            chars: CharEncoderConfig::paper(),
            lstm_size: 2048,
            layers: 2,
            projection: 256,
            skip_connections: true,
            dropout: 0.1,
            word_dim: 300,
            max_vocab: None,
            negatives: 64,
            unroll: 20,
            batch_size: 128,
            epochs: 10,
            optimizer: OptimizerConfig::new(OptimizerKind::adagrad(0.2, 1.0)).with_clip(10.0),
            seed: 1,
        }
    }

    /// Published encoder with the LSTM and projection halved (1024/128).
    pub fn desk(variant: Variant) -> Self {
        let mut chars = CharEncoderConfig::paper();
        chars.projection = 128;
        LmConfig {
            chars,
            lstm_size: 1024,
            projection: 128,
            ..LmConfig::paper(variant)
        }
    }

    /// Small enough to train on a few thousand tokens in seconds.
    pub fn fixture(variant: Variant) -> Self {
        LmConfig {
            chars: CharEncoderConfig {
                char_dim: 16,
                filters: vec![(1, 16), (2, 16), (3, 32), (4, 32)],
                highway_layers: 2,
                projection: 32,
                max_word_len: 50,
            },
            lstm_size: 64,
            projection: 32,
            word_dim: 32,
            batch_size: 4,
            unroll: 10,
            epochs: 50,
            ..LmConfig::paper(variant)
        }
    }

    /// Width of the per-word LM input before any input projection.
    pub fn input_dim(&self) -> usize {
        match self.variant {
            Variant::RositaWord => self.projection + self.word_dim,
            _ => self.projection,
        }
    }

    /// Width of each layer of an extracted stack.
    pub fn layer_width(&self) -> usize {
        2 * self.projection
    }

    pub fn validate(&self) -> Result<()> {
        self.chars.validate()?;
        if self.chars.projection != self.projection {
            return Err(LmError::Config(
                "char projection must equal the LSTM projection".into(),
            ));
        }
        if self.projection > self.lstm_size {
            return Err(LmError::Config("projection larger than LSTM size".into()));
        }
        if self.layers == 0 || self.unroll == 0 || self.batch_size == 0 {
            return Err(LmError::Config(
                "layers, unroll and batch size must be positive".into(),
            ));
        }
        if self.variant == Variant::RositaWord && self.word_dim == 0 {
            return Err(LmError::Config("rosita_word needs a word dimension".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(LmError::Config("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }
}
