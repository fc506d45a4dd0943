use serde::{Deserialize, Serialize};

use polyglot_core::{OptimizerConfig, OptimizerKind};

use crate::error::{Result, TaggerError};

/// Batching, stopping and update settings shared by both taggers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs without a dev improvement before stopping.
    pub patience: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(TaggerError::Input("batch size and epochs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrlConfig {
    pub indicator_dim: usize,
    pub lstm_size: usize,
    pub layers: usize,
    pub recurrent_dropout: f64,
    pub schedule: Schedule,
}

impl SrlConfig {
    pub fn paper() -> Self {
        SrlConfig {
            indicator_dim: 100,
            lstm_size: 300,
            layers: 4,
            recurrent_dropout: 0.1,
            schedule: Schedule {
                batch_size: 80,
                epochs: 80,
                patience: 20,
                optimizer: OptimizerConfig::new(OptimizerKind::adadelta(0.1, 0.95)).with_clip(1.0),
                seed: 1,
            },
        }
    }

    pub fn desk() -> Self {
        SrlConfig {
            indicator_dim: 16,
            lstm_size: 64,
            layers: 4,
            recurrent_dropout: 0.1,
            schedule: Schedule {
                batch_size: 16,
                epochs: 30,
                patience: 10,
                optimizer: OptimizerConfig::new(OptimizerKind::adam(0.005, 0.9, 0.999)).with_clip(1.0),
                seed: 1,
            },
        }
    }

    /// Small enough to overfit a 20-sentence set in seconds.
    pub fn fixture() -> Self {
        SrlConfig {
            indicator_dim: 8,
            lstm_size: 32,
            layers: 4,
            recurrent_dropout: 0.0,
            schedule: Schedule {
                batch_size: 5,
                epochs: 300,
                patience: 300,
                optimizer: OptimizerConfig::new(OptimizerKind::adam(0.01, 0.9, 0.999)).with_clip(1.0),
                seed: 1,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.lstm_size == 0 || self.indicator_dim == 0 {
            return Err(TaggerError::Input("SRL sizes and layer count must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.recurrent_dropout) {
            return Err(TaggerError::Input("dropout must be in [0, 1)".into()));
        }
        self.schedule.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NerConfig {
    pub char_dim: usize,
    pub char_lstm: usize,
    /// Longest word fed to the character LSTM, boundary markers included.
    pub max_word_len: usize,
    pub lstm_size: usize,
    pub layers: usize,
    pub input_dropout: f64,
    pub recurrent_dropout: f64,
    pub layer_dropout: f64,
    pub mlp: usize,
    pub schedule: Schedule,
}

impl NerConfig {
    pub fn paper() -> Self {
        NerConfig {
            char_dim: 25,
            char_lstm: 128,
            max_word_len: 50,
            lstm_size: 200,
            layers: 3,
            input_dropout: 0.5,
            recurrent_dropout: 0.5,
            layer_dropout: 0.5,
            mlp: 400,
            schedule: Schedule {
                batch_size: 64,
                epochs: 50,
                patience: 25,
                optimizer: OptimizerConfig::new(OptimizerKind::adam(0.001, 0.9, 0.999)).with_l2(0.001),
                seed: 1,
            },
        }
    }

    pub fn desk() -> Self {
        NerConfig {
            char_dim: 16,
            char_lstm: 32,
            max_word_len: 20,
            lstm_size: 64,
            layers: 2,
            input_dropout: 0.3,
            recurrent_dropout: 0.3,
            layer_dropout: 0.3,
            mlp: 64,
            schedule: Schedule {
                batch_size: 16,
                epochs: 30,
                patience: 10,
                optimizer: OptimizerConfig::new(OptimizerKind::adam(0.005, 0.9, 0.999)),
                seed: 1,
            },
        }
    }

    pub fn fixture() -> Self {
        NerConfig {
            char_dim: 8,
            char_lstm: 16,
            max_word_len: 12,
            lstm_size: 32,
            layers: 2,
            input_dropout: 0.0,
            recurrent_dropout: 0.0,
            layer_dropout: 0.0,
            mlp: 32,
            schedule: Schedule {
                batch_size: 5,
                epochs: 300,
                patience: 300,
                optimizer: OptimizerConfig::new(OptimizerKind::adam(0.01, 0.9, 0.999)),
                seed: 1,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [self.char_dim, self.char_lstm, self.lstm_size, self.layers, self.mlp];
        if sizes.contains(&0) {
            return Err(TaggerError::Input("NER sizes must be at least 1".into()));
        }
        if self.max_word_len < 3 {
            return Err(TaggerError::Input("max_word_len must leave room for one character".into()));
        }
        for p in [self.input_dropout, self.recurrent_dropout, self.layer_dropout] {
            if !(0.0..1.0).contains(&p) {
                return Err(TaggerError::Input("dropout must be in [0, 1)".into()));
            }
        }
        self.schedule.validate()
    }
}
