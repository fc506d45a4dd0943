use serde::{Deserialize, Serialize};

use polyglot_core::{OptimizerConfig, OptimizerKind};

use crate::error::{ParserError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParserConfig {
    pub pos_dim: usize,
    pub input_dropout: f64,
    pub lstm_size: usize,
    pub layers: usize,
    pub recurrent_dropout: f64,
    pub layer_dropout: f64,
    pub arc_mlp: usize,
    pub label_mlp: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs without a dev improvement before stopping.
    pub patience: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl ParserConfig {
    pub fn paper() -> Self {
        ParserConfig {
            pos_dim: 100,
            input_dropout: 0.3,
            lstm_size: 400,
            layers: 3,
            recurrent_dropout: 0.3,
            layer_dropout: 0.3,
            arc_mlp: 500,
            label_mlp: 100,
            batch_size: 80,
            epochs: 80,
            patience: 50,
            optimizer: OptimizerConfig::new(OptimizerKind::adam(0.001, 0.9, 0.999)),
            seed: 1,
        }
    }

    pub fn desk() -> Self {
        ParserConfig {
            pos_dim: 32,
            lstm_size: 64,
            layers: 2,
            arc_mlp: 64,
            label_mlp: 32,
            batch_size: 16,
            epochs: 30,
            patience: 10,
            ..Self::paper()
        }
    }

    /// For overfitting tiny treebanks.
    pub fn fixture() -> Self {
        ParserConfig {
            pos_dim: 16,
            input_dropout: 0.0,
            lstm_size: 32,
            layers: 2,
            recurrent_dropout: 0.0,
            layer_dropout: 0.0,
            arc_mlp: 32,
            label_mlp: 16,
            batch_size: 10,
            epochs: 200,
            patience: 200,
            optimizer: OptimizerConfig::new(OptimizerKind::adam(0.005, 0.9, 0.999)),
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            self.pos_dim,
            self.lstm_size,
            self.layers,
            self.arc_mlp,
            self.label_mlp,
            self.batch_size,
        ];
        if sizes.contains(&0) {
            return Err(ParserError::Input("parser sizes must be at least 1".into()));
        }
        for p in [self.input_dropout, self.recurrent_dropout, self.layer_dropout] {
            if !(0.0..1.0).contains(&p) {
                return Err(ParserError::Input("dropout must be in [0, 1)".into()));
            }
        }
        Ok(())
    }
}
