//! Adagrad, Adam and Adadelta with optional L2 and global-norm clipping.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::params::ParamStore;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Update rule and its hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    /// `acc += g²; p -= lr · g / sqrt(acc)`. No epsilon: the accumulator
    /// starts strictly positive.
    Adagrad { lr: f64, initial_accumulator: f64 },
    /// Bias-corrected Adam.
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
    Adadelta { lr: f64, rho: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adagrad(lr: f64, initial_accumulator: f64) -> Self {
        OptimizerKind::Adagrad {
            lr,
            initial_accumulator,
        }
    }

    pub fn adam(lr: f64, beta1: f64, beta2: f64) -> Self {
        OptimizerKind::Adam {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
        }
    }

    pub fn adadelta(lr: f64, rho: f64) -> Self {
        OptimizerKind::Adadelta { lr, rho, eps: 1e-6 }
    }
}

/// Full optimizer configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    /// Global gradient-norm threshold.
    #[serde(default)]
    pub clip_norm: Option<f64>,
    /// Coefficient of `coefficient · param` added to every gradient.
    #[serde(default)]
    pub l2: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        OptimizerConfig {
            kind,
            clip_norm: None,
            l2: 0.0,
        }
    }

    pub fn with_clip(mut self, clip: f64) -> Self {
        self.clip_norm = Some(clip);
        self
    }

    pub fn with_l2(mut self, l2: f64) -> Self {
        self.l2 = l2;
        self
    }
}

/// Per-parameter accumulators of an optimizer run.
#[derive(Clone, Debug)]
pub struct OptimizerState<T: Scalar> {
    config: OptimizerConfig,
    first: Vec<Tensor<T>>,
    second: Vec<Tensor<T>>,
    steps: u64,
}

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut [Tensor<T>], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .map(|g| g.sq_norm().to_f64_lossy())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let k = T::lit(max_norm / norm);
        for g in grads {
            g.data_mut().iter_mut().for_each(|x| *x = *x * k);
        }
    }
    norm
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(config: OptimizerConfig) -> Self {
        OptimizerState {
            config,
            first: Vec::new(),
            second: Vec::new(),
            steps: 0,
        }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Per-parameter first accumulators (Adagrad sum, Adam first moment,
    /// Adadelta squared-gradient average).
    pub fn first_accumulators(&self) -> &[Tensor<T>] {
        &self.first
    }

    pub fn second_accumulators(&self) -> &[Tensor<T>] {
        &self.second
    }

    fn init(&mut self, params: &[Tensor<T>]) {
        let fill = match self.config.kind {
            OptimizerKind::Adagrad {
                initial_accumulator,
                ..
            } => T::lit(initial_accumulator),
            _ => T::zero(),
        };
        self.first = params.iter().map(|p| Tensor::full(p.shape(), fill)).collect();
        self.second = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
    }

    /// Applies one update. `names` are only used in error messages.
    pub fn step(
        &mut self,
        params: &mut [Tensor<T>],
        grads: &[Tensor<T>],
        names: &[String],
    ) -> Result<()> {
        if params.len() != grads.len() {
            return Err(TensorError::ParamCount {
                expected: params.len(),
                got: grads.len(),
            });
        }
        if self.first.is_empty() && !params.is_empty() {
            self.init(params);
        }
        if self.first.len() != params.len() {
            return Err(TensorError::ParamCount {
                expected: self.first.len(),
                got: params.len(),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || self.first[i].shape() != p.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "optimizer_step",
                    left: p.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
            if !g.all_finite() {
                let name = names.get(i).cloned().unwrap_or_else(|| format!("#{}", i));
                return Err(TensorError::NonFiniteGradient(name));
            }
        }

        let mut grads: Vec<Tensor<T>> = grads.to_vec();
        if self.config.l2 != 0.0 {
            let l2 = T::lit(self.config.l2);
            for (g, p) in grads.iter_mut().zip(params.iter()) {
                for (x, &w) in g.data_mut().iter_mut().zip(p.data()) {
                    *x = *x + l2 * w;
                }
            }
        }
        if let Some(c) = self.config.clip_norm {
            clip_global_norm(&mut grads, c);
        }

        self.steps += 1;
        let t = self.steps as f64;
        match self.config.kind {
            OptimizerKind::Adagrad { lr, .. } => {
                let lr = T::lit(lr);
                for ((p, g), acc) in params.iter_mut().zip(&grads).zip(&mut self.first) {
                    for ((w, &d), a) in p.data_mut().iter_mut().zip(g.data()).zip(acc.data_mut()) {
                        *a = *a + d * d;
                        *w = *w - lr * d / a.sqrt();
                    }
                }
            }
            OptimizerKind::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let c1 = 1.0 - beta1.powf(t);
                let c2 = 1.0 - beta2.powf(t);
                let (b1, b2) = (T::lit(beta1), T::lit(beta2));
                let (lr, eps) = (T::lit(lr), T::lit(eps));
                let (c1, c2) = (T::lit(c1), T::lit(c2));
                for (i, p) in params.iter_mut().enumerate() {
                    let g = grads[i].data();
                    let m = self.first[i].data_mut();
                    let v = self.second[i].data_mut();
                    for (j, w) in p.data_mut().iter_mut().enumerate() {
                        m[j] = b1 * m[j] + (T::one() - b1) * g[j];
                        v[j] = b2 * v[j] + (T::one() - b2) * g[j] * g[j];
                        let mhat = m[j] / c1;
                        let vhat = v[j] / c2;
                        *w = *w - lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
            OptimizerKind::Adadelta { lr, rho, eps } => {
                let (lr, rho, eps) = (T::lit(lr), T::lit(rho), T::lit(eps));
                for (i, p) in params.iter_mut().enumerate() {
                    let g = grads[i].data();
                    let sq = self.first[i].data_mut();
                    let upd = self.second[i].data_mut();
                    for (j, w) in p.data_mut().iter_mut().enumerate() {
                        sq[j] = rho * sq[j] + (T::one() - rho) * g[j] * g[j];
                        let delta = (upd[j] + eps).sqrt() / (sq[j] + eps).sqrt() * g[j];
                        upd[j] = rho * upd[j] + (T::one() - rho) * delta * delta;
                        *w = *w - lr * delta;
                    }
                }
            }
        }
        Ok(())
    }

    /// Updates every parameter of `store` from its accumulated gradients.
    pub fn step_store(&mut self, store: &mut ParamStore<T>) -> Result<()> {
        let (values, grads, names) = store.split_mut();
        self.step(values, grads, names)
    }
}
