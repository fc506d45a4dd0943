//! Numerical core: a tape-based reverse-mode autodiff engine over dense
//! row-major tensors, the Adagrad/Adam/Adadelta optimizers, finite
//! difference gradient checks, a binary parameter format and the recurrent
//! building blocks used by the models.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod kernels;
pub mod nn;
pub mod optim;
pub mod par;
pub mod params;
pub mod scalar;
pub mod tensor;

pub use error::{Result, TensorError};
pub use graph::{CustomOp, Gradients, Graph, Var};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use params::{ParamId, ParamStore};
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Seeded generator used throughout the workspace.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the workspace generator from a seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
