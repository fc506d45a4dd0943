//! Task-side learned combination of layer stacks.

use polyglot_core::{Graph, ParamId, ParamStore, Scalar, Tensor, Var};

use crate::error::{LmError, Result};
use crate::stack::LayerStack;

/// `γ · Σₗ softmax(raw)ₗ · layerₗ`.
#[derive(Clone, Debug)]
pub struct ScalarMix {
    /// `[1, depth]`
    pub raw: ParamId,
    /// `[1, 1]`
    pub gamma: ParamId,
    pub depth: usize,
}

impl ScalarMix {
    /// Raw weights start at 0 (uniform mix), γ at 1.
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, depth: usize) -> Self {
        let raw = store.add(format!("{}.raw", name), Tensor::zeros(&[1, depth]));
        let gamma = store.add(format!("{}.gamma", name), Tensor::full(&[1, 1], T::one()));
        ScalarMix { raw, gamma, depth }
    }

    /// Mixes `layers` (each `[n, d]`).
    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        layers: &[Var],
    ) -> Result<Var> {
        if layers.len() != self.depth {
            return Err(LmError::Input(format!(
                "scalar mix over {} layers given {}",
                self.depth,
                layers.len()
            )));
        }
        let raw = g.param(store, self.raw);
        let w = g.softmax(raw);
        let mut acc = None;
        for (l, &x) in layers.iter().enumerate() {
            let wl = g.slice_cols(w, l, 1);
            let term = g.mul_scalar(x, wl);
            acc = Some(match acc {
                Some(a) => g.add(a, term),
                None => term,
            });
        }
        let gamma = g.param(store, self.gamma);
        Ok(g.mul_scalar(acc.expect("depth ≥ 1"), gamma))
    }

    /// Mixes a stack into `[tokens, width]` with the layers as constants.
    pub fn forward_stack<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        stack: &LayerStack,
    ) -> Result<Var> {
        let layers: Vec<Var> = (0..stack.depth)
            .map(|l| {
                let rows = stack
                    .layer_rows(l)
                    .into_iter()
                    .map(T::from_single)
                    .collect();
                g.constant(Tensor::matrix(stack.tokens, stack.width, rows))
            })
            .collect();
        self.forward(g, store, &layers)
    }

    /// Current softmax weights.
    pub fn weights<T: Scalar>(&self, store: &ParamStore<T>) -> Vec<f64> {
        let raw: Vec<f64> = store
            .value(self.raw)
            .data()
            .iter()
            .map(|x| x.to_f64_lossy())
            .collect();
        let m = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = raw.iter().map(|x| (x - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|x| x / z).collect()
    }
}
