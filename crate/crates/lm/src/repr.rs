//! Per-token input features for the task models.
//!
//! Static embeddings live in the task's parameter store and are updated
//! by the task loss. Contextual stacks come from a frozen LM and enter the
//! graph as constants; only the scalar-mix weights are trained.

use std::collections::HashMap;

use polyglot_core::{Graph, ParamId, ParamStore, Scalar, Tensor, Var};
use polyglot_embed::EmbeddingMatrix;

use crate::error::{LmError, Result};
use crate::mix::ScalarMix;
use crate::stack::LayerStack;

/// What a task sees for one sentence.
#[derive(Clone, Copy, Debug)]
pub enum ReprInput<'a> {
    Tokens(&'a [String]),
    Stack(&'a LayerStack),
}

impl ReprInput<'_> {
    pub fn len(&self) -> usize {
        match self {
            ReprInput::Tokens(t) => t.len(),
            ReprInput::Stack(s) => s.tokens,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How to build a [`ReprLayer`].
#[derive(Clone, Copy, Debug)]
pub enum ReprSpec<'a> {
    Static(&'a EmbeddingMatrix),
    Contextual { depth: usize, width: usize },
}

#[derive(Clone, Debug)]
pub enum ReprLayer {
    /// Row 0 of `table` is the unknown word.
    Static {
        table: ParamId,
        index: HashMap<String, usize>,
        dim: usize,
    },
    Contextual { mix: ScalarMix, width: usize },
}

impl ReprLayer {
    pub fn build<T: Scalar>(store: &mut ParamStore<T>, name: &str, spec: ReprSpec) -> Self {
        match spec {
            ReprSpec::Static(m) => Self::static_from(store, name, m),
            ReprSpec::Contextual { depth, width } => Self::contextual(store, name, depth, width),
        }
    }

    /// A trainable table initialised from `vectors`.
    pub fn static_from<T: Scalar>(store: &mut ParamStore<T>, name: &str, vectors: &EmbeddingMatrix) -> Self {
        let dim = vectors.dim();
        let mut data = vec![T::zero(); dim];
        data.extend(vectors.data().iter().map(|&x| T::lit(x)));
        let table = store.add(format!("{}.table", name), Tensor::matrix(vectors.len() + 1, dim, data));
        let index = vectors.words().iter().enumerate().map(|(i, w)| (w.clone(), i + 1)).collect();
        ReprLayer::Static { table, index, dim }
    }

    pub fn contextual<T: Scalar>(store: &mut ParamStore<T>, name: &str, depth: usize, width: usize) -> Self {
        ReprLayer::Contextual {
            mix: ScalarMix::new(store, &format!("{}.mix", name), depth),
            width,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            ReprLayer::Static { dim, .. } => *dim,
            ReprLayer::Contextual { width, .. } => *width,
        }
    }

    /// `[n, output_dim]`.
    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, store: &ParamStore<T>, input: ReprInput) -> Result<Var> {
        match (self, input) {
            (ReprLayer::Static { table, index, .. }, ReprInput::Tokens(tokens)) => {
                let rows: Vec<usize> = tokens.iter().map(|t| index.get(t).copied().unwrap_or(0)).collect();
                let t = g.param(store, *table);
                Ok(g.gather_rows(t, &rows))
            }
            (ReprLayer::Contextual { mix, width }, ReprInput::Stack(stack)) => {
                if stack.width != *width {
                    return Err(LmError::Input(format!("stack width {} but expected {}", stack.width, width)));
                }
                mix.forward_stack(g, store, stack)
            }
            (ReprLayer::Static { .. }, _) => Err(LmError::Input("static representation needs tokens".into())),
            (ReprLayer::Contextual { .. }, _) => Err(LmError::Input("contextual representation needs a layer stack".into())),
        }
    }

    pub fn is_contextual(&self) -> bool {
        matches!(self, ReprLayer::Contextual { .. })
    }
}
