//! Central finite-difference checks of analytic gradients.

use crate::graph::{Graph, Var};
use crate::params::ParamStore;
use crate::tensor::Tensor;

/// Gradients smaller than this are compared on an absolute scale.
pub const REL_ERR_FLOOR: f64 = 1e-5;

/// Relative error used by all checks: `|a - n| / max(|a|, |n|, REL_ERR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

#[derive(Clone, Debug)]
pub struct GradCheckEntry {
    pub name: String,
    pub checked: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.entries.iter().map(|e| e.max_rel_err).fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| e.max_rel_err < tol)
    }

    /// Entries exceeding `tol`.
    pub fn failures(&self, tol: f64) -> Vec<&GradCheckEntry> {
        self.entries.iter().filter(|e| e.max_rel_err >= tol).collect()
    }
}

fn compare(name: String, analytic: &[f64], numeric: &[f64]) -> GradCheckEntry {
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    for (&a, &n) in analytic.iter().zip(numeric) {
        max_rel = max_rel.max(relative_error(a, n));
        max_abs = max_abs.max((a - n).abs());
    }
    GradCheckEntry {
        name,
        checked: analytic.len(),
        max_rel_err: max_rel,
        max_abs_err: max_abs,
    }
}

/// Checks `f` with respect to every entry of every input.
///
/// `f` builds a scalar from leaf nodes holding `inputs`; it must be
/// deterministic.
pub fn grad_check<F>(f: F, inputs: &[Tensor<f64>], eps: f64) -> GradCheckReport
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Var,
{
    let eval = |ins: &[Tensor<f64>]| -> f64 {
        let mut g = Graph::new();
        let vars: Vec<Var> = ins.iter().map(|t| g.leaf(t.clone())).collect();
        let out = f(&mut g, &vars);
        g.value(out).item()
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let out = f(&mut g, &vars);
    let grads = g.backward(out).expect("grad_check needs a scalar function");

    let mut report = GradCheckReport::default();
    for (k, input) in inputs.iter().enumerate() {
        let analytic: Vec<f64> = match grads.get(vars[k]) {
            Some(t) => t.data().to_vec(),
            None => vec![0.0; input.len()],
        };
        let mut numeric = Vec::with_capacity(input.len());
        let mut work: Vec<Tensor<f64>> = inputs.to_vec();
        for j in 0..input.len() {
            let orig = input.data()[j];
            work[k].data_mut()[j] = orig + eps;
            let up = eval(&work);
            work[k].data_mut()[j] = orig - eps;
            let down = eval(&work);
            work[k].data_mut()[j] = orig;
            numeric.push((up - down) / (2.0 * eps));
        }
        report.entries.push(compare(format!("input{}", k), &analytic, &numeric));
    }
    report
}

/// Checks `f` with respect to the parameters of `store`.
///
/// With `max_entries = Some(n)`, at most `n` evenly spaced entries of each
/// parameter are perturbed.
pub fn grad_check_params<F>(
    store: &ParamStore<f64>,
    f: F,
    eps: f64,
    max_entries: Option<usize>,
) -> GradCheckReport
where
    F: Fn(&mut Graph<f64>, &ParamStore<f64>) -> Var,
{
    let mut g = Graph::new();
    let out = f(&mut g, store);
    let mut analytic_store = store.clone();
    analytic_store.zero_grads();
    g.backward_into(out, &mut analytic_store)
        .expect("grad_check needs a scalar function");

    let mut work = store.clone();
    let eval = |work: &ParamStore<f64>| -> f64 {
        let mut g = Graph::new();
        let out = f(&mut g, work);
        g.value(out).item()
    };

    let mut report = GradCheckReport::default();
    for id in store.ids() {
        let n = store.value(id).len();
        let picks: Vec<usize> = match max_entries {
            Some(m) if m < n => (0..m).map(|i| i * n / m).collect(),
            _ => (0..n).collect(),
        };
        let mut analytic = Vec::with_capacity(picks.len());
        let mut numeric = Vec::with_capacity(picks.len());
        for &j in &picks {
            let orig = store.value(id).data()[j];
            work.value_mut(id).data_mut()[j] = orig + eps;
            let up = eval(&work);
            work.value_mut(id).data_mut()[j] = orig - eps;
            let down = eval(&work);
            work.value_mut(id).data_mut()[j] = orig;
            numeric.push((up - down) / (2.0 * eps));
            analytic.push(analytic_store.grad(id).data()[j]);
        }
        report
            .entries
            .push(compare(store.name(id).to_string(), &analytic, &numeric));
    }
    report
}
