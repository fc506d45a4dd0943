//! Linear-chain CRF: partition function, path scores, constrained Viterbi
//! and the negative log-likelihood as a graph operation.
//!
//! Emissions are row-major `L × T` slices: position `t`, tag `j` at
//! `t * T + j`.

use polyglot_core::{CustomOp, Graph, Scalar, Tensor, Var};

use crate::error::{Result, TaggerError};
use crate::tagset::TransitionMask;

fn lse(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Transition log-potentials (`transitions[i * T + j]` for `i → j`) and
/// start/stop potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct CrfParams {
    pub tags: usize,
    pub transitions: Vec<f64>,
    pub start: Vec<f64>,
    pub stop: Vec<f64>,
}

impl CrfParams {
    pub fn new(tags: usize, transitions: Vec<f64>, start: Vec<f64>, stop: Vec<f64>) -> Result<Self> {
        if tags == 0 || transitions.len() != tags * tags || start.len() != tags || stop.len() != tags {
            return Err(TaggerError::Input(format!(
                "CRF with {} tags needs a square transition matrix and {}-long start/stop",
                tags, tags
            )));
        }
        Ok(CrfParams {
            tags,
            transitions,
            start,
            stop,
        })
    }

    /// All potentials zero: only emissions matter.
    pub fn zeros(tags: usize) -> Self {
        CrfParams {
            tags,
            transitions: vec![0.0; tags * tags],
            start: vec![0.0; tags],
            stop: vec![0.0; tags],
        }
    }

    fn trans(&self, i: usize, j: usize) -> f64 {
        self.transitions[i * self.tags + j]
    }

    fn positions(&self, emissions: &[f64]) -> Result<usize> {
        if emissions.is_empty() || emissions.len() % self.tags != 0 {
            return Err(TaggerError::Input(format!(
                "{} emission values for {} tags",
                emissions.len(),
                self.tags
            )));
        }
        Ok(emissions.len() / self.tags)
    }

    pub fn sequence_score(&self, emissions: &[f64], path: &[usize]) -> Result<f64> {
        let len = self.positions(emissions)?;
        if path.len() != len {
            return Err(TaggerError::LengthMismatch(path.len(), len));
        }
        let t = self.tags;
        let mut s = self.start[path[0]] + self.stop[path[len - 1]];
        for (k, &y) in path.iter().enumerate() {
            s += emissions[k * t + y];
            if k > 0 {
                s += self.trans(path[k - 1], y);
            }
        }
        Ok(s)
    }

    /// Forward scores `alpha[t][j]`, backward scores `beta[t][j]` (stop
    /// included) and `log Z`.
    fn forward_backward(&self, emissions: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let len = self.positions(emissions)?;
        let t = self.tags;
        let mut alpha = vec![0.0; len * t];
        for j in 0..t {
            alpha[j] = self.start[j] + emissions[j];
        }
        for k in 1..len {
            for j in 0..t {
                alpha[k * t + j] = emissions[k * t + j] + lse((0..t).map(|i| alpha[(k - 1) * t + i] + self.trans(i, j)));
            }
        }
        let mut beta = vec![0.0; len * t];
        beta[(len - 1) * t..].copy_from_slice(&self.stop);
        for k in (0..len - 1).rev() {
            for i in 0..t {
                beta[k * t + i] =
                    lse((0..t).map(|j| self.trans(i, j) + emissions[(k + 1) * t + j] + beta[(k + 1) * t + j]));
            }
        }
        let log_z = lse((0..t).map(|j| alpha[(len - 1) * t + j] + self.stop[j]));
        Ok((alpha, beta, log_z))
    }

    pub fn log_partition(&self, emissions: &[f64]) -> Result<f64> {
        Ok(self.forward_backward(emissions)?.2)
    }

    /// `log Z - score(gold)`.
    pub fn nll(&self, emissions: &[f64], gold: &[usize]) -> Result<f64> {
        Ok(self.log_partition(emissions)? - self.sequence_score(emissions, gold)?)
    }

    /// Highest-scoring path allowed by `mask`. Among equal scores the
    /// lower tag id wins at every back-pointer.
    pub fn viterbi(&self, emissions: &[f64], mask: Option<&TransitionMask>) -> Result<Vec<usize>> {
        let len = self.positions(emissions)?;
        let t = self.tags;
        if mask.is_some_and(|m| m.tags != t) {
            return Err(TaggerError::Input("mask and CRF disagree on the tag count".into()));
        }
        let trans = |i: usize, j: usize| match mask {
            Some(m) if !m.allows(i, j) => f64::NEG_INFINITY,
            _ => self.trans(i, j),
        };
        let mut score: Vec<f64> = (0..t)
            .map(|j| match mask {
                Some(m) if !m.start[j] => f64::NEG_INFINITY,
                _ => self.start[j] + emissions[j],
            })
            .collect();
        let mut back = vec![0usize; len * t];
        for k in 1..len {
            let mut next = vec![f64::NEG_INFINITY; t];
            for j in 0..t {
                let mut best = (f64::NEG_INFINITY, 0);
                for (i, &s) in score.iter().enumerate() {
                    let v = s + trans(i, j);
                    if v > best.0 {
                        best = (v, i);
                    }
                }
                next[j] = best.0 + emissions[k * t + j];
                back[k * t + j] = best.1;
            }
            score = next;
        }
        let mut last = (f64::NEG_INFINITY, 0);
        for (j, &s) in score.iter().enumerate() {
            let v = s + self.stop[j];
            if v > last.0 {
                last = (v, j);
            }
        }
        if last.0 == f64::NEG_INFINITY {
            return Err(TaggerError::NoValidPath);
        }
        let mut path = vec![last.1; len];
        for k in (1..len).rev() {
            path[k - 1] = back[k * t + path[k]];
        }
        Ok(path)
    }

    /// Gradients of `log Z - score(gold)` with respect to the emissions,
    /// transitions, start and stop potentials.
    pub fn nll_gradients(&self, emissions: &[f64], gold: &[usize]) -> Result<[Vec<f64>; 4]> {
        let (alpha, beta, log_z) = self.forward_backward(emissions)?;
        let len = alpha.len() / self.tags;
        if gold.len() != len {
            return Err(TaggerError::LengthMismatch(gold.len(), len));
        }
        let t = self.tags;
        let mut d_em: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| (a + b - log_z).exp()).collect();
        let mut d_trans = vec![0.0; t * t];
        for k in 1..len {
            for i in 0..t {
                for j in 0..t {
                    d_trans[i * t + j] += (alpha[(k - 1) * t + i] + self.trans(i, j) + emissions[k * t + j]
                        + beta[k * t + j]
                        - log_z)
                        .exp();
                }
            }
        }
        let mut d_start = d_em[..t].to_vec();
        let mut d_stop = d_em[(len - 1) * t..].to_vec();
        for (k, &y) in gold.iter().enumerate() {
            d_em[k * t + y] -= 1.0;
            if k > 0 {
                d_trans[gold[k - 1] * t + y] -= 1.0;
            }
        }
        d_start[gold[0]] -= 1.0;
        d_stop[gold[len - 1]] -= 1.0;
        Ok([d_em, d_trans, d_start, d_stop])
    }
}

struct CrfNll {
    gold: Vec<usize>,
}

fn to_f64<T: Scalar>(t: &Tensor<T>) -> Vec<f64> {
    t.data().iter().map(|x| x.to_f64_lossy()).collect()
}

fn params_of<T: Scalar>(trans: &Tensor<T>, start: &Tensor<T>, stop: &Tensor<T>) -> Result<CrfParams> {
    CrfParams::new(start.len(), to_f64(trans), to_f64(start), to_f64(stop))
}

impl<T: Scalar> CustomOp<T> for CrfNll {
    fn name(&self) -> &'static str {
        "crf_nll"
    }

    fn backward(&self, inputs: &[&Tensor<T>], _output: &Tensor<T>, grad: &Tensor<T>) -> Vec<Option<Tensor<T>>> {
        let crf = params_of(inputs[1], inputs[2], inputs[3]).expect("checked in forward");
        let grads = crf
            .nll_gradients(&to_f64(inputs[0]), &self.gold)
            .expect("checked in forward");
        let up = grad.item().to_f64_lossy();
        grads
            .iter()
            .zip(inputs)
            .map(|(d, x)| {
                let data = d.iter().map(|v| T::lit(v * up)).collect();
                Some(Tensor::new(x.shape().to_vec(), data).expect("gradient shape"))
            })
            .collect()
    }
}

/// `[1, 1]` node holding `log Z - score(gold)` for `[L, T]` emissions,
/// `[T, T]` transitions and `[1, T]` start/stop potentials.
pub fn crf_nll<T: Scalar>(g: &mut Graph<T>, emissions: Var, transitions: Var, start: Var, stop: Var, gold: &[usize]) -> Result<Var> {
    let t = g.cols(emissions);
    if g.shape(transitions) != [t, t] || g.shape(start) != [1, t] || g.shape(stop) != [1, t] {
        return Err(TaggerError::Input("CRF potential shapes do not match the emissions".into()));
    }
    if g.rows(emissions) != gold.len() {
        return Err(TaggerError::LengthMismatch(gold.len(), g.rows(emissions)));
    }
    if gold.iter().any(|&y| y >= t) {
        return Err(TaggerError::Input("gold tag out of range".into()));
    }
    let crf = params_of(g.value(transitions), g.value(start), g.value(stop))?;
    let nll = crf.nll(&to_f64(g.value(emissions)), gold)?;
    Ok(g.custom(
        &[emissions, transitions, start, stop],
        Tensor::matrix(1, 1, vec![T::lit(nll)]),
        Box::new(CrfNll { gold: gold.to_vec() }),
    ))
}
