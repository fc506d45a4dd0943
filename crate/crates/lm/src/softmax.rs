//! Output layer with full and sampled softmax losses.

use rand::Rng;

use polyglot_core::nn::init_fan_in;
use polyglot_core::{Graph, ParamId, ParamStore, Scalar, Tensor, Var};

/// Logit added to sampled classes that coincide with a row's target.
const HIT_PENALTY: f64 = -1e9;

/// Log-uniform (Zipfian) distribution over ids `0..vocab`, which assumes
/// ids are sorted by decreasing frequency.
#[derive(Clone, Copy, Debug)]
pub struct LogUniformSampler {
    pub vocab: usize,
}

/// Distinct sampled classes with their expected counts under the
/// sampling procedure.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledClasses {
    pub classes: Vec<usize>,
    pub expected_counts: Vec<f64>,
    pub tries: usize,
}

impl LogUniformSampler {
    pub fn new(vocab: usize) -> Self {
        LogUniformSampler { vocab }
    }

    pub fn probability(&self, k: usize) -> f64 {
        ((k as f64 + 2.0) / (k as f64 + 1.0)).ln() / (self.vocab as f64 + 1.0).ln()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let k = ((u * (self.vocab as f64 + 1.0).ln()).exp() - 1.0) as usize;
        k.min(self.vocab - 1)
    }

    /// Draws until `n` distinct classes are seen (`n < vocab`).
    pub fn sample_unique<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> SampledClasses {
        assert!(
            n < self.vocab,
            "cannot draw {} distinct classes from {}",
            n,
            self.vocab
        );
        let mut seen = vec![false; self.vocab];
        let mut classes = Vec::with_capacity(n);
        let mut tries = 0;
        while classes.len() < n {
            let k = self.draw(rng);
            tries += 1;
            if !seen[k] {
                seen[k] = true;
                classes.push(k);
            }
        }
        let expected_counts = classes
            .iter()
            .map(|&k| -(tries as f64 * (-self.probability(k)).ln_1p()).exp_m1())
            .collect();
        SampledClasses {
            classes,
            expected_counts,
            tries,
        }
    }
}

/// How the normalizer is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoftmaxMode {
    Full,
    /// Sampled softmax with this many distinct negatives; falls back to
    /// `Full` when the vocabulary is not larger.
    Sampled(usize),
    /// The sampled-softmax path with every class in the sample and no
    /// correction. Mathematically equal to `Full`.
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct SoftmaxLayer {
    /// `[V, d]`
    pub weight: ParamId,
    /// `[V, 1]`
    pub bias: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl SoftmaxLayer {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        vocab: usize,
        dim: usize,
        rng: &mut R,
    ) -> Self {
        let w: Tensor<T> = init_fan_in(rng, dim, vocab).transpose();
        let weight = store.add(format!("{}.weight", name), w);
        let bias = store.add(format!("{}.bias", name), Tensor::zeros(&[vocab, 1]));
        SoftmaxLayer {
            weight,
            bias,
            vocab,
            dim,
        }
    }

    /// Logits over the whole vocabulary, `[n, V]`.
    pub fn logits<T: Scalar>(&self, g: &mut Graph<T>, store: &ParamStore<T>, h: Var) -> Var {
        let w = g.param(store, self.weight);
        let b = g.param(store, self.bias);
        let z = g.matmul_nt(h, w);
        let bt = g.transpose(b);
        g.add_row(z, bt)
    }

    /// Per-row negative log-likelihoods `[n, 1]` of `targets`.
    pub fn losses<T: Scalar, R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        h: Var,
        targets: &[usize],
        mode: SoftmaxMode,
        rng: &mut R,
    ) -> Var {
        match mode {
            SoftmaxMode::Sampled(k) if k < self.vocab => {
                let s = LogUniformSampler::new(self.vocab).sample_unique(k, rng);
                let shift: Vec<f64> = s.expected_counts.iter().map(|c| -c.ln()).collect();
                self.sampled_losses(g, store, h, targets, &s.classes, &shift)
            }
            SoftmaxMode::Exhaustive => {
                let all: Vec<usize> = (0..self.vocab).collect();
                self.sampled_losses(g, store, h, targets, &all, &vec![0.0; self.vocab])
            }
            _ => {
                let z = self.logits(g, store, h);
                g.cross_entropy(z, targets)
            }
        }
    }

    /// The target logit sits in column 0; sampled columns get `shift`
    /// added and are masked out where they equal the row's target.
    fn sampled_losses<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        h: Var,
        targets: &[usize],
        classes: &[usize],
        shift: &[f64],
    ) -> Var {
        let n = targets.len();
        let w = g.param(store, self.weight);
        let b = g.param(store, self.bias);

        let wt = g.gather_rows(w, targets);
        let bt = g.gather_rows(b, targets);
        let true_logit = g.row_dot(h, wt);
        let true_logit = g.add(true_logit, bt);

        let ws = g.gather_rows(w, classes);
        let bs = g.gather_rows(b, classes);
        let bs = g.transpose(bs);
        let z = g.matmul_nt(h, ws);
        let z = g.add_row(z, bs);
        let shift = g.constant(Tensor::from_f64(&[1, classes.len()], shift));
        let z = g.add_row(z, shift);
        let mut hits = Tensor::zeros(&[n, classes.len()]);
        let mut any = false;
        for (i, &t) in targets.iter().enumerate() {
            for (j, &c) in classes.iter().enumerate() {
                if c == t {
                    hits.set(i, j, T::lit(HIT_PENALTY));
                    any = true;
                }
            }
        }
        let z = if any {
            let m = g.constant(hits);
            g.add(z, m)
        } else {
            z
        };
        let all = g.concat_cols(&[true_logit, z]);
        g.cross_entropy(all, &vec![0; n])
    }
}

/// Mean of `losses: [n, 1]` over rows where `mask` is set.
pub fn masked_mean<T: Scalar>(g: &mut Graph<T>, losses: Var, mask: &[bool]) -> Var {
    let count = mask.iter().filter(|&&m| m).count().max(1);
    let m = Tensor::matrix(
        mask.len(),
        1,
        mask.iter()
            .map(|&x| if x { T::one() } else { T::zero() })
            .collect(),
    );
    let m = g.constant(m);
    let kept = g.mul(losses, m);
    let s = g.sum(kept);
    g.scale(s, T::lit(1.0 / count as f64))
}

/// Mean sampled-softmax loss of `h: [n, d]` against `targets`.
pub fn sampled_softmax_loss<T: Scalar, R: Rng + ?Sized>(
    g: &mut Graph<T>,
    store: &ParamStore<T>,
    layer: &SoftmaxLayer,
    h: Var,
    targets: &[usize],
    negatives: usize,
    rng: &mut R,
) -> Var {
    let l = layer.losses(g, store, h, targets, SoftmaxMode::Sampled(negatives), rng);
    g.mean(l)
}
