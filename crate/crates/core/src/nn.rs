//! Layers shared by the language models and the task models.
//!
//! Recurrent layers work time-major: a sequence is a slice of `[B, d]`
//! nodes, one per step, with a per-step row mask for ragged batches. Rows
//! whose mask is off keep their previous state, so padding never leaks into
//! real positions.

use rand::Rng;

use crate::graph::{Graph, Var};
use crate::params::{ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Box-Muller standard normal sample.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniform `±1/sqrt(fan_in)` initialisation of a `[fan_in, fan_out]` map.
pub fn init_fan_in<T: Scalar, R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor<T> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    init_uniform(rng, &[fan_in, fan_out], bound)
}

pub fn init_uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R, shape: &[usize], bound: f64) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| T::lit((rng.random::<f64>() * 2.0 - 1.0) * bound))
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape")
}

pub fn init_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R, shape: &[usize], std: f64) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::lit(standard_normal(rng) * std)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape")
}

/// `n × n` orthogonal matrix from Gram-Schmidt on a Gaussian sample.
pub fn orthogonal<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Tensor<T> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        for q in &rows {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        rows.push(v);
    }
    Tensor::matrix(n, n, rows.into_iter().flatten().map(T::lit).collect())
}

/// `[n, k·n]` recurrent weights made of `k` orthogonal blocks side by side.
pub fn orthogonal_blocks<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Tensor<T> {
    let blocks: Vec<Tensor<T>> = (0..k).map(|_| orthogonal(rng, n)).collect();
    let mut data = Vec::with_capacity(n * n * k);
    for r in 0..n {
        for b in &blocks {
            data.extend_from_slice(b.row_slice(r));
        }
    }
    Tensor::matrix(n, n * k, data)
}

/// Affine map `x W + b`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl Linear {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        input_dim: usize,
        output_dim: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let weight = store.add(format!("{}.weight", name), init_fan_in(rng, input_dim, output_dim));
        let bias = bias.then(|| store.add(format!("{}.bias", name), Tensor::zeros(&[1, output_dim])));
        Linear {
            weight,
            bias,
            input_dim,
            output_dim,
        }
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: Var) -> Var {
        let w = g.param(store, self.weight);
        let y = g.matmul(x, w);
        match self.bias {
            Some(b) => {
                let b = g.param(store, b);
                g.add_row(y, b)
            }
            None => y,
        }
    }
}

/// Lookup table.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub table: ParamId,
    pub rows: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        rows: usize,
        dim: usize,
        rng: &mut R,
    ) -> Self {
        let table = store.add(name, init_normal(rng, &[rows, dim], 1.0 / (dim as f64).sqrt()));
        Embedding { table, rows, dim }
    }

    /// Uses `init` (shape `[rows, dim]`) as the initial table.
    pub fn from_tensor<T: Scalar>(store: &mut ParamStore<T>, name: &str, init: Tensor<T>) -> Self {
        let (rows, dim) = (init.rows(), init.cols());
        let table = store.add(name, init);
        Embedding { table, rows, dim }
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, store: &ParamStore<T>, ids: &[usize]) -> Var {
        let t = g.param(store, self.table);
        g.gather_rows(t, ids)
    }
}

/// Hidden and cell state of a recurrent layer, each `[B, d]`.
#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

/// Detached copy of an [`LstmState`], used to carry state between graphs.
#[derive(Clone, Debug, PartialEq)]
pub struct StateValues<T: Scalar> {
    pub h: Tensor<T>,
    pub c: Tensor<T>,
}

impl<T: Scalar> StateValues<T> {
    pub fn zeros(batch: usize, hidden: usize, cell: usize) -> Self {
        StateValues {
            h: Tensor::zeros(&[batch, hidden]),
            c: Tensor::zeros(&[batch, cell]),
        }
    }

    pub fn from_graph(g: &Graph<T>, s: LstmState) -> Self {
        StateValues {
            h: g.value(s.h).clone(),
            c: g.value(s.c).clone(),
        }
    }

    pub fn to_graph(&self, g: &mut Graph<T>) -> LstmState {
        LstmState {
            h: g.constant(self.h.clone()),
            c: g.constant(self.c.clone()),
        }
    }
}

/// Which recurrent cell a layer uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    /// Plain LSTM.
    Lstm,
    /// LSTM whose output is projected to a smaller state size.
    Projected { projection: usize },
    /// LSTM with a highway gate between the layer input and its output.
    Highway,
}

/// One directional LSTM layer.
#[derive(Clone, Debug)]
pub struct LstmLayer {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden: usize,
    w_input: ParamId,
    w_state: ParamId,
    bias: ParamId,
    w_proj: Option<ParamId>,
}

impl LstmLayer {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        kind: CellKind,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let gates = match kind {
            CellKind::Highway => 5,
            _ => 4,
        };
        let input_width = match kind {
            CellKind::Highway => 6 * hidden,
            _ => 4 * hidden,
        };
        let state_dim = match kind {
            CellKind::Projected { projection } => projection,
            _ => hidden,
        };
        let w_input = store.add(
            format!("{}.w_input", name),
            init_fan_in(rng, input_dim, input_width),
        );
        let w_state_t: Tensor<T> = if state_dim == hidden {
            orthogonal_blocks(rng, hidden, gates)
        } else {
            init_fan_in(rng, state_dim, gates * hidden)
        };
        let w_state = store.add(format!("{}.w_state", name), w_state_t);
        // Gate order: input, forget, candidate, output[, highway]. Forget bias 1.
        let mut b = vec![T::zero(); input_width];
        for x in &mut b[hidden..2 * hidden] {
            *x = T::one();
        }
        let bias = store.add(format!("{}.bias", name), Tensor::row(b));
        let w_proj = match kind {
            CellKind::Projected { projection } => Some(store.add(
                format!("{}.w_proj", name),
                init_fan_in(rng, hidden, projection),
            )),
            _ => None,
        };
        LstmLayer {
            kind,
            input_dim,
            hidden,
            w_input,
            w_state,
            bias,
            w_proj,
        }
    }

    /// Width of the layer output (and of `h`).
    pub fn output_dim(&self) -> usize {
        match self.kind {
            CellKind::Projected { projection } => projection,
            _ => self.hidden,
        }
    }

    pub fn zero_state<T: Scalar>(&self, g: &mut Graph<T>, batch: usize) -> LstmState {
        LstmState {
            h: g.constant(Tensor::zeros(&[batch, self.output_dim()])),
            c: g.constant(Tensor::zeros(&[batch, self.hidden])),
        }
    }

    /// One step. `h_dropout` is an optional constant mask applied to the
    /// previous hidden state before the recurrent product.
    pub fn step<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        x: Var,
        prev: LstmState,
        h_dropout: Option<Var>,
    ) -> LstmState {
        let hsz = self.hidden;
        let wi = g.param(store, self.w_input);
        let ws = g.param(store, self.w_state);
        let b = g.param(store, self.bias);
        let h_prev = match h_dropout {
            Some(m) => g.mul(prev.h, m),
            None => prev.h,
        };
        let xin = g.matmul(x, wi);
        let xin = g.add_row(xin, b);
        let hs = g.matmul(h_prev, ws);
        let (gates, highway_proj) = match self.kind {
            CellKind::Highway => {
                let xg = g.slice_cols(xin, 0, 5 * hsz);
                let hp = g.slice_cols(xin, 5 * hsz, hsz);
                (g.add(xg, hs), Some(hp))
            }
            _ => (g.add(xin, hs), None),
        };
        let i = g.slice_cols(gates, 0, hsz);
        let i = g.sigmoid(i);
        let f = g.slice_cols(gates, hsz, hsz);
        let f = g.sigmoid(f);
        let cand = g.slice_cols(gates, 2 * hsz, hsz);
        let cand = g.tanh(cand);
        let o = g.slice_cols(gates, 3 * hsz, hsz);
        let o = g.sigmoid(o);
        let fc = g.mul(f, prev.c);
        let ig = g.mul(i, cand);
        let c = g.add(fc, ig);
        let tc = g.tanh(c);
        let mut h = g.mul(o, tc);
        if let Some(hp) = highway_proj {
            let r = g.slice_cols(gates, 4 * hsz, hsz);
            let r = g.sigmoid(r);
            let kept = g.mul(r, h);
            let rest = g.one_minus(r);
            let carried = g.mul(rest, hp);
            h = g.add(kept, carried);
        }
        if let Some(p) = self.w_proj {
            let wp = g.param(store, p);
            h = g.matmul(h, wp);
        }
        LstmState { h, c }
    }

    /// Runs over a time-major sequence. `masks[t][b]` says whether row `b`
    /// has a real token at step `t`; masked rows keep their state. Returns
    /// the per-step outputs (in input order) and the final state.
    #[allow(clippy::too_many_arguments)]
    pub fn run<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        inputs: &[Var],
        masks: Option<&[Vec<bool>]>,
        reverse: bool,
        init: Option<LstmState>,
        h_dropout: Option<Var>,
    ) -> (Vec<Var>, LstmState) {
        let batch = inputs.first().map_or(0, |&x| g.rows(x));
        let mut state = match init {
            Some(s) => s,
            None => self.zero_state(g, batch),
        };
        let steps = inputs.len();
        let mut outputs = vec![None; steps];
        for k in 0..steps {
            let t = if reverse { steps - 1 - k } else { k };
            let next = self.step(g, store, inputs[t], state, h_dropout);
            state = match masks {
                Some(m) if m[t].iter().any(|&x| !x) => LstmState {
                    h: g.select_rows(&m[t], next.h, state.h),
                    c: g.select_rows(&m[t], next.c, state.c),
                },
                _ => next,
            };
            outputs[t] = Some(state.h);
        }
        (outputs.into_iter().map(|o| o.expect("step output")).collect(), state)
    }
}

/// Layout of a ragged batch of sequences for time-major processing.
#[derive(Clone, Debug)]
pub struct SeqBatch {
    pub lengths: Vec<usize>,
    offsets: Vec<usize>,
    pub max_len: usize,
}

impl SeqBatch {
    pub fn new(lengths: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(lengths.len());
        let mut acc = 0;
        for &l in lengths {
            offsets.push(acc);
            acc += l;
        }
        SeqBatch {
            lengths: lengths.to_vec(),
            offsets,
            max_len: lengths.iter().copied().max().unwrap_or(0),
        }
    }

    pub fn batch_size(&self) -> usize {
        self.lengths.len()
    }

    pub fn total(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// `masks[t][b]`
    pub fn masks(&self) -> Vec<Vec<bool>> {
        (0..self.max_len)
            .map(|t| self.lengths.iter().map(|&l| t < l).collect())
            .collect()
    }

    /// Splits `flat: [total, d]` (sequences stacked in batch order) into
    /// per-step `[B, d]` inputs. Padding rows repeat row 0 and are masked.
    pub fn to_time_major<T: Scalar>(&self, g: &mut Graph<T>, flat: Var) -> Vec<Var> {
        (0..self.max_len)
            .map(|t| {
                let idx: Vec<usize> = self
                    .lengths
                    .iter()
                    .zip(&self.offsets)
                    .map(|(&l, &o)| if t < l { o + t } else { 0 })
                    .collect();
                g.gather_rows(flat, &idx)
            })
            .collect()
    }

    /// Inverse of [`SeqBatch::to_time_major`]: drops padding and returns
    /// `[total, d]` in batch order.
    pub fn from_time_major<T: Scalar>(&self, g: &mut Graph<T>, steps: &[Var]) -> Var {
        let b = self.batch_size();
        let stacked = g.concat_rows(steps);
        let mut idx = Vec::with_capacity(self.total());
        for (s, &l) in self.lengths.iter().enumerate() {
            for t in 0..l {
                idx.push(t * b + s);
            }
        }
        g.gather_rows(stacked, &idx)
    }

    /// Row range of sequence `s` inside a `[total, d]` matrix.
    pub fn range(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s] + self.lengths[s]
    }
}

/// Bidirectional multi-layer LSTM over a ragged batch. Each layer runs a
/// forward and a backward LSTM and concatenates their outputs.
#[derive(Clone, Debug)]
pub struct StackedBiLstm {
    pub layers: Vec<(LstmLayer, LstmLayer)>,
    pub recurrent_dropout: f64,
    pub layer_dropout: f64,
}

impl StackedBiLstm {
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        kind: CellKind,
        input_dim: usize,
        hidden: usize,
        layers: usize,
        recurrent_dropout: f64,
        layer_dropout: f64,
        rng: &mut R,
    ) -> Self {
        let mut out = Vec::with_capacity(layers);
        let mut d = input_dim;
        for l in 0..layers {
            let f = LstmLayer::new(store, &format!("{}.{}.fwd", name, l), kind, d, hidden, rng);
            let b = LstmLayer::new(store, &format!("{}.{}.bwd", name, l), kind, d, hidden, rng);
            d = f.output_dim() + b.output_dim();
            out.push((f, b));
        }
        StackedBiLstm {
            layers: out,
            recurrent_dropout,
            layer_dropout,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.layers
            .last()
            .map_or(0, |(f, b)| f.output_dim() + b.output_dim())
    }

    /// `flat: [total, d]` → `[total, 2h]`. Dropout is applied only when an
    /// rng is given.
    pub fn forward<T: Scalar, R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        batch: &SeqBatch,
        flat: Var,
        mut rng: Option<&mut R>,
    ) -> Var {
        let masks = batch.masks();
        let mut steps = batch.to_time_major(g, flat);
        for (li, (fwd, bwd)) in self.layers.iter().enumerate() {
            if li > 0 {
                if let Some(r) = rng.as_deref_mut() {
                    steps = steps
                        .iter()
                        .map(|&x| g.dropout(x, self.layer_dropout, r))
                        .collect();
                }
            }
            let mut outs = Vec::with_capacity(2);
            for (layer, reverse) in [(fwd, false), (bwd, true)] {
                let hd = match rng.as_deref_mut() {
                    Some(r) if self.recurrent_dropout > 0.0 => {
                        let m = g.dropout_mask(
                            vec![batch.batch_size(), layer.output_dim()],
                            self.recurrent_dropout,
                            r,
                        );
                        Some(g.constant(m))
                    }
                    _ => None,
                };
                let (o, _) = layer.run(g, store, &steps, Some(&masks), reverse, None, hd);
                outs.push(o);
            }
            steps = outs[0]
                .iter()
                .zip(&outs[1])
                .map(|(&a, &b)| g.concat_cols(&[a, b]))
                .collect();
        }
        batch.from_time_major(g, &steps)
    }
}

/// Unidirectional layers whose direction flips from one layer to the next,
/// starting forward.
#[derive(Clone, Debug)]
pub struct AlternatingLstm {
    pub layers: Vec<LstmLayer>,
    pub recurrent_dropout: f64,
}

impl AlternatingLstm {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        input_dim: usize,
        hidden: usize,
        layers: usize,
        recurrent_dropout: f64,
        rng: &mut R,
    ) -> Self {
        let mut out = Vec::with_capacity(layers);
        let mut d = input_dim;
        for l in 0..layers {
            let layer = LstmLayer::new(store, &format!("{}.{}", name, l), CellKind::Highway, d, hidden, rng);
            d = layer.output_dim();
            out.push(layer);
        }
        AlternatingLstm {
            layers: out,
            recurrent_dropout,
        }
    }

    /// Direction of layer `l`: `false` = left-to-right.
    pub fn is_reversed(layer: usize) -> bool {
        layer % 2 == 1
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, LstmLayer::output_dim)
    }

    pub fn forward<T: Scalar, R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        batch: &SeqBatch,
        flat: Var,
        mut rng: Option<&mut R>,
    ) -> Var {
        let masks = batch.masks();
        let mut steps = batch.to_time_major(g, flat);
        for (li, layer) in self.layers.iter().enumerate() {
            let hd = match rng.as_deref_mut() {
                Some(r) if self.recurrent_dropout > 0.0 => {
                    let m = g.dropout_mask(
                        vec![batch.batch_size(), layer.output_dim()],
                        self.recurrent_dropout,
                        r,
                    );
                    Some(g.constant(m))
                }
                _ => None,
            };
            let (o, _) = layer.run(g, store, &steps, Some(&masks), Self::is_reversed(li), None, hd);
            steps = o;
        }
        batch.from_time_major(g, &steps)
    }
}
