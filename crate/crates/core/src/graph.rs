//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every operation as a node in creation order, which is
//! already a topological order. [`Graph::backward`] walks the tape once in
//! reverse, so each node is visited exactly once and gradients of values
//! used several times are summed.
//!
//! Operations panic on shape mismatches: those are programming errors in
//! model code, not recoverable conditions.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;

use crate::error::{Result, TensorError};
use crate::kernels::{matmul_acc, matmul_nt_acc, matmul_tn_acc};
use crate::params::{ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Backward rule of an operation defined outside this crate.
///
/// `backward` receives the input values, the forward output and the gradient
/// flowing into the output, and returns one gradient per input (`None` for
/// inputs that are not differentiable).
pub trait CustomOp<T: Scalar> {
    fn name(&self) -> &'static str;

    fn backward(
        &self,
        inputs: &[&Tensor<T>],
        output: &Tensor<T>,
        grad: &Tensor<T>,
    ) -> Vec<Option<Tensor<T>>>;
}

enum Op<T: Scalar> {
    Constant,
    Leaf,
    Param(ParamId),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulScalar(Var, Var),
    Affine(Var, T),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Exp(Var),
    Log(Var),
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    Transpose(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    GatherRows(Var, Vec<usize>),
    SelectRows(Var, Var, Vec<bool>),
    Sum(Var),
    Mean(Var),
    Softmax(Var),
    LogSoftmax(Var),
    CrossEntropy(Var, Vec<usize>, Tensor<T>),
    RowDot(Var, Var),
    Conv1d {
        input: Var,
        weight: Var,
        bias: Var,
        seq_len: usize,
        width: usize,
    },
    MaxPoolGroups(Var, Vec<usize>),
    Bilinear(Var, Var, Var),
    Custom(Vec<Var>, Box<dyn CustomOp<T>>),
}

impl<T: Scalar> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Constant => "constant",
            Op::Leaf => "leaf",
            Op::Param(_) => "param",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddRow(..) => "add_row",
            Op::MulScalar(..) => "mul_scalar",
            Op::Affine(..) => "affine",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Relu(_) => "relu",
            Op::Exp(_) => "exp",
            Op::Log(_) => "log",
            Op::MatMul(..) => "matmul",
            Op::MatMulNT(..) => "matmul_nt",
            Op::Transpose(_) => "transpose",
            Op::ConcatCols(_) => "concat_cols",
            Op::ConcatRows(_) => "concat_rows",
            Op::SliceCols(..) => "slice_cols",
            Op::SliceRows(..) => "slice_rows",
            Op::GatherRows(..) => "gather_rows",
            Op::SelectRows(..) => "select_rows",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::Softmax(_) => "softmax",
            Op::LogSoftmax(_) => "log_softmax",
            Op::CrossEntropy(..) => "cross_entropy",
            Op::RowDot(..) => "row_dot",
            Op::Conv1d { .. } => "conv1d",
            Op::MaxPoolGroups(..) => "max_pool_groups",
            Op::Bilinear(..) => "bilinear",
            Op::Custom(_, op) => op.name(),
        }
    }
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Gradients produced by [`Graph::backward`], indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

/// A computation tape.
pub struct Graph<T: Scalar> {
    nodes: Vec<Node<T>>,
    bound: HashMap<ParamId, Var>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> fmt::Debug for Graph<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) {
    if a.shape() != b.shape() {
        panic!(
            "{}",
            TensorError::ShapeMismatch {
                op,
                left: a.shape().to_vec(),
                right: b.shape().to_vec()
            }
        );
    }
}

fn zip_map<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("same shape")
}

fn softmax_rows<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let cols = x.cols();
    let mut out = x.clone();
    for row in out.data_mut().chunks_mut(cols) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    out
}

fn log_softmax_rows<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let cols = x.cols();
    let mut out = x.clone();
    for row in out.data_mut().chunks_mut(cols) {
        let lse = crate::scalar::log_sum_exp(row);
        for v in row.iter_mut() {
            *v = *v - lse;
        }
    }
    out
}

fn im2col<T: Scalar>(x: &Tensor<T>, seq_len: usize, width: usize) -> (Tensor<T>, usize) {
    let c = x.cols();
    let n = x.rows() / seq_len;
    let out_len = seq_len + 1 - width;
    let mut data = Vec::with_capacity(n * out_len * width * c);
    for s in 0..n {
        for p in 0..out_len {
            let start = (s * seq_len + p) * c;
            data.extend_from_slice(&x.data()[start..start + width * c]);
        }
    }
    (Tensor::matrix(n * out_len, width * c, data), out_len)
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            bound: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        let needs_grad = match &op {
            Op::Constant => false,
            Op::Leaf | Op::Param(_) => true,
            _ => self.parents(&op).iter().any(|p| self.nodes[p.0].needs_grad),
        };
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn parents(&self, op: &Op<T>) -> Vec<Var> {
        match op {
            Op::Constant | Op::Leaf | Op::Param(_) => vec![],
            Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddRow(a, b)
            | Op::MulScalar(a, b)
            | Op::MatMul(a, b)
            | Op::MatMulNT(a, b)
            | Op::RowDot(a, b)
            | Op::SelectRows(a, b, _) => vec![*a, *b],
            Op::Affine(a, _)
            | Op::Tanh(a)
            | Op::Sigmoid(a)
            | Op::Relu(a)
            | Op::Exp(a)
            | Op::Log(a)
            | Op::Transpose(a)
            | Op::SliceCols(a, _)
            | Op::SliceRows(a, _)
            | Op::GatherRows(a, _)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::Softmax(a)
            | Op::LogSoftmax(a)
            | Op::CrossEntropy(a, ..)
            | Op::MaxPoolGroups(a, _) => vec![*a],
            Op::ConcatCols(vs) | Op::ConcatRows(vs) | Op::Custom(vs, _) => vs.clone(),
            Op::Conv1d {
                input,
                weight,
                bias,
                ..
            } => vec![*input, *weight, *bias],
            Op::Bilinear(a, b, u) => vec![*a, *b, *u],
        }
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn rows(&self, v: Var) -> usize {
        self.nodes[v.0].value.rows()
    }

    pub fn cols(&self, v: Var) -> usize {
        self.nodes[v.0].value.cols()
    }

    /// The parameter bound at `v`, if `v` is a parameter node.
    pub fn param_id(&self, v: Var) -> Option<ParamId> {
        match self.nodes[v.0].op {
            Op::Param(id) => Some(id),
            _ => None,
        }
    }

    /// Name of the operation that produced `v`.
    pub fn op_name(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.name()
    }

    /// A value that never receives gradients.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Constant)
    }

    /// A free input that receives gradients (used by gradient checks).
    pub fn leaf(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf)
    }

    /// Binds a stored parameter. Binding the same parameter twice returns
    /// the same node.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(&v) = self.bound.get(&id) {
            return v;
        }
        let v = self.push(store.value(id).clone(), Op::Param(id));
        self.bound.insert(id, v);
        v
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        same_shape("add", self.value(a), self.value(b));
        let out = zip_map(self.value(a), self.value(b), |x, y| x + y);
        self.push(out, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        same_shape("sub", self.value(a), self.value(b));
        let out = zip_map(self.value(a), self.value(b), |x, y| x - y);
        self.push(out, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        same_shape("mul", self.value(a), self.value(b));
        let out = zip_map(self.value(a), self.value(b), |x, y| x * y);
        self.push(out, Op::Mul(a, b))
    }

    /// Adds a `[1, n]` row to every row of `a: [m, n]`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (av, rv) = (self.value(a), self.value(row));
        assert!(
            rv.rows() == 1 && rv.cols() == av.cols(),
            "add_row: {:?} + {:?}",
            av.shape(),
            rv.shape()
        );
        let n = av.cols();
        let mut out = av.clone();
        if n > 0 {
            for r in out.data_mut().chunks_mut(n) {
                for (x, &b) in r.iter_mut().zip(rv.data()) {
                    *x = *x + b;
                }
            }
        }
        self.push(out, Op::AddRow(a, row))
    }

    /// Multiplies `a` by the single element of `s: [1, 1]`.
    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Var {
        assert_eq!(self.value(s).len(), 1, "mul_scalar expects a 1x1 factor");
        let k = self.value(s).item();
        let out = self.value(a).map(|x| x * k);
        self.push(out, Op::MulScalar(a, s))
    }

    /// `scale * a + offset` with constant coefficients.
    pub fn affine(&mut self, a: Var, scale: T, offset: T) -> Var {
        let out = self.value(a).map(|x| scale * x + offset);
        self.push(out, Op::Affine(a, scale))
    }

    pub fn scale(&mut self, a: Var, k: T) -> Var {
        self.affine(a, k, T::zero())
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.affine(a, -T::one(), T::zero())
    }

    /// `1 - a`
    pub fn one_minus(&mut self, a: Var) -> Var {
        self.affine(a, -T::one(), T::one())
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.tanh());
        self.push(out, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| {
            if x >= T::zero() {
                T::one() / (T::one() + (-x).exp())
            } else {
                let e = x.exp();
                e / (T::one() + e)
            }
        });
        self.push(out, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(T::zero()));
        self.push(out, Op::Relu(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.exp());
        self.push(out, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.ln());
        self.push(out, Op::Log(a))
    }

    /// `[m, k] · [k, n]`
    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k, n) = (av.rows(), av.cols(), bv.cols());
        assert_eq!(k, bv.rows(), "matmul: {:?} x {:?}", av.shape(), bv.shape());
        let mut out = Tensor::zeros(&[m, n]);
        matmul_acc(av.data(), bv.data(), out.data_mut(), m, k, n);
        self.push(out, Op::MatMul(a, b))
    }

    /// `[m, k] · [n, k]ᵀ`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k, n) = (av.rows(), av.cols(), bv.rows());
        assert_eq!(k, bv.cols(), "matmul_nt: {:?} x {:?}ᵀ", av.shape(), bv.shape());
        let mut out = Tensor::zeros(&[m, n]);
        matmul_nt_acc(av.data(), bv.data(), out.data_mut(), m, k, n);
        self.push(out, Op::MatMulNT(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let rows = self.rows(parts[0]);
        let widths: Vec<usize> = parts.iter().map(|&p| self.cols(p)).collect();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                let v = self.value(p);
                assert_eq!(v.rows(), rows, "concat_cols: row count mismatch");
                data.extend_from_slice(v.row_slice(r));
            }
        }
        self.push(Tensor::matrix(rows, total, data), Op::ConcatCols(parts.to_vec()))
    }

    /// Stacks matrices with equal column counts vertically.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_rows of nothing");
        let cols = self.cols(parts[0]);
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.cols(), cols, "concat_rows: column count mismatch");
            data.extend_from_slice(v.data());
            rows += v.rows();
        }
        self.push(Tensor::matrix(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    /// Columns `start..start + len`.
    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let av = self.value(a);
        assert!(start + len <= av.cols(), "slice_cols out of range");
        let rows = av.rows();
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&av.row_slice(r)[start..start + len]);
        }
        self.push(Tensor::matrix(rows, len, data), Op::SliceCols(a, start))
    }

    /// Rows `start..start + len`.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let av = self.value(a);
        assert!(start + len <= av.rows(), "slice_rows out of range");
        let c = av.cols();
        let data = av.data()[start * c..(start + len) * c].to_vec();
        self.push(Tensor::matrix(len, c, data), Op::SliceRows(a, start))
    }

    /// Row lookup; also the embedding-table operation.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Var {
        let av = self.value(a);
        let c = av.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            assert!(i < av.rows(), "gather_rows: index {} >= {}", i, av.rows());
            data.extend_from_slice(av.row_slice(i));
        }
        self.push(Tensor::matrix(idx.len(), c, data), Op::GatherRows(a, idx.to_vec()))
    }

    /// Row `i` of the result is row `i` of `a` where `mask[i]`, else of `b`.
    pub fn select_rows(&mut self, mask: &[bool], a: Var, b: Var) -> Var {
        same_shape("select_rows", self.value(a), self.value(b));
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(mask.len(), av.rows(), "select_rows mask length");
        let mut data = Vec::with_capacity(av.len());
        for (r, &m) in mask.iter().enumerate() {
            data.extend_from_slice(if m { av.row_slice(r) } else { bv.row_slice(r) });
        }
        let out = Tensor::new(av.shape().to_vec(), data).expect("same shape");
        self.push(out, Op::SelectRows(a, b, mask.to_vec()))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let s = v.sum() / T::lit(v.len() as f64);
        self.push(Tensor::scalar(s), Op::Mean(a))
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let out = softmax_rows(self.value(a));
        self.push(out, Op::Softmax(a))
    }

    pub fn log_softmax(&mut self, a: Var) -> Var {
        let out = log_softmax_rows(self.value(a));
        self.push(out, Op::LogSoftmax(a))
    }

    /// Per-row `-log softmax(logits)[target]`, shape `[m, 1]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Var {
        let lv = self.value(logits);
        assert_eq!(lv.rows(), targets.len(), "cross_entropy: one target per row");
        let logp = log_softmax_rows(lv);
        let losses: Vec<T> = targets
            .iter()
            .enumerate()
            .map(|(r, &t)| {
                assert!(t < lv.cols(), "cross_entropy: target out of range");
                -logp.at(r, t)
            })
            .collect();
        let probs = logp.map(|x| x.exp());
        let n = losses.len();
        self.push(
            Tensor::matrix(n, 1, losses),
            Op::CrossEntropy(logits, targets.to_vec(), probs),
        )
    }

    /// Per-row dot product of two equally shaped matrices, shape `[m, 1]`.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Var {
        same_shape("row_dot", self.value(a), self.value(b));
        let (av, bv) = (self.value(a), self.value(b));
        let out: Vec<T> = (0..av.rows())
            .map(|r| {
                av.row_slice(r)
                    .iter()
                    .zip(bv.row_slice(r))
                    .map(|(&x, &y)| x * y)
                    .sum()
            })
            .collect();
        let m = out.len();
        self.push(Tensor::matrix(m, 1, out), Op::RowDot(a, b))
    }

    /// Valid 1-d convolution over `N` stacked sequences of `seq_len` rows.
    ///
    /// `input: [N * seq_len, C]`, `weight: [width * C, F]`, `bias: [1, F]`,
    /// result `[N * (seq_len - width + 1), F]`.
    pub fn conv1d(&mut self, input: Var, weight: Var, bias: Var, seq_len: usize, width: usize) -> Var {
        let (iv, wv, bv) = (self.value(input), self.value(weight), self.value(bias));
        assert!(width >= 1 && width <= seq_len, "conv1d: width {} vs length {}", width, seq_len);
        assert_eq!(iv.rows() % seq_len, 0, "conv1d: rows not a multiple of seq_len");
        assert_eq!(wv.rows(), width * iv.cols(), "conv1d: weight rows");
        assert_eq!(bv.cols(), wv.cols(), "conv1d: bias width");
        let (cols, _) = im2col(iv, seq_len, width);
        let f = wv.cols();
        let m = cols.rows();
        let mut out = Tensor::zeros(&[m, f]);
        for r in 0..m {
            out.data_mut()[r * f..(r + 1) * f].copy_from_slice(bv.data());
        }
        matmul_acc(cols.data(), wv.data(), out.data_mut(), m, cols.cols(), f);
        self.push(
            out,
            Op::Conv1d {
                input,
                weight,
                bias,
                seq_len,
                width,
            },
        )
    }

    /// Column-wise maximum over consecutive groups of `group` rows.
    pub fn max_pool_groups(&mut self, a: Var, group: usize) -> Var {
        let av = self.value(a);
        assert!(group >= 1 && av.rows() % group == 0, "max_pool_groups: bad group size");
        let (n, f) = (av.rows() / group, av.cols());
        let mut out = Vec::with_capacity(n * f);
        let mut arg = Vec::with_capacity(n * f);
        for s in 0..n {
            for c in 0..f {
                let mut best = s * group;
                for r in s * group + 1..(s + 1) * group {
                    if av.at(r, c) > av.at(best, c) {
                        best = r;
                    }
                }
                out.push(av.at(best, c));
                arg.push(best);
            }
        }
        self.push(Tensor::matrix(n, f, out), Op::MaxPoolGroups(a, arg))
    }

    /// Per-row bilinear forms: `out[i, r] = a[i] · U_r · b[i]ᵀ` where `U_r`
    /// is the `r`-th `[p, q]` block of `u: [R * p, q]`.
    pub fn bilinear(&mut self, a: Var, b: Var, u: Var) -> Var {
        let (av, bv, uv) = (self.value(a), self.value(b), self.value(u));
        let (n, p, q) = (av.rows(), av.cols(), bv.cols());
        assert_eq!(bv.rows(), n, "bilinear: row mismatch");
        assert_eq!(uv.cols(), q, "bilinear: U columns");
        assert_eq!(uv.rows() % p.max(1), 0, "bilinear: U rows");
        let labels = if p == 0 { 0 } else { uv.rows() / p };
        let mut out = Tensor::zeros(&[n, labels]);
        let mut tmp = vec![T::zero(); n * q];
        for r in 0..labels {
            tmp.iter_mut().for_each(|x| *x = T::zero());
            let ur = &uv.data()[r * p * q..(r + 1) * p * q];
            matmul_acc(av.data(), ur, &mut tmp, n, p, q);
            for i in 0..n {
                let s: T = tmp[i * q..(i + 1) * q]
                    .iter()
                    .zip(bv.row_slice(i))
                    .map(|(&x, &y)| x * y)
                    .sum();
                out.set(i, r, s);
            }
        }
        self.push(out, Op::Bilinear(a, b, u))
    }

    /// Records an operation whose forward value was computed by the caller.
    pub fn custom(&mut self, inputs: &[Var], output: Tensor<T>, op: Box<dyn CustomOp<T>>) -> Var {
        self.push(output, Op::Custom(inputs.to_vec(), op))
    }

    /// Inverted dropout: zeroes entries with probability `p` and scales the
    /// survivors by `1 / (1 - p)`. Identity when `p == 0`.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, p: f64, rng: &mut R) -> Var {
        if p <= 0.0 {
            return a;
        }
        let mask = self.dropout_mask(self.value(a).shape().to_vec(), p, rng);
        let m = self.constant(mask);
        self.mul(a, m)
    }

    /// A constant inverted-dropout mask of the given shape.
    pub fn dropout_mask<R: Rng + ?Sized>(&self, shape: Vec<usize>, p: f64, rng: &mut R) -> Tensor<T> {
        let keep = T::lit(1.0 / (1.0 - p));
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
            .collect();
        Tensor::new(shape, data).expect("mask shape")
    }

    /// Computes gradients of the scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(TensorError::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(lv.shape(), T::one()));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if self.nodes[i].needs_grad {
                self.backprop_node(i, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    /// Runs [`Graph::backward`] and adds parameter gradients into `store`.
    pub fn backward_into(&self, loss: Var, store: &mut ParamStore<T>) -> Result<Gradients<T>> {
        let grads = self.backward(loss)?;
        for (&id, &v) in &self.bound {
            if let Some(g) = grads.get(v) {
                store.grad_mut(id).add_assign(g);
            }
        }
        Ok(grads)
    }

    /// Parameters bound into this graph with their nodes.
    pub fn bound_params(&self) -> impl Iterator<Item = (ParamId, Var)> + '_ {
        self.bound.iter().map(|(&id, &v)| (id, v))
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
        if !self.nodes[v.0].needs_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn accumulate_with(
        &self,
        grads: &mut [Option<Tensor<T>>],
        v: Var,
        f: impl FnOnce(&mut Tensor<T>),
    ) {
        if !self.nodes[v.0].needs_grad {
            return;
        }
        let slot = &mut grads[v.0];
        if slot.is_none() {
            *slot = Some(Tensor::zeros(self.nodes[v.0].value.shape()));
        }
        f(slot.as_mut().expect("initialised"));
    }

    fn backprop_node(&self, i: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let node = &self.nodes[i];
        let out = &node.value;
        match &node.op {
            Op::Constant | Op::Leaf | Op::Param(_) => {}
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.nodes[a.0].needs_grad {
                    self.accumulate(grads, *a, zip_map(g, bv, |x, y| x * y));
                }
                if self.nodes[b.0].needs_grad {
                    self.accumulate(grads, *b, zip_map(g, av, |x, y| x * y));
                }
            }
            Op::AddRow(a, row) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate_with(grads, *row, |gr| {
                    let n = g.cols();
                    if n == 0 {
                        return;
                    }
                    for r in g.data().chunks(n) {
                        for (x, &y) in gr.data_mut().iter_mut().zip(r) {
                            *x = *x + y;
                        }
                    }
                });
            }
            Op::MulScalar(a, s) => {
                let k = self.value(*s).item();
                self.accumulate(grads, *a, g.map(|x| x * k));
                let av = self.value(*a);
                self.accumulate_with(grads, *s, |gs| {
                    let d: T = g.data().iter().zip(av.data()).map(|(&x, &y)| x * y).sum();
                    gs.data_mut()[0] = gs.data_mut()[0] + d;
                });
            }
            Op::Affine(a, k) => {
                let k = *k;
                self.accumulate(grads, *a, g.map(|x| x * k));
            }
            Op::Tanh(a) => {
                self.accumulate(grads, *a, zip_map(g, out, |x, y| x * (T::one() - y * y)));
            }
            Op::Sigmoid(a) => {
                self.accumulate(grads, *a, zip_map(g, out, |x, y| x * y * (T::one() - y)));
            }
            Op::Relu(a) => {
                let av = self.value(*a);
                self.accumulate(
                    grads,
                    *a,
                    zip_map(g, av, |x, y| if y > T::zero() { x } else { T::zero() }),
                );
            }
            Op::Exp(a) => {
                self.accumulate(grads, *a, zip_map(g, out, |x, y| x * y));
            }
            Op::Log(a) => {
                let av = self.value(*a);
                self.accumulate(grads, *a, zip_map(g, av, |x, y| x / y));
            }
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                self.accumulate_with(grads, *a, |ga| {
                    matmul_nt_acc(g.data(), bv.data(), ga.data_mut(), m, n, k)
                });
                self.accumulate_with(grads, *b, |gb| {
                    matmul_tn_acc(av.data(), g.data(), gb.data_mut(), m, k, n)
                });
            }
            Op::MatMulNT(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.rows(), av.cols(), bv.rows());
                self.accumulate_with(grads, *a, |ga| {
                    matmul_acc(g.data(), bv.data(), ga.data_mut(), m, n, k)
                });
                self.accumulate_with(grads, *b, |gb| {
                    matmul_tn_acc(g.data(), av.data(), gb.data_mut(), m, n, k)
                });
            }
            Op::Transpose(a) => {
                self.accumulate(grads, *a, g.transpose());
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.cols(p);
                    let rows = g.rows();
                    self.accumulate_with(grads, p, |gp| {
                        for r in 0..rows {
                            let src = &g.row_slice(r)[offset..offset + w];
                            for (x, &y) in gp.data_mut()[r * w..(r + 1) * w].iter_mut().zip(src) {
                                *x = *x + y;
                            }
                        }
                    });
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    self.accumulate_with(grads, p, |gp| {
                        for (x, &y) in gp.data_mut().iter_mut().zip(&g.data()[offset..offset + len]) {
                            *x = *x + y;
                        }
                    });
                    offset += len;
                }
            }
            Op::SliceCols(a, start) => {
                let start = *start;
                let w = g.cols();
                self.accumulate_with(grads, *a, |ga| {
                    let ac = ga.cols();
                    for r in 0..g.rows() {
                        let dst = &mut ga.data_mut()[r * ac + start..r * ac + start + w];
                        for (x, &y) in dst.iter_mut().zip(g.row_slice(r)) {
                            *x = *x + y;
                        }
                    }
                });
            }
            Op::SliceRows(a, start) => {
                let c = g.cols();
                let start = *start;
                self.accumulate_with(grads, *a, |ga| {
                    let dst = &mut ga.data_mut()[start * c..start * c + g.len()];
                    for (x, &y) in dst.iter_mut().zip(g.data()) {
                        *x = *x + y;
                    }
                });
            }
            Op::GatherRows(a, idx) => {
                let c = g.cols();
                self.accumulate_with(grads, *a, |ga| {
                    for (r, &i) in idx.iter().enumerate() {
                        let dst = &mut ga.data_mut()[i * c..(i + 1) * c];
                        for (x, &y) in dst.iter_mut().zip(g.row_slice(r)) {
                            *x = *x + y;
                        }
                    }
                });
            }
            Op::SelectRows(a, b, mask) => {
                let c = g.cols();
                for (target, want) in [(*a, true), (*b, false)] {
                    self.accumulate_with(grads, target, |gt| {
                        for (r, &m) in mask.iter().enumerate() {
                            if m == want {
                                let dst = &mut gt.data_mut()[r * c..(r + 1) * c];
                                for (x, &y) in dst.iter_mut().zip(g.row_slice(r)) {
                                    *x = *x + y;
                                }
                            }
                        }
                    });
                }
            }
            Op::Sum(a) => {
                let s = g.item();
                let shape = self.shape(*a).to_vec();
                self.accumulate(grads, *a, Tensor::full(&shape, s));
            }
            Op::Mean(a) => {
                let av = self.value(*a);
                let s = g.item() / T::lit(av.len() as f64);
                self.accumulate(grads, *a, Tensor::full(av.shape(), s));
            }
            Op::Softmax(a) => {
                let c = out.cols();
                let mut ga = out.clone();
                for r in 0..out.rows() {
                    let y = out.row_slice(r);
                    let gr = g.row_slice(r);
                    let dot: T = y.iter().zip(gr).map(|(&p, &q)| p * q).sum();
                    for j in 0..c {
                        ga.data_mut()[r * c + j] = y[j] * (gr[j] - dot);
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::LogSoftmax(a) => {
                let c = out.cols();
                let mut ga = g.clone();
                for r in 0..out.rows() {
                    let gsum: T = g.row_slice(r).iter().copied().sum();
                    for j in 0..c {
                        let p = out.at(r, j).exp();
                        ga.data_mut()[r * c + j] = g.at(r, j) - p * gsum;
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::CrossEntropy(a, targets, probs) => {
                let mut ga = probs.clone();
                let c = ga.cols();
                for (r, &t) in targets.iter().enumerate() {
                    let gr = g.data()[r];
                    let row = &mut ga.data_mut()[r * c..(r + 1) * c];
                    row[t] = row[t] - T::one();
                    for x in row.iter_mut() {
                        *x = *x * gr;
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::RowDot(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let c = av.cols();
                for (target, other) in [(*a, bv), (*b, av)] {
                    self.accumulate_with(grads, target, |gt| {
                        for r in 0..av.rows() {
                            let k = g.data()[r];
                            let dst = &mut gt.data_mut()[r * c..(r + 1) * c];
                            for (x, &y) in dst.iter_mut().zip(other.row_slice(r)) {
                                *x = *x + k * y;
                            }
                        }
                    });
                }
            }
            Op::Conv1d {
                input,
                weight,
                bias,
                seq_len,
                width,
            } => {
                let (iv, wv) = (self.value(*input), self.value(*weight));
                let (cols, out_len) = im2col(iv, *seq_len, *width);
                let (m, kc, f) = (cols.rows(), cols.cols(), wv.cols());
                self.accumulate_with(grads, *weight, |gw| {
                    matmul_tn_acc(cols.data(), g.data(), gw.data_mut(), m, kc, f)
                });
                self.accumulate_with(grads, *bias, |gb| {
                    for r in g.data().chunks(f) {
                        for (x, &y) in gb.data_mut().iter_mut().zip(r) {
                            *x = *x + y;
                        }
                    }
                });
                if self.nodes[input.0].needs_grad {
                    let mut gcols = vec![T::zero(); m * kc];
                    matmul_nt_acc(g.data(), wv.data(), &mut gcols, m, f, kc);
                    let c = iv.cols();
                    let seq_len = *seq_len;
                    self.accumulate_with(grads, *input, |gi| {
                        for (row, chunk) in gcols.chunks(kc).enumerate() {
                            let (s, p) = (row / out_len, row % out_len);
                            let start = (s * seq_len + p) * c;
                            for (x, &y) in gi.data_mut()[start..start + kc].iter_mut().zip(chunk) {
                                *x = *x + y;
                            }
                        }
                    });
                }
            }
            Op::MaxPoolGroups(a, arg) => {
                let f = g.cols();
                self.accumulate_with(grads, *a, |ga| {
                    for (k, &src) in arg.iter().enumerate() {
                        let c = k % f;
                        let idx = src * f + c;
                        ga.data_mut()[idx] = ga.data_mut()[idx] + g.data()[k];
                    }
                });
            }
            Op::Bilinear(a, b, u) => {
                let (av, bv, uv) = (self.value(*a), self.value(*b), self.value(*u));
                let (n, p, q) = (av.rows(), av.cols(), bv.cols());
                let labels = g.cols();
                // ga[i] += sum_r g[i,r] * U_r b[i]; gb[i] += sum_r g[i,r] * a[i] U_r;
                // gU_r += sum_i g[i,r] * a[i]ᵀ b[i]
                let mut ga = vec![T::zero(); n * p];
                let mut gb = vec![T::zero(); n * q];
                let mut gu = vec![T::zero(); labels * p * q];
                for r in 0..labels {
                    let ur = &uv.data()[r * p * q..(r + 1) * p * q];
                    for i in 0..n {
                        let k = g.at(i, r);
                        if k == T::zero() {
                            continue;
                        }
                        let ai = av.row_slice(i);
                        let bi = bv.row_slice(i);
                        for x in 0..p {
                            let urow = &ur[x * q..(x + 1) * q];
                            let mut s = T::zero();
                            for y in 0..q {
                                s = s + urow[y] * bi[y];
                                gb[i * q + y] = gb[i * q + y] + k * ai[x] * urow[y];
                                let gidx = r * p * q + x * q + y;
                                gu[gidx] = gu[gidx] + k * ai[x] * bi[y];
                            }
                            ga[i * p + x] = ga[i * p + x] + k * s;
                        }
                    }
                }
                self.accumulate(grads, *a, Tensor::matrix(n, p, ga));
                self.accumulate(grads, *b, Tensor::matrix(n, q, gb));
                self.accumulate(grads, *u, Tensor::matrix(labels * p, q, gu));
            }
            Op::Custom(inputs, op) => {
                let values: Vec<&Tensor<T>> = inputs.iter().map(|&v| self.value(v)).collect();
                let gs = op.backward(&values, out, g);
                for (&v, gv) in inputs.iter().zip(gs) {
                    if let Some(gv) = gv {
                        self.accumulate(grads, v, gv);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_derivative_two_x() {
        let mut g = Graph::<f64>::new();
        let x = g.leaf(Tensor::scalar(3.0));
        let y = g.mul(x, x);
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.get(x).unwrap().item(), 6.0);
    }

    #[test]
    fn cross_entropy_gradient_is_probabilities_minus_one_hot() {
        let mut g = Graph::<f64>::new();
        let logits = g.leaf(Tensor::from_f64(&[1, 3], &[0.5, -1.0, 2.0]));
        let ce = g.cross_entropy(logits, &[2]);
        let loss = g.sum(ce);
        let grads = g.backward(loss).unwrap();
        let z = [0.5f64, -1.0, 2.0];
        let norm: f64 = z.iter().map(|v| v.exp()).sum();
        let got = grads.get(logits).unwrap();
        for j in 0..3 {
            let p = z[j].exp() / norm;
            let want = if j == 2 { p - 1.0 } else { p };
            assert!((got.data()[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut g = Graph::<f64>::new();
        let x = g.leaf(Tensor::from_f64(&[1, 2], &[1.0, 2.0]));
        let y = g.tanh(x);
        assert!(matches!(g.backward(y), Err(TensorError::NonScalarLoss(_))));
    }

    #[test]
    fn reused_values_accumulate() {
        // f(x) = sum(x * x + x) -> df/dx = 2x + 1
        let mut g = Graph::<f64>::new();
        let x = g.leaf(Tensor::from_f64(&[1, 3], &[1.0, -2.0, 0.5]));
        let sq = g.mul(x, x);
        let s = g.add(sq, x);
        let loss = g.sum(s);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[3.0, -3.0, 2.0]);
    }

    #[test]
    fn unreachable_parameters_are_untouched() {
        let mut store = ParamStore::<f64>::new();
        let used = store.add("used", Tensor::scalar(2.0));
        let unused = store.add("unused", Tensor::scalar(5.0));
        store.grad_mut(unused).data_mut()[0] = 42.0;
        let mut g = Graph::new();
        let u = g.param(&store, used);
        let loss = g.mul(u, u);
        g.backward_into(loss, &mut store).unwrap();
        assert_eq!(store.grad(used).item(), 4.0);
        assert_eq!(store.grad(unused).item(), 42.0);
    }

    #[test]
    fn binding_a_parameter_twice_shares_the_node() {
        let mut store = ParamStore::<f32>::new();
        let p = store.add("p", Tensor::scalar(1.0));
        let mut g = Graph::new();
        let a = g.param(&store, p);
        let b = g.param(&store, p);
        assert_eq!(a, b);
        assert_eq!(g.param_id(a), Some(p));
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::<f64>::new();
        let c = g.constant(Tensor::scalar(2.0));
        let x = g.leaf(Tensor::scalar(3.0));
        let y = g.mul(c, x);
        let grads = g.backward(y).unwrap();
        assert!(grads.get(c).is_none());
        assert_eq!(grads.get(x).unwrap().item(), 2.0);
    }

    #[test]
    fn dropout_is_inverted_and_identity_at_zero() {
        let mut rng = crate::seeded_rng(1);
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::full(&[50, 40], 1.0));
        assert_eq!(g.dropout(x, 0.0, &mut rng), x);
        let y = g.dropout(x, 0.25, &mut rng);
        for &v in g.value(y).data() {
            assert!(v == 0.0 || (v - 1.0 / 0.75).abs() < 1e-12);
        }
        let mean = g.value(y).sum() / 2000.0;
        assert!((mean - 1.0).abs() < 0.1);
    }

    #[test]
    fn conv1d_matches_direct_sum() {
        // two sequences of length 4, 2 channels, width 3, 2 filters
        let mut rng = crate::seeded_rng(3);
        let x: Tensor<f64> = crate::nn::init_uniform(&mut rng, &[8, 2], 1.0);
        let w: Tensor<f64> = crate::nn::init_uniform(&mut rng, &[6, 2], 1.0);
        let b: Tensor<f64> = crate::nn::init_uniform(&mut rng, &[1, 2], 1.0);
        let mut g = Graph::new();
        let (xv, wv, bv) = (g.constant(x.clone()), g.constant(w.clone()), g.constant(b.clone()));
        let y = g.conv1d(xv, wv, bv, 4, 3);
        assert_eq!(g.shape(y), &[4, 2]);
        for s in 0..2 {
            for p in 0..2 {
                for f in 0..2 {
                    let mut acc = b.at(0, f);
                    for k in 0..3 {
                        for c in 0..2 {
                            acc += x.at(s * 4 + p + k, c) * w.at(k * 2 + c, f);
                        }
                    }
                    assert!((g.value(y).at(s * 2 + p, f) - acc).abs() < 1e-12);
                }
            }
        }
    }
}
