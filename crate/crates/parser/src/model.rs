//! The biaffine parser network.

use rand::Rng;

use polyglot_core::nn::{init_fan_in, CellKind, Embedding, Linear, SeqBatch, StackedBiLstm};
use polyglot_core::{par, seeded_rng, Graph, ParamId, ParamStore, Scalar, Tensor, Var};
use polyglot_lm::{LayerStack, ReprInput, ReprLayer, ReprSpec};
use polyglot_text::{AnnotatedSentence, LabelSet};

use crate::config::ParserConfig;
use crate::error::{ParserError, Result};
use crate::mst::{decode_mst, greedy_heads};

/// Score added to an arc from a token to itself.
const SELF_LOOP: f64 = -1e9;
pub const UNKNOWN_POS: &str = "<unk>";

/// Arc scores of one sentence: `get(i, j)` is the score of head `i`
/// (0 = root) for dependent `j` (1-based), stored `(n + 1) × n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcScores {
    pub n: usize,
    pub data: Vec<f64>,
}

impl ArcScores {
    pub fn new(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), (n + 1) * n, "arc score shape");
        ArcScores { n, data }
    }

    /// Shape `(rows, cols)` = `(n + 1, n)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.n + 1, self.n)
    }

    pub fn get(&self, head: usize, dep: usize) -> f64 {
        self.data[head * self.n + dep - 1]
    }
}

/// A training or evaluation sentence with its representation source.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseExample {
    pub tokens: Vec<String>,
    pub pos: Vec<String>,
    pub heads: Vec<usize>,
    pub rels: Vec<String>,
    /// Present when the representation is contextual.
    pub stack: Option<LayerStack>,
}

impl ParseExample {
    pub fn from_sentence(s: &AnnotatedSentence, stack: Option<LayerStack>) -> Result<Self> {
        s.validate()?;
        let n = s.len();
        let pos = s.pos.clone().unwrap_or_else(|| vec![UNKNOWN_POS.to_string(); n]);
        let heads = s.heads.clone().unwrap_or_else(|| vec![0; n]);
        let rels = s.deprels.clone().unwrap_or_else(|| vec!["_".to_string(); n]);
        if let Some(st) = &stack {
            if st.tokens != n {
                return Err(ParserError::LengthMismatch(st.tokens, n));
            }
        }
        Ok(ParseExample {
            tokens: s.tokens.clone(),
            pos,
            heads,
            rels,
            stack,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn repr(&self) -> ReprInput<'_> {
        match &self.stack {
            Some(s) => ReprInput::Stack(s),
            None => ReprInput::Tokens(&self.tokens),
        }
    }
}

/// Decoded heads (1-based, 0 = root) and relations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parse {
    pub heads: Vec<usize>,
    pub rels: Vec<String>,
}

/// Graph nodes of one encoded sentence.
struct Heads {
    /// `[n, n + 1]`: row `j - 1` holds the head scores of dependent `j`.
    arcs: Var,
    label_head: Var,
    label_dep: Var,
}

#[derive(Clone, Debug)]
pub struct ParserNet {
    pub repr: ReprLayer,
    pub pos: Embedding,
    pub root: ParamId,
    pub lstm: StackedBiLstm,
    pub arc_head: Linear,
    pub arc_dep: Linear,
    pub label_head: Linear,
    pub label_dep: Linear,
    /// `[a, a]`
    pub arc_u: ParamId,
    /// `[a, 1]`: head-side bias.
    pub arc_bias: ParamId,
    /// `[R * l, l]`
    pub label_u: ParamId,
    /// Linear part over `[head ∥ dep]`.
    pub label_w: Linear,
}

#[derive(Clone, Debug)]
pub struct ParserModel<T: Scalar = f32> {
    pub config: ParserConfig,
    pub pos_tags: LabelSet,
    pub rels: LabelSet,
    pub net: ParserNet,
    pub store: ParamStore<T>,
}

impl<T: Scalar> ParserModel<T> {
    /// Label sets are taken from `train`; POS id 0 is reserved for unseen
    /// tags.
    pub fn for_data(config: ParserConfig, spec: ReprSpec, train: &[ParseExample]) -> Result<Self> {
        let mut pos = vec![UNKNOWN_POS.to_string()];
        let mut seen = LabelSet::from_labels(train.iter().flat_map(|e| e.pos.iter()));
        pos.extend(seen.labels().iter().filter(|p| *p != UNKNOWN_POS).cloned());
        seen = LabelSet::from_ordered(pos);
        let rels = LabelSet::from_labels(train.iter().flat_map(|e| e.rels.iter()));
        Self::new(config, spec, seen, rels)
    }

    pub fn new(config: ParserConfig, spec: ReprSpec, pos_tags: LabelSet, rels: LabelSet) -> Result<Self> {
        config.validate()?;
        if rels.is_empty() {
            return Err(ParserError::Input("no relation labels".into()));
        }
        let mut rng = seeded_rng(config.seed);
        let mut store = ParamStore::new();
        let repr = ReprLayer::build(&mut store, "parser.repr", spec);
        let pos = Embedding::new(&mut store, "parser.pos", pos_tags.len().max(1), config.pos_dim, &mut rng);
        let input = repr.output_dim() + config.pos_dim;
        let root = store.add("parser.root", polyglot_core::nn::init_normal(&mut rng, &[1, input], 1.0));
        let lstm = StackedBiLstm::new(
            &mut store,
            "parser.lstm",
            CellKind::Highway,
            input,
            config.lstm_size,
            config.layers,
            config.recurrent_dropout,
            config.layer_dropout,
            &mut rng,
        );
        let h = lstm.output_dim();
        let (a, l, r) = (config.arc_mlp, config.label_mlp, rels.len());
        let arc_head = Linear::new(&mut store, "parser.arc_head", h, a, true, &mut rng);
        let arc_dep = Linear::new(&mut store, "parser.arc_dep", h, a, true, &mut rng);
        let label_head = Linear::new(&mut store, "parser.label_head", h, l, true, &mut rng);
        let label_dep = Linear::new(&mut store, "parser.label_dep", h, l, true, &mut rng);
        let arc_u = store.add("parser.arc_u", Tensor::zeros(&[a, a]));
        let arc_bias = store.add("parser.arc_bias", Tensor::zeros(&[a, 1]));
        let label_u = store.add("parser.label_u", init_fan_in(&mut rng, l, r * l).transpose());
        let label_w = Linear::new(&mut store, "parser.label_w", 2 * l, r, true, &mut rng);
        Ok(ParserModel {
            config,
            pos_tags,
            rels,
            net: ParserNet {
                repr,
                pos,
                root,
                lstm,
                arc_head,
                arc_dep,
                label_head,
                label_dep,
                arc_u,
                arc_bias,
                label_u,
                label_w,
            },
            store,
        })
    }

    pub fn cast<U: Scalar>(&self) -> ParserModel<U> {
        ParserModel {
            config: self.config.clone(),
            pos_tags: self.pos_tags.clone(),
            rels: self.rels.clone(),
            net: self.net.clone(),
            store: self.store.cast(),
        }
    }

    fn pos_ids(&self, e: &ParseExample) -> Vec<usize> {
        e.pos.iter().map(|p| self.pos_tags.id(p).unwrap_or(0)).collect()
    }

    /// BiLSTM states of `[root, tokens..]` for each example.
    fn encode<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        batch: &[&ParseExample],
        mut rng: Option<&mut R>,
    ) -> Result<(SeqBatch, Var)> {
        let root = g.param(store, self.net.root);
        let mut rows = Vec::with_capacity(batch.len());
        for e in batch {
            if e.is_empty() {
                return Err(ParserError::Input("empty sentence".into()));
            }
            if e.pos.len() != e.len() {
                return Err(ParserError::LengthMismatch(e.pos.len(), e.len()));
            }
            let r = self.net.repr.forward(g, store, e.repr())?;
            if g.rows(r) != e.len() {
                return Err(ParserError::LengthMismatch(g.rows(r), e.len()));
            }
            let p = self.net.pos.forward(g, store, &self.pos_ids(e));
            let mut x = g.concat_cols(&[r, p]);
            if let Some(rng) = rng.as_deref_mut() {
                x = g.dropout(x, self.config.input_dropout, rng);
            }
            rows.push(root);
            rows.push(x);
        }
        let flat = g.concat_rows(&rows);
        let lengths: Vec<usize> = batch.iter().map(|e| e.len() + 1).collect();
        let sb = SeqBatch::new(&lengths);
        let mut out = self.net.lstm.forward(g, store, &sb, flat, rng.as_deref_mut());
        if let Some(rng) = rng {
            out = g.dropout(out, self.config.layer_dropout, rng);
        }
        Ok((sb, out))
    }

    fn mlp(&self, g: &mut Graph<T>, store: &ParamStore<T>, layer: &Linear, x: Var) -> Var {
        let y = layer.forward(g, store, x);
        g.relu(y)
    }

    /// Scores for one sentence given its `[n + 1, 2h]` states.
    fn heads(&self, g: &mut Graph<T>, store: &ParamStore<T>, states: Var) -> Heads {
        let n = g.rows(states) - 1;
        let deps = g.slice_rows(states, 1, n);
        let ah = self.mlp(g, store, &self.net.arc_head, states);
        let ad = self.mlp(g, store, &self.net.arc_dep, deps);
        let lh = self.mlp(g, store, &self.net.label_head, states);
        let ld = self.mlp(g, store, &self.net.label_dep, deps);
        let u = g.param(store, self.net.arc_u);
        let hu = g.matmul(ah, u);
        let arcs = g.matmul_nt(ad, hu);
        let b = g.param(store, self.net.arc_bias);
        let hb = g.matmul(ah, b);
        let hb = g.transpose(hb);
        let arcs = g.add_row(arcs, hb);
        let mut mask = Tensor::zeros(&[n, n + 1]);
        for j in 0..n {
            mask.set(j, j + 1, T::lit(SELF_LOOP));
        }
        let mask = g.constant(mask);
        let arcs = g.add(arcs, mask);
        Heads {
            arcs,
            label_head: lh,
            label_dep: ld,
        }
    }

    /// `[n, R]` relation scores for dependents attached to `heads`.
    fn label_scores(&self, g: &mut Graph<T>, store: &ParamStore<T>, h: &Heads, heads: &[usize]) -> Var {
        let lh = g.gather_rows(h.label_head, heads);
        let u = g.param(store, self.net.label_u);
        let bil = g.bilinear(lh, h.label_dep, u);
        let both = g.concat_cols(&[lh, h.label_dep]);
        let lin = self.net.label_w.forward(g, store, both);
        g.add(bil, lin)
    }

    /// Mean per-token loss: head cross-entropy plus relation
    /// cross-entropy at the gold head.
    pub fn loss<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        batch: &[&ParseExample],
        rng: Option<&mut R>,
    ) -> Result<Var> {
        let (sb, states) = self.encode(g, store, batch, rng)?;
        let mut parts = Vec::new();
        let mut tokens = 0;
        for (s, e) in batch.iter().enumerate() {
            let r = sb.range(s);
            let st = g.slice_rows(states, r.start, r.len());
            let h = self.heads(g, store, st);
            let arc = g.cross_entropy(h.arcs, &e.heads);
            let rel_ids = e
                .rels
                .iter()
                .map(|r| self.rels.id(r).ok_or_else(|| ParserError::Input(format!("unknown relation {}", r))))
                .collect::<Result<Vec<usize>>>()?;
            let ls = self.label_scores(g, store, &h, &e.heads);
            let lab = g.cross_entropy(ls, &rel_ids);
            let both = g.add(arc, lab);
            parts.push(g.sum(both));
            tokens += e.len();
        }
        let all = g.concat_rows(&parts);
        let total = g.sum(all);
        Ok(g.scale(total, T::lit(1.0 / tokens as f64)))
    }

    /// Arc scores of one sentence without dropout.
    pub fn arc_scores(&self, e: &ParseExample) -> Result<ArcScores> {
        let mut g = Graph::new();
        let (_, states) = self.encode::<polyglot_core::Rng>(&mut g, &self.store, &[e], None)?;
        let h = self.heads(&mut g, &self.store, states);
        Ok(transpose_scores(g.value(h.arcs), e.len()))
    }

    fn parse_one(&self, e: &ParseExample, greedy: bool) -> Result<Parse> {
        let mut g = Graph::new();
        let (_, states) = self.encode::<polyglot_core::Rng>(&mut g, &self.store, &[e], None)?;
        let h = self.heads(&mut g, &self.store, states);
        let scores = transpose_scores(g.value(h.arcs), e.len());
        let heads = if greedy { greedy_heads(&scores) } else { decode_mst(&scores) };
        let ls = self.label_scores(&mut g, &self.store, &h, &heads);
        let lv = g.value(ls);
        let rels = (0..e.len())
            .map(|j| {
                let row = lv.row_slice(j);
                let mut best = 0;
                for (k, &x) in row.iter().enumerate() {
                    if x > row[best] {
                        best = k;
                    }
                }
                self.rels.label(best).to_string()
            })
            .collect();
        Ok(Parse { heads, rels })
    }

    /// Tree-constrained parses, in parallel over sentences.
    pub fn parse(&self, examples: &[ParseExample]) -> Result<Vec<Parse>> {
        par::map(examples, |e| self.parse_one(e, false)).into_iter().collect()
    }

    /// Per-token argmax heads, used for cheap training-time metrics.
    pub fn parse_greedy(&self, examples: &[ParseExample]) -> Result<Vec<Parse>> {
        par::map(examples, |e| self.parse_one(e, true)).into_iter().collect()
    }
}

fn transpose_scores<T: Scalar>(arcs: &Tensor<T>, n: usize) -> ArcScores {
    let mut data = vec![0.0; (n + 1) * n];
    for j in 0..n {
        for h in 0..=n {
            data[h * n + j] = arcs.at(j, h).to_f64_lossy();
        }
    }
    ArcScores::new(n, data)
}
