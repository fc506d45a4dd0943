//! Network layout, window losses for training and full-sentence passes
//! for perplexity and representation extraction.

use std::collections::HashMap;

use rand::Rng;

use polyglot_core::nn::{CellKind, Linear, LstmLayer, LstmState, SeqBatch, StateValues};
use polyglot_core::{par, seeded_rng, Graph, ParamId, ParamStore, Scalar, Tensor, Var};
use polyglot_embed::EmbeddingMatrix;
use polyglot_text::{TokenStream, Vocabulary};

use crate::batch::{Lanes, Window};
use crate::chars::CharVocab;
use crate::config::{LmConfig, Variant};
use crate::encoder::CharEncoder;
use crate::error::{LmError, Result};
use crate::softmax::{masked_mean, SoftmaxLayer, SoftmaxMode};
use crate::stack::LayerStack;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Sentences per graph when running whole sentences.
const SENTENCE_CHUNK: usize = 16;

/// Word-type vectors that initialise the rosita_word input table.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors {
    words: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl WordVectors {
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != words.len() * dim {
            return Err(LmError::Input(
                "word vector data does not match shape".into(),
            ));
        }
        Ok(WordVectors { words, dim, data })
    }

    /// Union of several matrices; a word keeps its first vector.
    pub fn from_matrices(ms: &[&EmbeddingMatrix]) -> Result<Self> {
        let dim = ms.first().map_or(0, |m| m.dim());
        let mut seen = std::collections::HashSet::new();
        let mut words = Vec::new();
        let mut data = Vec::new();
        for m in ms {
            if m.dim() != dim {
                return Err(LmError::Input(format!(
                    "embedding widths {} and {}",
                    dim,
                    m.dim()
                )));
            }
            for (i, w) in m.words().iter().enumerate() {
                if seen.insert(w.clone()) {
                    words.push(w.clone());
                    data.extend_from_slice(m.row(i));
                }
            }
        }
        Self::new(words, dim, data)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Row lookup for the word-type table; row 0 is the unknown word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordIndex {
    pub words: Vec<String>,
    map: HashMap<String, usize>,
}

impl WordIndex {
    pub fn new(words: Vec<String>) -> Self {
        let map = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i + 1))
            .collect();
        WordIndex { words, map }
    }

    pub fn row(&self, word: &str) -> usize {
        self.map.get(word).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct LmNet {
    pub encoder: CharEncoder,
    /// `[1 + words, word_dim]`, rosita_word only.
    pub word_table: Option<ParamId>,
    /// Maps `[char ∥ word]` to the projection width, rosita_word only.
    pub input_projection: Option<Linear>,
    pub forward: Vec<LstmLayer>,
    pub backward: Vec<LstmLayer>,
    pub softmax: SoftmaxLayer,
}

/// A bidirectional LM with its vocabularies and parameters.
#[derive(Clone, Debug)]
pub struct LmModel<T: Scalar = f32> {
    pub config: LmConfig,
    pub vocab: Vocabulary,
    pub chars: CharVocab,
    pub word_index: Option<WordIndex>,
    pub net: LmNet,
    pub store: ParamStore<T>,
}

/// Outputs of one training window.
#[derive(Debug)]
pub struct WindowOutput {
    pub loss: Var,
    /// Per-position losses `[steps * batch, 1]`, time-major.
    pub forward_losses: Var,
    pub backward_losses: Var,
    pub forward_state: Vec<LstmState>,
    pub backward_state: Vec<LstmState>,
}

impl WindowOutput {
    /// Per-position losses as `[lane][step]`; masked positions are 0.
    pub fn loss_grid<T: Scalar>(
        &self,
        g: &Graph<T>,
        window: &Window,
        backward: bool,
    ) -> Vec<Vec<f64>> {
        let (v, lanes) = if backward {
            (g.value(self.backward_losses), &window.backward)
        } else {
            (g.value(self.forward_losses), &window.forward)
        };
        (0..window.batch)
            .map(|b| {
                (0..window.steps)
                    .map(|t| {
                        let k = t * window.batch + b;
                        if lanes.mask[k] {
                            v.data()[k].to_f64_lossy()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Per-layer outputs of a ragged sentence batch, each `[total, P]`.
struct SentencePass {
    batch: SeqBatch,
    input: Var,
    forward: Vec<Var>,
    backward: Vec<Var>,
}

/// Adds the boundary markers.
pub fn with_markers<S: AsRef<str>>(tokens: &[S]) -> Vec<&str> {
    let mut v = Vec::with_capacity(tokens.len() + 2);
    v.push(BOS);
    v.extend(tokens.iter().map(|t| t.as_ref()));
    v.push(EOS);
    v
}

impl LmModel<f32> {
    /// Builds vocabularies from the training corpora and initialises a
    /// model. `vectors` is required for rosita_word and ignored otherwise.
    pub fn build(
        config: LmConfig,
        corpora: &[&TokenStream],
        vectors: Option<&WordVectors>,
    ) -> Result<Self> {
        config.validate()?;
        let want = if config.variant.is_polyglot() { 2 } else { 1 };
        if corpora.len() != want {
            return Err(LmError::Input(format!(
                "{} needs {} corpora, got {}",
                config.variant.name(),
                want,
                corpora.len()
            )));
        }
        let tokens = corpora.iter().flat_map(|c| c.tokens());
        let vocab = Vocabulary::from_tokens(tokens, 1, config.max_vocab)?;
        let chars = CharVocab::build(corpora.iter().flat_map(|c| c.tokens()));
        Self::new(config, vocab, chars, vectors)
    }
}

impl<T: Scalar> LmModel<T> {
    pub fn new(
        config: LmConfig,
        vocab: Vocabulary,
        chars: CharVocab,
        vectors: Option<&WordVectors>,
    ) -> Result<Self> {
        config.validate()?;
        let vectors = match config.variant {
            Variant::RositaWord => {
                let v = vectors.ok_or_else(|| {
                    LmError::Config("rosita_word needs aligned word vectors".into())
                })?;
                if v.dim() != config.word_dim {
                    return Err(LmError::Config(format!(
                        "word vectors have width {}, config says {}",
                        v.dim(),
                        config.word_dim
                    )));
                }
                Some(v)
            }
            _ => None,
        };
        let mut table = None;
        let index = vectors.map(|v| {
            let mut data = vec![T::zero(); v.dim()];
            data.extend(v.data.iter().map(|&x| T::lit(x)));
            table = Some(Tensor::matrix(v.len() + 1, v.dim(), data));
            WordIndex::new(v.words().to_vec())
        });
        Self::assemble(config, vocab, chars, index, table)
    }

    /// Layout with the given word table (zeros when absent); used when
    /// loading checkpoints.
    pub fn assemble(
        config: LmConfig,
        vocab: Vocabulary,
        chars: CharVocab,
        word_index: Option<WordIndex>,
        table: Option<Tensor<T>>,
    ) -> Result<Self> {
        config.validate()?;
        if (config.variant == Variant::RositaWord) != word_index.is_some() {
            return Err(LmError::Config(
                "word table present exactly for rosita_word".into(),
            ));
        }
        let mut rng = seeded_rng(config.seed);
        let mut store = ParamStore::new();
        let p = config.projection;
        let encoder = CharEncoder::new(
            &mut store,
            "lm.encoder",
            &config.chars,
            chars.len(),
            &mut rng,
        );
        let (word_table, input_projection) = match &word_index {
            Some(ix) => {
                let t =
                    table.unwrap_or_else(|| Tensor::zeros(&[ix.words.len() + 1, config.word_dim]));
                if t.shape() != [ix.words.len() + 1, config.word_dim] {
                    return Err(LmError::Config("word table shape".into()));
                }
                let id = store.add("lm.word_table", t);
                let proj = Linear::new(
                    &mut store,
                    "lm.input_projection",
                    p + config.word_dim,
                    p,
                    true,
                    &mut rng,
                );
                (Some(id), Some(proj))
            }
            None => (None, None),
        };
        let kind = CellKind::Projected { projection: p };
        let mut forward = Vec::new();
        let mut backward = Vec::new();
        for l in 0..config.layers {
            forward.push(LstmLayer::new(
                &mut store,
                &format!("lm.forward.{}", l),
                kind,
                p,
                config.lstm_size,
                &mut rng,
            ));
            backward.push(LstmLayer::new(
                &mut store,
                &format!("lm.backward.{}", l),
                kind,
                p,
                config.lstm_size,
                &mut rng,
            ));
        }
        let softmax = SoftmaxLayer::new(&mut store, "lm.softmax", vocab.len(), p, &mut rng);
        Ok(LmModel {
            config,
            vocab,
            chars,
            word_index,
            net: LmNet {
                encoder,
                word_table,
                input_projection,
                forward,
                backward,
                softmax,
            },
            store,
        })
    }

    /// Same model with parameters converted to another precision.
    pub fn cast<U: Scalar>(&self) -> LmModel<U> {
        LmModel {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            chars: self.chars.clone(),
            word_index: self.word_index.clone(),
            net: self.net.clone(),
            store: self.store.cast(),
        }
    }

    /// Width of the per-word input before any input projection.
    pub fn input_dim(&self) -> usize {
        self.config.input_dim()
    }

    /// `[n, input_dim]`: the char encoding, with the word-type vector
    /// appended under rosita_word.
    pub fn lm_input(&self, g: &mut Graph<T>, store: &ParamStore<T>, words: &[&str]) -> Var {
        let chars = self.net.encoder.forward(g, store, &self.chars, words);
        match (self.net.word_table, &self.word_index) {
            (Some(table), Some(ix)) => {
                let rows: Vec<usize> = words.iter().map(|w| ix.row(w)).collect();
                let t = g.param(store, table);
                let wv = g.gather_rows(t, &rows);
                g.concat_cols(&[chars, wv])
            }
            _ => chars,
        }
    }

    /// `[n, P]` vectors fed to the first LSTM layer.
    pub fn input_representation(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        words: &[&str],
    ) -> Var {
        let x = self.lm_input(g, store, words);
        match &self.net.input_projection {
            Some(p) => p.forward(g, store, x),
            None => x,
        }
    }

    fn layers(&self, backward: bool) -> &[LstmLayer] {
        if backward {
            &self.net.backward
        } else {
            &self.net.forward
        }
    }

    /// Runs one direction's stack over time-major inputs, returning the
    /// top-layer outputs per step and the final per-layer states.
    #[allow(clippy::too_many_arguments)]
    fn run_stack<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        backward: bool,
        reverse: bool,
        mut steps: Vec<Var>,
        masks: &[Vec<bool>],
        init: Option<&[StateValues<T>]>,
        mut dropout: Option<&mut R>,
        mut per_layer: Option<&mut Vec<Vec<Var>>>,
    ) -> (Vec<Var>, Vec<LstmState>) {
        let mut finals = Vec::new();
        for (l, layer) in self.layers(backward).iter().enumerate() {
            let init = init.map(|s| s[l].to_graph(g));
            let (mut outs, last) = layer.run(g, store, &steps, Some(masks), reverse, init, None);
            finals.push(last);
            if let Some(r) = dropout.as_deref_mut() {
                if self.config.dropout > 0.0 {
                    outs = outs
                        .iter()
                        .map(|&o| g.dropout(o, self.config.dropout, r))
                        .collect();
                }
            }
            if l > 0 && self.config.skip_connections {
                outs = outs
                    .iter()
                    .zip(&steps)
                    .map(|(&o, &x)| g.add(o, x))
                    .collect();
            }
            if let Some(v) = per_layer.as_deref_mut() {
                v.push(outs.clone());
            }
            steps = outs;
        }
        (steps, finals)
    }

    /// Losses of one training window. `state` holds the carried per-layer
    /// states of each direction; `None` starts from zeros. Dropout is on
    /// only when `dropout` is given.
    #[allow(clippy::too_many_arguments)]
    pub fn window_loss<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        window: &Window,
        state: Option<(&[StateValues<T>], &[StateValues<T>])>,
        mode: SoftmaxMode,
        sampling: &mut R,
        mut dropout: Option<&mut R>,
    ) -> WindowOutput {
        let words: Vec<&str> = window.words.iter().map(|s| s.as_str()).collect();
        let x = self.input_representation(g, store, &words);
        let x = match dropout.as_deref_mut() {
            Some(r) => g.dropout(x, self.config.dropout, r),
            None => x,
        };
        let b = window.batch;
        let run = |g: &mut Graph<T>,
                   lanes: &Lanes,
                   backward: bool,
                   init: Option<&[StateValues<T>]>,
                   dropout: Option<&mut R>,
                   sampling: &mut R| {
            let steps: Vec<Var> = (0..window.steps)
                .map(|t| g.gather_rows(x, &lanes.inputs[t * b..(t + 1) * b]))
                .collect();
            let masks: Vec<Vec<bool>> = (0..window.steps)
                .map(|t| lanes.step_mask(t, b).to_vec())
                .collect();
            let (top, finals) = self.run_stack(
                g, store, backward, false, steps, &masks, init, dropout, None,
            );
            let h = g.concat_rows(&top);
            let losses = self
                .net
                .softmax
                .losses(g, store, h, &lanes.targets, mode, sampling);
            let mean = masked_mean(g, losses, &lanes.mask);
            (losses, mean, finals)
        };
        let (fl, fm, fs) = run(
            g,
            &window.forward,
            false,
            state.map(|s| s.0),
            dropout.as_deref_mut(),
            sampling,
        );
        let (bl, bm, bs) = run(
            g,
            &window.backward,
            true,
            state.map(|s| s.1),
            dropout,
            sampling,
        );
        let both = g.add(fm, bm);
        let loss = g.scale(both, T::lit(0.5));
        WindowOutput {
            loss,
            forward_losses: fl,
            backward_losses: bl,
            forward_state: fs,
            backward_state: bs,
        }
    }

    /// Runs complete sentences (markers included) through both directions.
    fn sentence_pass(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        sentences: &[Vec<&str>],
    ) -> SentencePass {
        let mut words: Vec<&str> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut flat = Vec::new();
        for s in sentences {
            for &w in s {
                let i = *index.entry(w).or_insert_with(|| {
                    words.push(w);
                    words.len() - 1
                });
                flat.push(i);
            }
        }
        let lengths: Vec<usize> = sentences.iter().map(|s| s.len()).collect();
        let batch = SeqBatch::new(&lengths);
        let reps = self.input_representation(g, store, &words);
        let input = g.gather_rows(reps, &flat);
        let masks = batch.masks();
        let mut out = Vec::new();
        for backward in [false, true] {
            let steps = batch.to_time_major(g, input);
            let mut layers = Vec::new();
            self.run_stack::<polyglot_core::Rng>(
                g,
                store,
                backward,
                backward,
                steps,
                &masks,
                None,
                None,
                Some(&mut layers),
            );
            out.push(
                layers
                    .iter()
                    .map(|l| batch.from_time_major(g, l))
                    .collect::<Vec<Var>>(),
            );
        }
        let backward = out.pop().unwrap_or_default();
        let forward = out.pop().unwrap_or_default();
        SentencePass {
            batch,
            input,
            forward,
            backward,
        }
    }

    /// Full-softmax negative log-likelihood of both directions over
    /// complete sentences, and the number of predictions.
    pub fn sentence_nll(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        sentences: &[Vec<&str>],
    ) -> (Var, usize) {
        let pass = self.sentence_pass(g, store, sentences);
        let mut rows_f = Vec::new();
        let mut rows_b = Vec::new();
        let mut targets_f = Vec::new();
        let mut targets_b = Vec::new();
        for (s, toks) in sentences.iter().enumerate() {
            let r = pass.batch.range(s);
            for i in 0..toks.len() - 1 {
                rows_f.push(r.start + i);
                targets_f.push(self.vocab.id(toks[i + 1]));
                rows_b.push(r.start + i + 1);
                targets_b.push(self.vocab.id(toks[i]));
            }
        }
        let top_f = *pass.forward.last().expect("at least one layer");
        let top_b = *pass.backward.last().expect("at least one layer");
        let hf = g.gather_rows(top_f, &rows_f);
        let hb = g.gather_rows(top_b, &rows_b);
        let h = g.concat_rows(&[hf, hb]);
        targets_f.extend(targets_b);
        let mut none = seeded_rng(0);
        let l = self
            .net
            .softmax
            .losses(g, store, h, &targets_f, SoftmaxMode::Full, &mut none);
        (g.sum(l), targets_f.len())
    }

    /// Perplexity of the sentences of `stream` under the full softmax,
    /// averaged over both directions.
    pub fn perplexity(&self, stream: &TokenStream) -> f64 {
        let sentences: Vec<Vec<&str>> =
            stream.sentences().iter().map(|s| with_markers(s)).collect();
        let chunks: Vec<&[Vec<&str>]> = sentences.chunks(SENTENCE_CHUNK).collect();
        let parts = par::map(&chunks, |chunk| {
            let mut g = Graph::new();
            let (nll, n) = self.sentence_nll(&mut g, &self.store, chunk);
            (g.value(nll).item().to_f64_lossy(), n)
        });
        let (nll, n) = parts
            .iter()
            .fold((0.0, 0), |(a, b), &(x, y)| (a + x, b + y));
        (nll / n.max(1) as f64).exp()
    }

    /// Layer stacks for a group of non-empty sentences in one graph.
    fn extract_chunk(&self, sentences: &[&[String]]) -> Vec<LayerStack> {
        let marked: Vec<Vec<&str>> = sentences.iter().map(|s| with_markers(s)).collect();
        let mut g = Graph::new();
        let pass = self.sentence_pass(&mut g, &self.store, &marked);
        let p = self.config.projection;
        let depth = self.config.layers + 1;
        let width = 2 * p;
        let input = g.value(pass.input);
        let fwd: Vec<&Tensor<T>> = pass.forward.iter().map(|&v| g.value(v)).collect();
        let bwd: Vec<&Tensor<T>> = pass.backward.iter().map(|&v| g.value(v)).collect();
        marked
            .iter()
            .enumerate()
            .map(|(s, toks)| {
                let r = pass.batch.range(s);
                let n = toks.len() - 2;
                let mut data = Vec::with_capacity(n * depth * width);
                for i in 0..n {
                    let row = r.start + 1 + i;
                    let x = input.row_slice(row);
                    data.extend(x.iter().chain(x).map(|v| v.to_single()));
                    for l in 0..depth - 1 {
                        data.extend(fwd[l].row_slice(row).iter().map(|v| v.to_single()));
                        data.extend(bwd[l].row_slice(row).iter().map(|v| v.to_single()));
                    }
                }
                LayerStack::new(n, depth, width, data).expect("stack layout")
            })
            .collect()
    }

    /// Per-token layer stacks for each sentence, run on whole sentences.
    pub fn extract(&self, sentences: &[&[String]]) -> Result<Vec<LayerStack>> {
        if let Some(i) = sentences.iter().position(|s| s.is_empty()) {
            return Err(LmError::Input(format!("sentence {} is empty", i)));
        }
        let chunks: Vec<&[&[String]]> = sentences.chunks(SENTENCE_CHUNK).collect();
        Ok(par::map(&chunks, |c| self.extract_chunk(c))
            .into_iter()
            .flatten()
            .collect())
    }

    /// Extraction for a single sentence.
    pub fn extract_one(&self, tokens: &[String]) -> Result<LayerStack> {
        Ok(self.extract(&[tokens])?.remove(0))
    }

    /// Zero carried state for one direction.
    pub fn zero_states(&self, batch: usize) -> Vec<StateValues<T>> {
        (0..self.config.layers)
            .map(|_| StateValues::zeros(batch, self.config.projection, self.config.lstm_size))
            .collect()
    }
}
