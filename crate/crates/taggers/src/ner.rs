//! Named-entity tagger: `[representation ∥ char-LSTM word feature]`
//! through a highway BiLSTM, a tanh layer and a CRF.

use rand::Rng;

use polyglot_core::nn::{CellKind, Embedding, Linear, LstmLayer, SeqBatch, StackedBiLstm};
use polyglot_core::{par, seeded_rng, Graph, ParamId, ParamStore, Scalar, Tensor, Var};
use polyglot_lm::chars::PAD;
use polyglot_lm::{CharVocab, ReprLayer, ReprSpec};

use crate::config::NerConfig;
use crate::crf::{crf_nll, CrfParams};
use crate::error::{Result, TaggerError};
use crate::example::TagExample;
use crate::tagset::TagSet;

#[derive(Clone, Debug)]
pub struct NerNet {
    pub repr: ReprLayer,
    pub char_table: Embedding,
    pub char_lstm: LstmLayer,
    pub lstm: StackedBiLstm,
    pub hidden: Linear,
    pub output: Linear,
    /// `[T, T]`, from row tag to column tag.
    pub transitions: ParamId,
    pub start: ParamId,
    pub stop: ParamId,
}

#[derive(Clone, Debug)]
pub struct NerModel<T: Scalar = f32> {
    pub config: NerConfig,
    pub tags: TagSet,
    pub chars: CharVocab,
    pub net: NerNet,
    pub store: ParamStore<T>,
}

impl<T: Scalar> NerModel<T> {
    /// Tags and characters from `train`.
    pub fn for_data(config: NerConfig, spec: ReprSpec, train: &[TagExample]) -> Result<Self> {
        let tags = TagSet::from_tags(train.iter().flat_map(|e| e.tags.iter().map(String::as_str)))?;
        let chars = CharVocab::build(train.iter().flat_map(|e| e.tokens.iter().map(String::as_str)));
        Self::new(config, spec, tags, chars)
    }

    pub fn new(config: NerConfig, spec: ReprSpec, tags: TagSet, chars: CharVocab) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.schedule.seed);
        let mut store = ParamStore::new();
        let repr = ReprLayer::build(&mut store, "ner.repr", spec);
        let char_table = Embedding::new(&mut store, "ner.chars", chars.len(), config.char_dim, &mut rng);
        let char_lstm = LstmLayer::new(
            &mut store,
            "ner.char_lstm",
            CellKind::Lstm,
            config.char_dim,
            config.char_lstm,
            &mut rng,
        );
        let lstm = StackedBiLstm::new(
            &mut store,
            "ner.lstm",
            CellKind::Highway,
            repr.output_dim() + config.char_lstm,
            config.lstm_size,
            config.layers,
            config.recurrent_dropout,
            config.layer_dropout,
            &mut rng,
        );
        let hidden = Linear::new(&mut store, "ner.hidden", lstm.output_dim(), config.mlp, true, &mut rng);
        let t = tags.len();
        let output = Linear::new(&mut store, "ner.output", config.mlp, t, true, &mut rng);
        let transitions = store.add("ner.crf.transitions", Tensor::zeros(&[t, t]));
        let start = store.add("ner.crf.start", Tensor::zeros(&[1, t]));
        let stop = store.add("ner.crf.stop", Tensor::zeros(&[1, t]));
        Ok(NerModel {
            config,
            tags,
            chars,
            net: NerNet {
                repr,
                char_table,
                char_lstm,
                lstm,
                hidden,
                output,
                transitions,
                start,
                stop,
            },
            store,
        })
    }

    pub fn cast<U: Scalar>(&self) -> NerModel<U> {
        NerModel {
            config: self.config.clone(),
            tags: self.tags.clone(),
            chars: self.chars.clone(),
            net: self.net.clone(),
            store: self.store.cast(),
        }
    }

    /// Width of the character feature of each word.
    pub fn char_feature_dim(&self) -> usize {
        self.net.char_lstm.output_dim()
    }

    /// `[words, char_lstm]`: final hidden state of the character LSTM
    /// over `[BOW, chars.., EOW]` of each word.
    pub fn char_features<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        words: &[&str],
        rng: Option<&mut R>,
    ) -> Var {
        let mut ids = Vec::new();
        let mut lengths = Vec::with_capacity(words.len());
        for w in words {
            let enc = self.chars.encode(w, self.config.max_word_len);
            let len = enc.iter().position(|&c| c == PAD).unwrap_or(enc.len());
            ids.extend_from_slice(&enc[..len]);
            lengths.push(len);
        }
        let mut x = self.net.char_table.forward(g, store, &ids);
        if let Some(r) = rng {
            x = g.dropout(x, self.config.input_dropout, r);
        }
        let sb = SeqBatch::new(&lengths);
        let steps = sb.to_time_major(g, x);
        let (_, last) = self.net.char_lstm.run(g, store, &steps, Some(&sb.masks()), false, None, None);
        last.h
    }

    /// `[total, tags]` emissions for the batch, sentences stacked in order.
    pub fn emissions<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        batch: &[&TagExample],
        mut rng: Option<&mut R>,
    ) -> Result<(SeqBatch, Var)> {
        let mut reprs = Vec::with_capacity(batch.len());
        let mut words = Vec::new();
        for e in batch {
            if e.is_empty() {
                return Err(TaggerError::Input("empty sentence".into()));
            }
            let r = self.net.repr.forward(g, store, e.repr())?;
            if g.rows(r) != e.len() {
                return Err(TaggerError::LengthMismatch(g.rows(r), e.len()));
            }
            reprs.push(r);
            words.extend(e.tokens.iter().map(String::as_str));
        }
        let chars = self.char_features(g, store, &words, rng.as_deref_mut());
        let r = g.concat_rows(&reprs);
        let mut x = g.concat_cols(&[r, chars]);
        if let Some(rr) = rng.as_deref_mut() {
            x = g.dropout(x, self.config.input_dropout, rr);
        }
        let sb = SeqBatch::new(&batch.iter().map(|e| e.len()).collect::<Vec<_>>());
        let mut h = self.net.lstm.forward(g, store, &sb, x, rng.as_deref_mut());
        if let Some(rr) = rng {
            h = g.dropout(h, self.config.layer_dropout, rr);
        }
        let h = self.net.hidden.forward(g, store, h);
        let h = g.tanh(h);
        Ok((sb, self.net.output.forward(g, store, h)))
    }

    /// Mean CRF negative log-likelihood per sentence.
    pub fn loss<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        batch: &[&TagExample],
        rng: Option<&mut R>,
    ) -> Result<Var> {
        let (sb, em) = self.emissions(g, store, batch, rng)?;
        let trans = g.param(store, self.net.transitions);
        let start = g.param(store, self.net.start);
        let stop = g.param(store, self.net.stop);
        let mut parts = Vec::with_capacity(batch.len());
        for (s, e) in batch.iter().enumerate() {
            let r = sb.range(s);
            let rows = g.slice_rows(em, r.start, r.len());
            let gold = self.tags.encode(&e.tags)?;
            parts.push(crf_nll(g, rows, trans, start, stop, &gold)?);
        }
        let all = g.concat_rows(&parts);
        Ok(g.mean(all))
    }

    /// Current CRF potentials.
    pub fn crf(&self) -> CrfParams {
        let f = |id| self.store.value(id).data().iter().map(|x: &T| x.to_f64_lossy()).collect::<Vec<f64>>();
        CrfParams::new(self.tags.len(), f(self.net.transitions), f(self.net.start), f(self.net.stop))
            .expect("shapes fixed at construction")
    }

    fn predict_one(&self, e: &TagExample, crf: &CrfParams) -> Result<Vec<String>> {
        let mut g = Graph::new();
        let (_, em) = self.emissions::<polyglot_core::Rng>(&mut g, &self.store, &[e], None)?;
        let em: Vec<f64> = g.value(em).data().iter().map(|x| x.to_f64_lossy()).collect();
        let path = crf.viterbi(&em, Some(&self.tags.bio_mask()))?;
        Ok(self.tags.decode(&path))
    }

    /// BIO tags per sentence, in parallel over sentences.
    pub fn predict(&self, examples: &[TagExample]) -> Result<Vec<Vec<String>>> {
        let crf = self.crf();
        par::map(examples, |e| self.predict_one(e, &crf)).into_iter().collect()
    }
}
