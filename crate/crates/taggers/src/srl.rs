//! Semantic role labeller: alternating-direction highway LSTM over
//! `[representation ∥ predicate indicator]`, per-token softmax, decoded
//! with BIO constraints and no learned transitions.

use rand::Rng;

use polyglot_core::nn::{Embedding, Linear, SeqBatch, AlternatingLstm};
use polyglot_core::{par, seeded_rng, Graph, ParamStore, Scalar, Var};
use polyglot_lm::{ReprLayer, ReprSpec};

use crate::config::SrlConfig;
use crate::crf::CrfParams;
use crate::error::{Result, TaggerError};
use crate::example::TagExample;
use crate::tagset::TagSet;

#[derive(Clone, Debug)]
pub struct SrlNet {
    pub repr: ReprLayer,
    /// Row 1 for the predicate token, row 0 elsewhere.
    pub indicator: Embedding,
    pub lstm: AlternatingLstm,
    pub output: Linear,
}

#[derive(Clone, Debug)]
pub struct SrlModel<T: Scalar = f32> {
    pub config: SrlConfig,
    pub tags: TagSet,
    pub net: SrlNet,
    pub store: ParamStore<T>,
}

impl<T: Scalar> SrlModel<T> {
    /// Tag set from the gold tags of `train`.
    pub fn for_data(config: SrlConfig, spec: ReprSpec, train: &[TagExample]) -> Result<Self> {
        let tags = TagSet::from_tags(train.iter().flat_map(|e| e.tags.iter().map(String::as_str)))?;
        Self::new(config, spec, tags)
    }

    pub fn new(config: SrlConfig, spec: ReprSpec, tags: TagSet) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.schedule.seed);
        let mut store = ParamStore::new();
        let repr = ReprLayer::build(&mut store, "srl.repr", spec);
        let indicator = Embedding::new(&mut store, "srl.indicator", 2, config.indicator_dim, &mut rng);
        let lstm = AlternatingLstm::new(
            &mut store,
            "srl.lstm",
            repr.output_dim() + config.indicator_dim,
            config.lstm_size,
            config.layers,
            config.recurrent_dropout,
            &mut rng,
        );
        let output = Linear::new(&mut store, "srl.output", lstm.output_dim(), tags.len(), true, &mut rng);
        Ok(SrlModel {
            config,
            tags,
            net: SrlNet {
                repr,
                indicator,
                lstm,
                output,
            },
            store,
        })
    }

    pub fn cast<U: Scalar>(&self) -> SrlModel<U> {
        SrlModel {
            config: self.config.clone(),
            tags: self.tags.clone(),
            net: self.net.clone(),
            store: self.store.cast(),
        }
    }

    /// `[total, tags]` scores for the batch, sentences stacked in order.
    fn scores<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        batch: &[&TagExample],
        rng: Option<&mut R>,
    ) -> Result<(SeqBatch, Var)> {
        let mut rows = Vec::with_capacity(batch.len());
        for e in batch {
            if e.is_empty() {
                return Err(TaggerError::Input("empty sentence".into()));
            }
            let p = match e.predicate {
                Some(p) if p < e.len() => p,
                Some(p) => return Err(TaggerError::Input(format!("predicate {} outside {} tokens", p, e.len()))),
                None => return Err(TaggerError::Input("missing predicate".into())),
            };
            let r = self.net.repr.forward(g, store, e.repr())?;
            if g.rows(r) != e.len() {
                return Err(TaggerError::LengthMismatch(g.rows(r), e.len()));
            }
            let ind: Vec<usize> = (0..e.len()).map(|i| usize::from(i == p)).collect();
            let ind = self.net.indicator.forward(g, store, &ind);
            rows.push(g.concat_cols(&[r, ind]));
        }
        let flat = g.concat_rows(&rows);
        let sb = SeqBatch::new(&batch.iter().map(|e| e.len()).collect::<Vec<_>>());
        let h = self.net.lstm.forward(g, store, &sb, flat, rng);
        Ok((sb, self.net.output.forward(g, store, h)))
    }

    /// Mean per-token cross-entropy against the gold tags.
    pub fn loss<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        batch: &[&TagExample],
        rng: Option<&mut R>,
    ) -> Result<Var> {
        let (sb, scores) = self.scores(g, store, batch, rng)?;
        let mut gold = Vec::with_capacity(sb.total());
        for e in batch {
            gold.extend(self.tags.encode(&e.tags)?);
        }
        let ce = g.cross_entropy(scores, &gold);
        Ok(g.mean(ce))
    }

    fn predict_one(&self, e: &TagExample) -> Result<Vec<String>> {
        let mut g = Graph::new();
        let (_, scores) = self.scores::<polyglot_core::Rng>(&mut g, &self.store, &[e], None)?;
        let logp = g.log_softmax(scores);
        let em: Vec<f64> = g.value(logp).data().iter().map(|x| x.to_f64_lossy()).collect();
        let path = CrfParams::zeros(self.tags.len()).viterbi(&em, Some(&self.tags.bio_mask()))?;
        Ok(self.tags.decode(&path))
    }

    /// BIO tags per sentence, in parallel over sentences.
    pub fn predict(&self, examples: &[TagExample]) -> Result<Vec<Vec<String>>> {
        par::map(examples, |e| self.predict_one(e)).into_iter().collect()
    }
}
