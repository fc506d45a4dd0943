use rand::seq::SliceRandom;

use polyglot_core::{seeded_rng, Graph, OptimizerState, ParamStore, Rng, Var};
use polyglot_text::bio_to_spans;

use crate::config::Schedule;
use crate::error::Result;
use crate::eval::{span_counts, SpanCounts, VERB};
use crate::example::TagExample;
use crate::ner::NerModel;
use crate::srl::SrlModel;

/// What the shared training loop needs from a tagger.
pub trait SequenceTagger: Sync {
    fn schedule(&self) -> Schedule;
    fn store(&self) -> &ParamStore<f32>;
    fn store_mut(&mut self) -> &mut ParamStore<f32>;
    fn batch_loss(&self, g: &mut Graph<f32>, store: &ParamStore<f32>, batch: &[&TagExample], rng: &mut Rng) -> Result<Var>;
    fn predict(&self, examples: &[TagExample]) -> Result<Vec<Vec<String>>>;
    /// Span types left out of scoring.
    fn excluded(&self) -> &'static [&'static str];
}

impl SequenceTagger for SrlModel {
    fn schedule(&self) -> Schedule {
        self.config.schedule
    }

    fn store(&self) -> &ParamStore<f32> {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }

    fn batch_loss(&self, g: &mut Graph<f32>, store: &ParamStore<f32>, batch: &[&TagExample], rng: &mut Rng) -> Result<Var> {
        self.loss(g, store, batch, Some(rng))
    }

    fn predict(&self, examples: &[TagExample]) -> Result<Vec<Vec<String>>> {
        SrlModel::predict(self, examples)
    }

    fn excluded(&self) -> &'static [&'static str] {
        &[VERB]
    }
}

impl SequenceTagger for NerModel {
    fn schedule(&self) -> Schedule {
        self.config.schedule
    }

    fn store(&self) -> &ParamStore<f32> {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }

    fn batch_loss(&self, g: &mut Graph<f32>, store: &ParamStore<f32>, batch: &[&TagExample], rng: &mut Rng) -> Result<Var> {
        self.loss(g, store, batch, Some(rng))
    }

    fn predict(&self, examples: &[TagExample]) -> Result<Vec<Vec<String>>> {
        NerModel::predict(self, examples)
    }

    fn excluded(&self) -> &'static [&'static str] {
        &[]
    }
}

/// Decodes `examples` and counts exact span matches against their gold
/// tags.
pub fn evaluate<M: SequenceTagger>(model: &M, examples: &[TagExample]) -> Result<SpanCounts> {
    let mut c = SpanCounts::default();
    for (tags, e) in model.predict(examples)?.iter().zip(examples) {
        c.add(span_counts(&bio_to_spans(tags)?, &e.spans()?, model.excluded()));
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaggerEpoch {
    pub epoch: usize,
    pub loss: f64,
    pub dev: Option<SpanCounts>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TaggerTrainReport {
    pub epochs: Vec<TaggerEpoch>,
    /// Epoch whose parameters were kept.
    pub best_epoch: Option<usize>,
}

pub fn train_tagger<M: SequenceTagger>(model: &mut M, train: &[TagExample], dev: Option<&[TagExample]>) -> Result<TaggerTrainReport> {
    train_tagger_with(model, train, dev, |_, _| true)
}

/// Mini-batch training. With a dev set, the parameters of the epoch with
/// the best dev F1 are restored at the end and training stops after
/// `patience` epochs without improvement. `on_epoch` may stop training
/// early by returning `false`.
pub fn train_tagger_with<M, F>(
    model: &mut M,
    train: &[TagExample],
    dev: Option<&[TagExample]>,
    mut on_epoch: F,
) -> Result<TaggerTrainReport>
where
    M: SequenceTagger,
    F: FnMut(&TaggerEpoch, &M) -> bool,
{
    let sched = model.schedule();
    let mut opt = OptimizerState::new(sched.optimizer);
    let mut rng = seeded_rng(sched.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = TaggerTrainReport::default();
    let mut best: Option<(f64, usize, ParamStore<f32>)> = None;
    for epoch in 0..sched.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut batches) = (0.0, 0);
        for chunk in order.chunks(sched.batch_size) {
            let batch: Vec<&TagExample> = chunk.iter().map(|&i| &train[i]).collect();
            let mut g = Graph::new();
            let loss = model.batch_loss(&mut g, model.store(), &batch, &mut rng)?;
            sum += g.value(loss).item() as f64;
            batches += 1;
            let store = model.store_mut();
            store.zero_grads();
            g.backward_into(loss, store)?;
            opt.step_store(store)?;
        }
        let dev_counts = match dev {
            Some(d) if !d.is_empty() => Some(evaluate(model, d)?),
            _ => None,
        };
        let stats = TaggerEpoch {
            epoch,
            loss: sum / batches.max(1) as f64,
            dev: dev_counts,
        };
        log::info!("tagger epoch {} loss {:.4}", epoch, stats.loss);
        let mut stop = !on_epoch(&stats, model);
        if let Some(c) = dev_counts {
            if best.as_ref().is_none_or(|(f1, _, _)| c.f1() > *f1) {
                best = Some((c.f1(), epoch, model.store().clone()));
            } else if best.as_ref().is_some_and(|(_, e, _)| epoch - e >= sched.patience) {
                stop = true;
            }
        }
        report.epochs.push(stats);
        if stop {
            break;
        }
    }
    if let Some((_, epoch, store)) = best {
        *model.store_mut() = store;
        report.best_epoch = Some(epoch);
    }
    Ok(report)
}
