use rand::seq::SliceRandom;

use polyglot_core::{seeded_rng, Graph, OptimizerState};

use crate::error::Result;
use crate::eval::{las_eval, AttachmentCounts};
use crate::model::{ParseExample, ParserModel};

#[derive(Clone, Debug, PartialEq)]
pub struct ParserEpoch {
    pub epoch: usize,
    pub loss: f64,
    /// Greedy-decode attachment on the dev set, when one is given.
    pub dev: Option<AttachmentCounts>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParserTrainReport {
    pub epochs: Vec<ParserEpoch>,
    /// Epoch whose parameters were kept.
    pub best_epoch: Option<usize>,
}

/// Greedy-decode attachment counts over `examples`.
pub fn greedy_attachment(model: &ParserModel, examples: &[ParseExample]) -> Result<AttachmentCounts> {
    let mut c = AttachmentCounts::default();
    for (p, e) in model.parse_greedy(examples)?.iter().zip(examples) {
        c.add(las_eval(&p.heads, &p.rels, &e.heads, &e.rels)?);
    }
    Ok(c)
}

pub fn train_parser(model: &mut ParserModel, train: &[ParseExample], dev: Option<&[ParseExample]>) -> Result<ParserTrainReport> {
    train_parser_with(model, train, dev, |_, _| true)
}

/// Mini-batch training. With a dev set, the parameters of the epoch with
/// the best greedy dev LAS are restored at the end and training stops
/// after `patience` epochs without improvement. `on_epoch` may stop
/// training early by returning `false`.
pub fn train_parser_with<F>(
    model: &mut ParserModel,
    train: &[ParseExample],
    dev: Option<&[ParseExample]>,
    mut on_epoch: F,
) -> Result<ParserTrainReport>
where
    F: FnMut(&ParserEpoch, &ParserModel) -> bool,
{
    let cfg = model.config.clone();
    let mut opt = OptimizerState::new(cfg.optimizer);
    let mut rng = seeded_rng(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = ParserTrainReport::default();
    let mut best: Option<(f64, usize, polyglot_core::ParamStore<f32>)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut batches) = (0.0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&ParseExample> = chunk.iter().map(|&i| &train[i]).collect();
            let mut g = Graph::new();
            let loss = model.loss(&mut g, &model.store, &batch, Some(&mut rng))?;
            sum += g.value(loss).item() as f64;
            batches += 1;
            model.store.zero_grads();
            g.backward_into(loss, &mut model.store)?;
            opt.step_store(&mut model.store)?;
        }
        let dev_counts = match dev {
            Some(d) if !d.is_empty() => Some(greedy_attachment(model, d)?),
            _ => None,
        };
        let stats = ParserEpoch {
            epoch,
            loss: sum / batches.max(1) as f64,
            dev: dev_counts,
        };
        log::info!("parser epoch {} loss {:.4}", epoch, stats.loss);
        let mut stop = !on_epoch(&stats, model);
        if let Some(c) = dev_counts {
            if best.as_ref().is_none_or(|(las, _, _)| c.las() > *las) {
                best = Some((c.las(), epoch, model.store.clone()));
            } else if best.as_ref().is_some_and(|(_, e, _)| epoch - e >= cfg.patience) {
                stop = true;
            }
        }
        report.epochs.push(stats);
        if stop {
            break;
        }
    }
    if let Some((_, epoch, store)) = best {
        model.store = store;
        report.best_epoch = Some(epoch);
    }
    Ok(report)
}
