//! Truncated-BPTT training over language-homogeneous blocks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use polyglot_core::nn::StateValues;
use polyglot_core::{seeded_rng, Graph, OptimizerState};
use polyglot_text::{plan_polyglot_mix, MixBlock, TokenStream};

use crate::batch::windows;
use crate::error::{LmError, Result};
use crate::model::{with_markers, LmModel};
use crate::softmax::SoftmaxMode;

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss over the epoch's windows.
    pub loss: f64,
    pub windows: usize,
    /// Word tokens (markers excluded) consumed per language.
    pub tokens: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }
}

/// Blocks of at least `batch_tokens` tokens over a shuffled single stream.
fn mono_blocks(
    stream: &TokenStream,
    batch_tokens: usize,
    seed: u64,
    epoch: usize,
) -> Vec<MixBlock> {
    let mut order: Vec<usize> = (0..stream.len()).collect();
    order.shuffle(&mut seeded_rng(
        seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9),
    ));
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut tokens = 0;
    for i in order {
        cur.push(i);
        tokens += stream.sentence(i).len();
        if tokens >= batch_tokens {
            out.push(MixBlock {
                stream: 0,
                language: stream.language(cur[0]).to_string(),
                sentences: std::mem::take(&mut cur),
                tokens,
            });
            tokens = 0;
        }
    }
    if !cur.is_empty() {
        out.push(MixBlock {
            stream: 0,
            language: stream.language(cur[0]).to_string(),
            sentences: cur,
            tokens,
        });
    }
    out
}

pub fn train_lm(model: &mut LmModel<f32>, corpora: &[&TokenStream]) -> Result<TrainReport> {
    train_lm_with(model, corpora, |_, _| true)
}

/// Trains for `config.epochs` epochs. `on_epoch` sees each epoch's stats
/// and returns whether to continue.
pub fn train_lm_with<F>(
    model: &mut LmModel<f32>,
    corpora: &[&TokenStream],
    mut on_epoch: F,
) -> Result<TrainReport>
where
    F: FnMut(&EpochStats, &LmModel<f32>) -> bool,
{
    let cfg = model.config.clone();
    let want = if cfg.variant.is_polyglot() { 2 } else { 1 };
    if corpora.len() != want {
        return Err(LmError::Input(format!(
            "{} needs {} corpora",
            cfg.variant.name(),
            want
        )));
    }
    let (b, t) = (cfg.batch_size, cfg.unroll);
    let mut opt = OptimizerState::new(cfg.optimizer);
    let mut rng = seeded_rng(cfg.seed.wrapping_add(1));
    let mut sampling = seeded_rng(cfg.seed.wrapping_add(2));
    let mode = SoftmaxMode::Sampled(cfg.negatives);
    let mut report = TrainReport::default();

    for epoch in 0..cfg.epochs {
        let blocks = if cfg.variant.is_polyglot() {
            plan_polyglot_mix(corpora[0], corpora[1], b * t, cfg.seed, epoch)?.blocks
        } else {
            mono_blocks(corpora[0], b * t, cfg.seed, epoch)
        };
        let mut states: BTreeMap<String, (Vec<StateValues<f32>>, Vec<StateValues<f32>>)> =
            BTreeMap::new();
        let mut tokens: BTreeMap<String, usize> = BTreeMap::new();
        let (mut loss_sum, mut count) = (0.0, 0usize);
        for block in &blocks {
            let stream = corpora[block.stream];
            let mut seq = Vec::new();
            for &i in &block.sentences {
                if stream.language(i) != block.language {
                    return Err(LmError::MixedLanguages(
                        block.language.clone(),
                        stream.language(i).to_string(),
                    ));
                }
                seq.extend(with_markers(stream.sentence(i)));
            }
            *tokens.entry(block.language.clone()).or_default() += block.tokens;
            let state = states
                .entry(block.language.clone())
                .or_insert_with(|| (model.zero_states(b), model.zero_states(b)));
            for w in windows(&seq, &block.language, b, t, &model.vocab) {
                let mut g = Graph::new();
                let out = model.window_loss(
                    &mut g,
                    &model.store,
                    &w,
                    Some((&state.0, &state.1)),
                    mode,
                    &mut sampling,
                    Some(&mut rng),
                );
                loss_sum += g.value(out.loss).item() as f64;
                count += 1;
                state.0 = out
                    .forward_state
                    .iter()
                    .map(|&s| StateValues::from_graph(&g, s))
                    .collect();
                state.1 = out
                    .backward_state
                    .iter()
                    .map(|&s| StateValues::from_graph(&g, s))
                    .collect();
                model.store.zero_grads();
                g.backward_into(out.loss, &mut model.store)?;
                opt.step_store(&mut model.store)?;
            }
        }
        let stats = EpochStats {
            epoch,
            loss: loss_sum / count.max(1) as f64,
            windows: count,
            tokens,
        };
        log::info!(
            "lm epoch {} loss {:.4} over {} windows",
            epoch,
            stats.loss,
            count
        );
        let go_on = on_epoch(&stats, model);
        report.epochs.push(stats);
        if !go_on {
            break;
        }
    }
    Ok(report)
}
