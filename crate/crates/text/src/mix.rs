//! Per-epoch schedule that shows a bilingual model the same number of
//! tokens from each language.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TextError};
use crate::stream::TokenStream;

/// A language-homogeneous run of sentences from one stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixBlock {
    /// 0 for the first stream, 1 for the second.
    pub stream: usize,
    pub language: String,
    pub sentences: Vec<usize>,
    pub tokens: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedBatchPlan {
    pub epoch: usize,
    pub blocks: Vec<MixBlock>,
}

impl MixedBatchPlan {
    pub fn tokens_for(&self, stream: usize) -> usize {
        self.blocks.iter().filter(|b| b.stream == stream).map(|b| b.tokens).sum()
    }

    pub fn sentences_for(&self, stream: usize) -> impl Iterator<Item = usize> + '_ {
        self.blocks
            .iter()
            .filter(move |b| b.stream == stream)
            .flat_map(|b| b.sentences.iter().copied())
    }
}

fn epoch_rng(seed: u64, epoch: usize, stream: usize) -> ChaCha8Rng {
    let mix = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((epoch as u64) << 8 | stream as u64);
    ChaCha8Rng::seed_from_u64(mix)
}

/// Selects sentences from `stream` (in shuffled order) until `target`
/// tokens are reached, skipping any that would overshoot by more than
/// `slack`.
fn select(stream: &TokenStream, order: &[usize], target: usize, slack: usize) -> Vec<usize> {
    let mut total = 0;
    let mut out = Vec::new();
    for &i in order {
        if total >= target {
            break;
        }
        let n = stream.sentence(i).len();
        if total + n <= target + slack {
            total += n;
            out.push(i);
        }
    }
    out
}

fn blocks(stream: &TokenStream, which: usize, chosen: &[usize], batch_tokens: usize) -> Vec<MixBlock> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut tokens = 0;
    for &i in chosen {
        cur.push(i);
        tokens += stream.sentence(i).len();
        if tokens >= batch_tokens {
            out.push(MixBlock {
                stream: which,
                language: stream.language(i).to_string(),
                sentences: std::mem::take(&mut cur),
                tokens,
            });
            tokens = 0;
        }
    }
    if let Some(&last) = cur.last() {
        out.push(MixBlock {
            stream: which,
            language: stream.language(last).to_string(),
            sentences: cur,
            tokens,
        });
    }
    out
}

/// Plans epoch `epoch`: both streams are shuffled, the larger one is
/// subsampled to the smaller one's token count, and blocks of about
/// `batch_tokens` tokens alternate between the languages.
///
/// When no sentence is longer than `batch_tokens` the two token totals
/// differ by at most `batch_tokens`.
pub fn plan_polyglot_mix(
    a: &TokenStream,
    b: &TokenStream,
    batch_tokens: usize,
    seed: u64,
    epoch: usize,
) -> Result<MixedBatchPlan> {
    if batch_tokens < 1 {
        return Err(TextError::InvalidArgument("batch size must be at least 1".into()));
    }
    if a.is_empty() || b.is_empty() {
        return Err(TextError::InvalidArgument("both streams must be non-empty".into()));
    }
    let target = a.token_count().min(b.token_count());
    let mut per_stream = Vec::with_capacity(2);
    for (which, s) in [a, b].into_iter().enumerate() {
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.shuffle(&mut epoch_rng(seed, epoch, which));
        let chosen = select(s, &order, target, batch_tokens);
        per_stream.push(blocks(s, which, &chosen, batch_tokens));
    }
    let mut out = Vec::new();
    let mut ib = per_stream.pop().unwrap_or_default().into_iter();
    let mut ia = per_stream.pop().unwrap_or_default().into_iter();
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => break,
            (x, y) => out.extend(x.into_iter().chain(y)),
        }
    }
    Ok(MixedBatchPlan { epoch, blocks: out })
}
