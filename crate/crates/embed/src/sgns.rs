//! Skip-gram with negative sampling over words and hashed character n-grams.
//!
//! A word is represented by its own input row plus one row per n-gram
//! bucket; the hidden vector is their mean. Each (center, context) pair is
//! scored against the context's output row and `negatives` rows drawn from
//! the unigram distribution raised to 0.75. The learning rate decays
//! linearly to zero over training.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polyglot_text::{TokenStream, Vocabulary};

use crate::error::{EmbedError, Result};
use crate::matrix::EmbeddingMatrix;
use crate::subword::bucket_ids;

#[derive(Clone, Debug, PartialEq)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub buckets: usize,
    pub epochs: usize,
    pub lr: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 300,
            window: 5,
            negatives: 5,
            min_n: 3,
            max_n: 6,
            buckets: 200_000,
            epochs: 5,
            lr: 0.05,
            min_count: 1,
            seed: 1,
        }
    }
}

/// Trained input/output tables plus what is needed to embed any word.
#[derive(Clone, Debug)]
pub struct SgnsModel {
    pub config: SgnsConfig,
    pub vocab: Vocabulary,
    input: Vec<f64>,
    output: Vec<f64>,
    /// Mean loss per scored (center, context) pair, one entry per epoch.
    pub loss_history: Vec<f64>,
}

const UNIGRAM_TABLE: usize = 1_000_000;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn unigram_table(vocab: &Vocabulary) -> Vec<usize> {
    let first = polyglot_text::vocab::RESERVED.len();
    let weights: Vec<f64> = (first..vocab.len())
        .map(|i| (vocab.count(i) as f64).powf(0.75))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut table = Vec::with_capacity(UNIGRAM_TABLE);
    for (k, w) in weights.iter().enumerate() {
        let n = ((w / total) * UNIGRAM_TABLE as f64).ceil() as usize;
        table.extend(std::iter::repeat_n(first + k, n));
    }
    table
}

impl SgnsModel {
    fn rows(&self, word: &str) -> Vec<usize> {
        let v = self.vocab.len();
        let c = &self.config;
        let mut rows: Vec<usize> = self.vocab.get(word).into_iter().collect();
        rows.extend(bucket_ids(word, c.min_n, c.max_n, c.buckets).into_iter().map(|b| v + b));
        rows
    }

    /// Mean of the word's input rows. Words outside the vocabulary use
    /// their n-grams alone; with no n-grams either the result is zero.
    pub fn word_vector(&self, word: &str) -> Vec<f64> {
        let d = self.config.dim;
        let rows = self.rows(word);
        let mut out = vec![0.0; d];
        if rows.is_empty() {
            return out;
        }
        for r in &rows {
            for (o, x) in out.iter_mut().zip(&self.input[r * d..(r + 1) * d]) {
                *o += x;
            }
        }
        let k = rows.len() as f64;
        out.iter_mut().for_each(|o| *o /= k);
        out
    }

    /// Vectors for every non-reserved vocabulary word.
    pub fn matrix(&self) -> EmbeddingMatrix {
        let first = polyglot_text::vocab::RESERVED.len();
        let words: Vec<String> = self.vocab.tokens()[first..].to_vec();
        let data = words.iter().flat_map(|w| self.word_vector(w)).collect();
        EmbeddingMatrix::new(words, self.config.dim, data).expect("consistent shapes")
    }
}

/// Trains vectors on `stream`. Deterministic for a given config.
pub fn train_sgns(stream: &TokenStream, config: &SgnsConfig) -> Result<SgnsModel> {
    if stream.is_empty() {
        return Err(EmbedError::EmptyCorpus);
    }
    if config.dim == 0 {
        return Err(EmbedError::InvalidArgument("dim must be positive".into()));
    }
    let vocab = polyglot_text::build_vocab(stream, config.min_count, None)?;
    let d = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rows_in = vocab.len() + config.buckets;
    let bound = 1.0 / d as f64;
    let input: Vec<f64> = (0..rows_in * d).map(|_| rng.random_range(-bound..bound)).collect();
    let mut model = SgnsModel {
        config: config.clone(),
        output: vec![0.0; vocab.len() * d],
        vocab,
        input,
        loss_history: Vec::with_capacity(config.epochs),
    };
    let sentences: Vec<Vec<usize>> = stream.sentences().iter().map(|s| model.vocab.encode(s)).collect();
    let subwords: Vec<Vec<usize>> = model.vocab.tokens().iter().map(|w| model.rows(w)).collect();
    let table = unigram_table(&model.vocab);
    let total_steps = (config.epochs * stream.token_count()).max(1) as f64;
    let mut processed = 0usize;
    let mut hidden = vec![0.0; d];
    let mut grad = vec![0.0; d];
    for _ in 0..config.epochs {
        let (mut loss_sum, mut pairs) = (0.0, 0usize);
        for sent in &sentences {
            for (pos, &center) in sent.iter().enumerate() {
                let lr = config.lr * (1.0 - processed as f64 / total_steps);
                processed += 1;
                if center == polyglot_text::vocab::UNK {
                    continue;
                }
                let rows = &subwords[center];
                let k = rows.len() as f64;
                let reach = rng.random_range(1..=config.window.max(1));
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sent.len() - 1);
                for (cpos, &context) in sent.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos || context == polyglot_text::vocab::UNK {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    hidden.iter_mut().for_each(|h| *h = 0.0);
                    for r in rows {
                        for (h, x) in hidden.iter_mut().zip(&model.input[r * d..(r + 1) * d]) {
                            *h += x / k;
                        }
                    }
                    let score = |target: usize, label: f64, grad: &mut [f64], out: &mut [f64]| -> f64 {
                        let o = &mut out[target * d..(target + 1) * d];
                        let dot: f64 = o.iter().zip(&hidden).map(|(a, b)| a * b).sum();
                        let p = sigmoid(dot);
                        let alpha = lr * (label - p);
                        for j in 0..d {
                            grad[j] += alpha * o[j];
                            o[j] += alpha * hidden[j];
                        }
                        let q = if label > 0.5 { p } else { 1.0 - p };
                        -q.max(1e-12).ln()
                    };
                    loss_sum += score(context, 1.0, &mut grad, &mut model.output);
                    for _ in 0..config.negatives {
                        let neg = loop {
                            let n = table[rng.random_range(0..table.len())];
                            if n != context || table.len() == 1 {
                                break n;
                            }
                        };
                        loss_sum += score(neg, 0.0, &mut grad, &mut model.output);
                    }
                    pairs += 1;
                    for r in rows {
                        for (x, g) in model.input[r * d..(r + 1) * d].iter_mut().zip(&grad) {
                            *x += g;
                        }
                    }
                }
            }
        }
        model.loss_history.push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
    }
    Ok(model)
}
