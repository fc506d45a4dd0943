//! Lays a token sequence out as `B` contiguous lanes cut into windows of
//! `T` steps, for both reading directions.

use std::collections::HashMap;

use polyglot_text::Vocabulary;

/// One direction of a window, time-major (`index = t * batch + lane`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lanes {
    /// Index into [`Window::words`] of the input token.
    pub inputs: Vec<usize>,
    /// Vocabulary id of the token to predict.
    pub targets: Vec<usize>,
    pub mask: Vec<bool>,
}

impl Lanes {
    pub fn step_mask(&self, t: usize, batch: usize) -> &[bool] {
        &self.mask[t * batch..(t + 1) * batch]
    }
}

/// A `batch × steps` training window from one language.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub language: String,
    pub batch: usize,
    pub steps: usize,
    /// Distinct surface forms used as inputs.
    pub words: Vec<String>,
    pub forward: Lanes,
    pub backward: Lanes,
}

fn lanes(
    seq: &[&str],
    batch: usize,
    steps: usize,
    window: usize,
    lane_len: usize,
    vocab: &Vocabulary,
    intern: &mut impl FnMut(&str) -> usize,
) -> Lanes {
    let pairs = seq.len().saturating_sub(1);
    let n = batch * steps;
    let mut out = Lanes {
        inputs: vec![0; n],
        targets: vec![polyglot_text::vocab::PAD; n],
        mask: vec![false; n],
    };
    for t in 0..steps {
        let pos = window * steps + t;
        if pos >= lane_len {
            continue;
        }
        for b in 0..batch {
            let i = b * lane_len + pos;
            if i < pairs {
                let k = t * batch + b;
                out.inputs[k] = intern(seq[i]);
                out.targets[k] = vocab.id(seq[i + 1]);
                out.mask[k] = true;
            }
        }
    }
    out
}

/// Splits `seq` into windows. Lane `b` holds prediction pairs
/// `b * L .. (b + 1) * L` where `L = ceil((len - 1) / batch)`; the backward
/// direction does the same over the reversed sequence.
pub fn windows(
    seq: &[&str],
    language: &str,
    batch: usize,
    steps: usize,
    vocab: &Vocabulary,
) -> Vec<Window> {
    let pairs = seq.len().saturating_sub(1);
    if pairs == 0 {
        return Vec::new();
    }
    let lane_len = pairs.div_ceil(batch);
    let count = lane_len.div_ceil(steps);
    let rev: Vec<&str> = seq.iter().rev().copied().collect();
    (0..count)
        .map(|w| {
            let mut words: Vec<String> = Vec::new();
            let mut index: HashMap<String, usize> = HashMap::new();
            let mut intern = |s: &str| {
                if let Some(&i) = index.get(s) {
                    return i;
                }
                index.insert(s.to_string(), words.len());
                words.push(s.to_string());
                words.len() - 1
            };
            let forward = lanes(seq, batch, steps, w, lane_len, vocab, &mut intern);
            let backward = lanes(&rev, batch, steps, w, lane_len, vocab, &mut intern);
            if words.is_empty() {
                words.push(seq[0].to_string());
            }
            Window {
                language: language.to_string(),
                batch,
                steps,
                words,
                forward,
                backward,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_pair_predicted_once_per_direction() {
        let toks: Vec<String> = (0..23).map(|i| format!("w{}", i)).collect();
        let vocab = Vocabulary::from_tokens(toks.iter().map(|s| s.as_str()), 1, None).unwrap();
        let seq: Vec<&str> = toks.iter().map(|s| s.as_str()).collect();
        let ws = windows(&seq, "en", 3, 4, &vocab);
        let mut fwd = Vec::new();
        let mut bwd = Vec::new();
        for w in &ws {
            for k in 0..w.batch * w.steps {
                if w.forward.mask[k] {
                    fwd.push((
                        w.words[w.forward.inputs[k]].clone(),
                        vocab.token(w.forward.targets[k]).to_string(),
                    ));
                }
                if w.backward.mask[k] {
                    bwd.push((
                        w.words[w.backward.inputs[k]].clone(),
                        vocab.token(w.backward.targets[k]).to_string(),
                    ));
                }
            }
        }
        fwd.sort();
        bwd.sort();
        let mut want_f: Vec<(String, String)> =
            seq.windows(2).map(|p| (p[0].into(), p[1].into())).collect();
        let mut want_b: Vec<(String, String)> =
            seq.windows(2).map(|p| (p[1].into(), p[0].into())).collect();
        want_f.sort();
        want_b.sort();
        assert_eq!(fwd, want_f);
        assert_eq!(bwd, want_b);
    }

    #[test]
    fn lanes_are_contiguous_across_windows() {
        let toks: Vec<String> = (0..41).map(|i| format!("w{}", i)).collect();
        let vocab = Vocabulary::from_tokens(toks.iter().map(|s| s.as_str()), 1, None).unwrap();
        let seq: Vec<&str> = toks.iter().map(|s| s.as_str()).collect();
        let ws = windows(&seq, "en", 2, 5, &vocab);
        // 40 pairs, lanes of 20, 4 windows; lane 1 starts at pair 20.
        assert_eq!(ws.len(), 4);
        let w1 = &ws[1];
        assert_eq!(w1.words[w1.forward.inputs[1]], "w25");
        assert_eq!(vocab.token(w1.forward.targets[1]), "w26");
    }
}
