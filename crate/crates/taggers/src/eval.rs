use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use polyglot_text::Span;

/// Span type left out of SRL scoring: the predicate itself.
pub const VERB: &str = "V";

/// Exact-match span counts, summed over a corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanCounts {
    pub predicted: usize,
    pub gold: usize,
    pub correct: usize,
}

impl SpanCounts {
    pub fn add(&mut self, other: SpanCounts) {
        self.predicted += other.predicted;
        self.gold += other.gold;
        self.correct += other.correct;
    }

    /// Fraction; 0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        if self.predicted == 0 {
            0.0
        } else {
            self.correct as f64 / self.predicted as f64
        }
    }

    /// Fraction; 0 when there is no gold span.
    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            0.0
        } else {
            self.correct as f64 / self.gold as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Percentages for reporting.
    pub fn metrics(&self) -> SpanMetrics {
        SpanMetrics {
            precision: 100.0 * self.precision(),
            recall: 100.0 * self.recall(),
            f1: 100.0 * self.f1(),
            span_counts: *self,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub span_counts: SpanCounts,
}

/// Counts for one sentence. Spans whose type is in `exclude` are ignored
/// on both sides; duplicates count once.
pub fn span_counts(predicted: &[Span], gold: &[Span], exclude: &[&str]) -> SpanCounts {
    let keep = |s: &&Span| !exclude.contains(&s.label.as_str());
    let p: HashSet<&Span> = predicted.iter().filter(keep).collect();
    let g: HashSet<&Span> = gold.iter().filter(keep).collect();
    SpanCounts {
        predicted: p.len(),
        gold: g.len(),
        correct: p.intersection(&g).count(),
    }
}

/// Micro-averaged counts over a corpus of `(predicted, gold)` pairs.
pub fn span_f1<'a, I>(pairs: I, exclude: &[&str]) -> SpanCounts
where
    I: IntoIterator<Item = (&'a [Span], &'a [Span])>,
{
    let mut c = SpanCounts::default();
    for (p, g) in pairs {
        c.add(span_counts(p, g, exclude));
    }
    c
}
