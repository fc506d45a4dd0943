//! Attachment scores with relation subtypes stripped.

use serde::{Deserialize, Serialize};

use crate::error::{ParserError, Result};

/// `"nmod:poss"` → `"nmod"`.
pub fn strip_subtype(rel: &str) -> &str {
    rel.split(':').next().unwrap_or(rel)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachmentCounts {
    pub tokens: usize,
    pub head_correct: usize,
    pub both_correct: usize,
}

impl AttachmentCounts {
    pub fn add(&mut self, other: AttachmentCounts) {
        self.tokens += other.tokens;
        self.head_correct += other.head_correct;
        self.both_correct += other.both_correct;
    }

    /// Percent of tokens with the right head.
    pub fn uas(&self) -> f64 {
        100.0 * self.head_correct as f64 / self.tokens.max(1) as f64
    }

    /// Percent of tokens with the right head and relation.
    pub fn las(&self) -> f64 {
        100.0 * self.both_correct as f64 / self.tokens.max(1) as f64
    }

    pub fn metrics(&self) -> ParserMetrics {
        ParserMetrics {
            uas: self.uas(),
            las: self.las(),
            token_count: self.tokens,
        }
    }
}

/// Metrics file contents for a parsing evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParserMetrics {
    pub uas: f64,
    pub las: f64,
    pub token_count: usize,
}

pub fn las_eval<S: AsRef<str>, U: AsRef<str>>(
    pred_heads: &[usize],
    pred_rels: &[S],
    gold_heads: &[usize],
    gold_rels: &[U],
) -> Result<AttachmentCounts> {
    let n = gold_heads.len();
    for len in [pred_heads.len(), pred_rels.len(), gold_rels.len()] {
        if len != n {
            return Err(ParserError::LengthMismatch(len, n));
        }
    }
    let mut c = AttachmentCounts {
        tokens: n,
        ..Default::default()
    };
    for i in 0..n {
        if pred_heads[i] == gold_heads[i] {
            c.head_correct += 1;
            if strip_subtype(pred_rels[i].as_ref()) == strip_subtype(gold_rels[i].as_ref()) {
                c.both_correct += 1;
            }
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_by_definition() {
        let c = las_eval(&[0, 1, 1, 2], &["root", "a", "b", "x"], &[0, 1, 1, 1], &["root", "a", "c", "x"]).unwrap();
        assert_eq!((c.uas(), c.las()), (75.0, 50.0));
        let c = las_eval(&[0, 1], &["root", "nmod:poss"], &[0, 1], &["root", "nmod"]).unwrap();
        assert_eq!((c.uas(), c.las()), (100.0, 100.0));
        assert!(las_eval(&[0], &["a"], &[0, 1], &["a", "b"]).is_err());
    }
}
