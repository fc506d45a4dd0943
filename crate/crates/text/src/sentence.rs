use crate::error::{Result, TextError};

/// A labelled token range; `start` and `end` are inclusive token indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(label: impl Into<String>, start: usize, end: usize) -> Self {
        Span {
            label: label.into(),
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A tokenized sentence with whatever annotation layers its source provides.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub tokens: Vec<String>,
    pub language: String,
    pub pos: Option<Vec<String>>,
    /// 1-based head per token, 0 for the artificial root.
    pub heads: Option<Vec<usize>>,
    pub deprels: Option<Vec<String>>,
    pub predicate: Option<usize>,
    pub roles: Option<Vec<Span>>,
    pub entities: Option<Vec<Span>>,
}

impl AnnotatedSentence {
    pub fn new(tokens: Vec<String>, language: impl Into<String>) -> Self {
        AnnotatedSentence {
            tokens,
            language: language.into(),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Checks the structural invariants of every present layer.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let bad = |m: String| Err(TextError::InvalidSentence(m));
        if n == 0 {
            return bad("no tokens".into());
        }
        if let Some(pos) = &self.pos {
            if pos.len() != n {
                return bad(format!("{} POS tags for {} tokens", pos.len(), n));
            }
        }
        match (&self.heads, &self.deprels) {
            (Some(h), Some(r)) => {
                if h.len() != n || r.len() != n {
                    return bad("tree layer length differs from token count".into());
                }
                if let Some(&x) = h.iter().find(|&&x| x > n) {
                    return bad(format!("head {} out of range 0..={}", x, n));
                }
            }
            (None, None) => {}
            _ => return bad("heads and relations must be given together".into()),
        }
        if let Some(p) = self.predicate {
            if p >= n {
                return bad(format!("predicate index {} out of range", p));
            }
        }
        for layer in [&self.roles, &self.entities].into_iter().flatten() {
            check_spans(layer, n).or_else(bad)?;
        }
        Ok(())
    }
}

/// Spans must be in bounds, ordered and non-overlapping.
pub(crate) fn check_spans(spans: &[Span], n: usize) -> std::result::Result<(), String> {
    let mut prev_end: Option<usize> = None;
    for s in spans {
        if s.start > s.end || s.end >= n {
            return Err(format!("span {:?} out of bounds for {} tokens", s, n));
        }
        if matches!(prev_end, Some(e) if s.start <= e) {
            return Err(format!("span {:?} overlaps or is out of order", s));
        }
        prev_end = Some(s.end);
    }
    Ok(())
}
