use std::collections::BTreeSet;

use polyglot_text::{LabelSet, Span};

use crate::error::{Result, TaggerError};

pub const OUTSIDE: &str = "O";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prefix {
    B,
    I,
    O,
}

/// BIO tags with their prefix and span type. Id 0 is always `O`, then
/// `B-X`, `I-X` for each type in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagSet {
    tags: LabelSet,
    parts: Vec<(Prefix, String)>,
}

/// Allowed transitions and start tags of a tag set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMask {
    pub tags: usize,
    /// `allowed[i * tags + j]`: tag `j` may follow tag `i`.
    pub allowed: Vec<bool>,
    pub start: Vec<bool>,
}

impl TransitionMask {
    pub fn unconstrained(tags: usize) -> Self {
        TransitionMask {
            tags,
            allowed: vec![true; tags * tags],
            start: vec![true; tags],
        }
    }

    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.allowed[from * self.tags + to]
    }
}

impl TagSet {
    pub fn from_types<I, S>(types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let types: BTreeSet<String> = types.into_iter().map(|s| s.as_ref().to_string()).collect();
        let mut names = vec![OUTSIDE.to_string()];
        let mut parts = vec![(Prefix::O, String::new())];
        for t in types {
            names.push(format!("B-{}", t));
            parts.push((Prefix::B, t.clone()));
            names.push(format!("I-{}", t));
            parts.push((Prefix::I, t));
        }
        TagSet {
            tags: LabelSet::from_ordered(names),
            parts,
        }
    }

    /// Span types of every `B-`/`I-` tag in `tags`.
    pub fn from_tags<'a, I: IntoIterator<Item = &'a str>>(tags: I) -> Result<Self> {
        let mut types = BTreeSet::new();
        for t in tags {
            match t.strip_prefix("B-").or_else(|| t.strip_prefix("I-")) {
                Some(x) if !x.is_empty() => {
                    types.insert(x.to_string());
                }
                _ if t == OUTSIDE => {}
                _ => return Err(TaggerError::Input(format!("not a BIO tag: {}", t))),
            }
        }
        Ok(Self::from_types(types))
    }

    /// Types of all spans.
    pub fn from_spans<'a, I: IntoIterator<Item = &'a Span>>(spans: I) -> Self {
        Self::from_types(spans.into_iter().map(|s| s.label.as_str()))
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, tag: &str) -> Option<usize> {
        self.tags.id(tag)
    }

    pub fn tag(&self, id: usize) -> &str {
        self.tags.label(id)
    }

    pub fn tags(&self) -> &[String] {
        self.tags.labels()
    }

    pub fn prefix(&self, id: usize) -> Prefix {
        self.parts[id].0
    }

    pub fn span_type(&self, id: usize) -> Option<&str> {
        match self.parts[id].0 {
            Prefix::O => None,
            _ => Some(&self.parts[id].1),
        }
    }

    /// `I-X` only after `B-X` or `I-X`, and never first.
    pub fn bio_mask(&self) -> TransitionMask {
        let n = self.len();
        let mut m = TransitionMask::unconstrained(n);
        for to in 0..n {
            if self.prefix(to) != Prefix::I {
                continue;
            }
            m.start[to] = false;
            for from in 0..n {
                m.allowed[from * n + to] = self.prefix(from) != Prefix::O && self.span_type(from) == self.span_type(to);
            }
        }
        m
    }

    pub fn encode<S: AsRef<str>>(&self, tags: &[S]) -> Result<Vec<usize>> {
        tags.iter()
            .map(|t| {
                self.id(t.as_ref())
                    .ok_or_else(|| TaggerError::Input(format!("unknown tag {}", t.as_ref())))
            })
            .collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.tag(i).to_string()).collect()
    }

    /// Whether the tag sequence obeys the BIO constraints.
    pub fn is_valid(&self, ids: &[usize]) -> bool {
        let m = self.bio_mask();
        match ids.first() {
            None => true,
            Some(&f) => m.start[f] && ids.windows(2).all(|w| m.allows(w[0], w[1])),
        }
    }
}
