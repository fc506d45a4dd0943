//! Conversion between BIO tag sequences and typed spans.

use crate::error::{Result, TextError};
use crate::sentence::{check_spans, Span};

/// Reads spans from `tags`. An `I-X` must continue a `B-X` or `I-X`.
pub fn bio_to_spans<S: AsRef<str>>(tags: &[S]) -> Result<Vec<Span>> {
    let mut spans: Vec<Span> = Vec::new();
    let mut open = false;
    for (i, tag) in tags.iter().enumerate() {
        let tag = tag.as_ref();
        let invalid = || TextError::InvalidBio {
            position: i,
            tag: tag.to_string(),
        };
        if tag == "O" {
            open = false;
        } else if let Some(label) = tag.strip_prefix("B-") {
            if label.is_empty() {
                return Err(invalid());
            }
            spans.push(Span::new(label, i, i));
            open = true;
        } else if let Some(label) = tag.strip_prefix("I-") {
            match spans.last_mut() {
                Some(s) if open && s.label == label && s.end + 1 == i => s.end = i,
                _ => return Err(invalid()),
            }
        } else {
            return Err(invalid());
        }
    }
    Ok(spans)
}

/// Writes `spans` as `len` BIO tags.
pub fn spans_to_bio(spans: &[Span], len: usize) -> Result<Vec<String>> {
    check_spans(spans, len).map_err(TextError::InvalidSentence)?;
    let mut tags = vec!["O".to_string(); len];
    for s in spans {
        tags[s.start] = format!("B-{}", s.label);
        for t in &mut tags[s.start + 1..=s.end] {
            *t = format!("I-{}", s.label);
        }
    }
    Ok(tags)
}
