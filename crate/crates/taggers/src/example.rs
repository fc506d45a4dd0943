use polyglot_lm::{LayerStack, ReprInput};
use polyglot_text::{bio_to_spans, spans_to_bio, AnnotatedSentence, Span};

use crate::error::{Result, TaggerError};

/// A sentence with gold BIO tags and its representation source.
#[derive(Clone, Debug, PartialEq)]
pub struct TagExample {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
    /// Token index of the SRL predicate.
    pub predicate: Option<usize>,
    /// Present when the representation is contextual.
    pub stack: Option<LayerStack>,
}

impl TagExample {
    fn build(s: &AnnotatedSentence, spans: &[Span], predicate: Option<usize>, stack: Option<LayerStack>) -> Result<Self> {
        s.validate()?;
        if let Some(st) = &stack {
            if st.tokens != s.len() {
                return Err(TaggerError::LengthMismatch(st.tokens, s.len()));
            }
        }
        Ok(TagExample {
            tokens: s.tokens.clone(),
            tags: spans_to_bio(spans, s.len())?,
            predicate,
            stack,
        })
    }

    /// Role spans of the sentence's predicate.
    pub fn srl(s: &AnnotatedSentence, stack: Option<LayerStack>) -> Result<Self> {
        let p = s
            .predicate
            .ok_or_else(|| TaggerError::Input("sentence has no predicate".into()))?;
        Self::build(s, s.roles.as_deref().unwrap_or(&[]), Some(p), stack)
    }

    /// Entity spans; a sentence without them is all `O`.
    pub fn ner(s: &AnnotatedSentence, stack: Option<LayerStack>) -> Result<Self> {
        Self::build(s, s.entities.as_deref().unwrap_or(&[]), None, stack)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn spans(&self) -> Result<Vec<Span>> {
        Ok(bio_to_spans(&self.tags)?)
    }

    pub fn repr(&self) -> ReprInput<'_> {
        match &self.stack {
            Some(s) => ReprInput::Stack(s),
            None => ReprInput::Tokens(&self.tokens),
        }
    }
}
