use std::io::BufRead;
use std::path::Path;

use crate::error::{Result, TextError};
use crate::normalize::normalize;

/// Pre-tokenized sentences, each tagged with one language code.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenStream {
    sentences: Vec<Vec<String>>,
    languages: Vec<String>,
    pub source: String,
}

impl TokenStream {
    pub fn new(source: impl Into<String>) -> Self {
        TokenStream {
            source: source.into(),
            ..Default::default()
        }
    }

    /// Appends a sentence. Empty sentences are rejected.
    pub fn push(&mut self, tokens: Vec<String>, language: &str) -> Result<()> {
        if tokens.is_empty() {
            return Err(TextError::InvalidArgument("empty sentence".into()));
        }
        self.sentences.push(tokens);
        self.languages.push(language.to_string());
        Ok(())
    }

    /// One sentence per line, normalized then split on whitespace. Lines
    /// that normalize to nothing are skipped.
    pub fn from_reader<R: BufRead>(reader: R, language: &str, source: &str) -> Result<Self> {
        let mut s = TokenStream::new(source);
        for line in reader.lines() {
            let line = normalize(&line?, language);
            let tokens: Vec<String> = line.split(' ').filter(|t| !t.is_empty()).map(String::from).collect();
            if !tokens.is_empty() {
                s.push(tokens, language)?;
            }
        }
        Ok(s)
    }

    pub fn from_text(text: &str, language: &str, source: &str) -> Self {
        Self::from_reader(text.as_bytes(), language, source).expect("reading from memory")
    }

    pub fn read(path: &Path, language: &str) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(f), language, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentence(&self, i: usize) -> &[String] {
        &self.sentences[i]
    }

    pub fn language(&self, i: usize) -> &str {
        &self.languages[i]
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], &str)> {
        self.sentences
            .iter()
            .zip(&self.languages)
            .map(|(s, l)| (s.as_slice(), l.as_str()))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Concatenates two streams, keeping each sentence's language.
    pub fn merged(&self, other: &TokenStream) -> TokenStream {
        let mut out = self.clone();
        out.sentences.extend(other.sentences.iter().cloned());
        out.languages.extend(other.languages.iter().cloned());
        out.source = format!("{}+{}", self.source, other.source);
        out
    }
}
