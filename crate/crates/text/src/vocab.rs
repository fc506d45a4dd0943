use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{parse_err, Result, TextError};
use crate::stream::TokenStream;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

/// Dense token ids with frequency counts. Ids 0..4 are reserved for
/// padding, unknown, sentence begin and sentence end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Only the reserved tokens.
    pub fn reserved() -> Self {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            counts: Vec::new(),
            index: HashMap::new(),
        };
        for r in RESERVED {
            v.insert(r, 0);
        }
        v
    }

    fn insert(&mut self, token: &str, count: u64) -> usize {
        let id = self.tokens.len();
        self.tokens.push(token.to_string());
        self.counts.push(count);
        self.index.insert(token.to_string(), id);
        id
    }

    /// Keeps tokens seen at least `min_count` times, most frequent first
    /// (ties in byte order), at most `max_size` of them.
    pub fn from_tokens<'a, I>(tokens: I, min_count: u64, max_size: Option<usize>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if min_count < 1 {
            return Err(TextError::InvalidArgument("min_count must be at least 1".into()));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for t in tokens {
            *counts.entry(t).or_default() += 1;
        }
        let mut entries: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(t, c)| c >= min_count && !RESERVED.contains(&t))
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if let Some(m) = max_size {
            entries.truncate(m);
        }
        let mut v = Vocabulary::reserved();
        for (t, c) in entries {
            v.insert(t, c);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Id of `token`, or the unknown id.
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// One `token<TAB>count` line per id, reserved tokens included.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (t, c) in self.tokens.iter().zip(&self.counts) {
            writeln!(w, "{}\t{}", t, c)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            counts: Vec::new(),
            index: HashMap::new(),
        };
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let (tok, count) = line
                .rsplit_once('\t')
                .ok_or_else(|| parse_err(i + 1, "expected token<TAB>count"))?;
            let count: u64 = count.parse().map_err(|_| parse_err(i + 1, "bad count"))?;
            if i < RESERVED.len() && tok != RESERVED[i] {
                return Err(parse_err(i + 1, format!("expected reserved token {}", RESERVED[i])));
            }
            if v.index.contains_key(tok) {
                return Err(parse_err(i + 1, format!("duplicate token {:?}", tok)));
            }
            v.insert(tok, count);
        }
        if v.len() < RESERVED.len() {
            return Err(parse_err(v.len() + 1, "missing reserved tokens"));
        }
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Vocabulary over every token of `stream`.
pub fn build_vocab(stream: &TokenStream, min_count: u64, max_size: Option<usize>) -> Result<Vocabulary> {
    if stream.is_empty() {
        return Err(TextError::InvalidArgument("empty stream".into()));
    }
    Vocabulary::from_tokens(stream.tokens(), min_count, max_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_count_filters() {
        let s = TokenStream::from_text("a a b", "eng", "t");
        let v = build_vocab(&s, 2, None).unwrap();
        assert_eq!(v.get("a"), Some(4));
        assert_eq!(v.id("b"), UNK);
        assert!(build_vocab(&s, 0, None).is_err());
    }

    #[test]
    fn max_size_counts_words_only() {
        let s = TokenStream::from_text("x y y z z z\nq", "eng", "t");
        let v = build_vocab(&s, 1, Some(1)).unwrap();
        assert_eq!(v.len(), RESERVED.len() + 1);
        assert_eq!(v.token(4), "z");
    }
}
