use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{LmError, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOW: usize = 2;
pub const EOW: usize = 3;
/// Stand-in characters for the sentence boundary words.
pub const BOS: usize = 4;
pub const EOS: usize = 5;
const RESERVED: usize = 6;

/// Code point ↔ id map. Ids below 6 are the padding, unknown,
/// begin/end-of-word and begin/end-of-sentence markers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl CharVocab {
    /// Every code point occurring in `words`, in first-seen order.
    pub fn build<'a, I: IntoIterator<Item = &'a str>>(words: I) -> Self {
        let mut v = CharVocab {
            chars: Vec::new(),
            index: HashMap::new(),
        };
        for w in words {
            for c in w.chars() {
                if !v.index.contains_key(&c) {
                    v.index.insert(c, RESERVED + v.chars.len());
                    v.chars.push(c);
                }
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        RESERVED + self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(UNK)
    }

    /// `[BOW, chars.., EOW]` padded with `PAD` to exactly `max_len` ids.
    /// Words too long keep their first `max_len - 2` code points. The
    /// sentence boundary words map to a single marker character.
    pub fn encode(&self, word: &str, max_len: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(max_len);
        out.push(BOW);
        match word {
            "<s>" => out.push(BOS),
            "</s>" => out.push(EOS),
            _ => out.extend(word.chars().take(max_len - 2).map(|c| self.id(c))),
        }
        out.push(EOW);
        out.resize(max_len, PAD);
        out
    }

    /// One code point per line, as its hexadecimal scalar value.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for c in &self.chars {
            writeln!(w, "{:x}", *c as u32)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut v = CharVocab {
            chars: Vec::new(),
            index: HashMap::new(),
        };
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let c = u32::from_str_radix(line.trim(), 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| LmError::Format {
                    path: "chars".into(),
                    message: format!("line {}: bad code point", i + 1),
                })?;
            v.index.insert(c, RESERVED + v.chars.len());
            v.chars.push(c);
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodes_with_markers_and_truncates() {
        let v = CharVocab::build(["ab"]);
        assert_eq!(v.encode("ab", 6), vec![BOW, 6, 7, EOW, PAD, PAD]);
        assert_eq!(v.encode("zab", 4), vec![BOW, UNK, 6, EOW]);
        let long: String = std::iter::repeat_n('a', 60).collect();
        assert_eq!(v.encode(&long, 50).len(), 50);
        assert_eq!(v.encode("<s>", 4), vec![BOW, BOS, EOW, PAD]);
    }
}
