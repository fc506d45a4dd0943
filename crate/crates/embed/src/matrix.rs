use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{EmbedError, Result};

/// One dense vector per word type.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    /// `data` is row-major, one row per word.
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != words.len() * dim {
            return Err(EmbedError::InvalidArgument(format!(
                "{} values for {} words of dimension {}",
                data.len(),
                words.len(),
                dim
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(EmbedError::InvalidArgument(format!("duplicate word {:?}", w)));
            }
        }
        Ok(EmbeddingMatrix {
            words,
            index,
            dim,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Each row scaled to unit length (zero rows stay zero).
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.dim.max(1)) {
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
        out
    }

    /// Mean row subtracted from every row.
    pub fn centered(&self) -> Self {
        let mut out = self.clone();
        if self.is_empty() {
            return out;
        }
        let mut mean = vec![0.0; self.dim];
        for row in self.data.chunks(self.dim) {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.len() as f64);
        for row in out.data.chunks_mut(self.dim) {
            for (x, m) in row.iter_mut().zip(&mean) {
                *x -= m;
            }
        }
        out
    }

    /// Unit length, mean-centered, unit length again.
    pub fn preprocessed(&self) -> Self {
        self.normalized().centered().normalized()
    }

    /// Rows multiplied by the square matrix `w` (row-major `dim × dim`):
    /// `row ← w · row`.
    pub fn mapped(&self, w: &[f64]) -> Self {
        let d = self.dim;
        let mut out = self.clone();
        for (src, dst) in self.data.chunks(d).zip(out.data.chunks_mut(d)) {
            for (i, o) in dst.iter_mut().enumerate() {
                *o = (0..d).map(|j| w[i * d + j] * src[j]).sum();
            }
        }
        out
    }

    /// Textual word-vector format: `count dim` header, then `word v1 .. vd`.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{}", word)?;
            for x in self.row(i) {
                write!(w, " {}", x)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let perr = |line: usize, m: &str| EmbedError::Parse {
            line,
            message: m.to_string(),
        };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| perr(1, "missing header"))??;
        let mut h = header.split_whitespace().map(str::parse::<usize>);
        let (count, dim) = match (h.next(), h.next(), h.next()) {
            (Some(Ok(c)), Some(Ok(d)), None) => (c, d),
            _ => return Err(perr(1, "header must be `count dim`")),
        };
        let mut words = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            let vals: std::result::Result<Vec<f64>, _> = parts.map(str::parse).collect();
            let vals = vals.map_err(|_| perr(i + 2, "bad number"))?;
            if vals.len() != dim {
                return Err(perr(i + 2, "wrong vector length"));
            }
            words.push(word.to_string());
            data.extend(vals);
        }
        if words.len() != count {
            return Err(perr(1, "row count differs from header"));
        }
        EmbeddingMatrix::new(words, dim, data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
