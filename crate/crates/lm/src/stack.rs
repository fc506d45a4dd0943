//! Per-token layer stacks and their binary dump.
//!
//! ```text
//! magic      4 bytes "PGRP"
//! version    u32     1
//! sentences  u32
//! per sentence:
//!   tokens u32, depth u32, width u32
//!   data   f32 × tokens × depth × width   (token, then layer, then unit)
//! ```
//!
//! The text index has one line per sentence:
//! `<sentence index>\t<byte offset of its record>\t<token count>\t<tokens>`.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{LmError, Result};

pub const MAGIC: &[u8; 4] = b"PGRP";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack {
    pub tokens: usize,
    pub depth: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl LayerStack {
    pub fn new(tokens: usize, depth: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != tokens * depth * width {
            return Err(LmError::Input(format!(
                "stack of {} values for {}×{}×{}",
                data.len(),
                tokens,
                depth,
                width
            )));
        }
        Ok(LayerStack {
            tokens,
            depth,
            width,
            data,
        })
    }

    pub fn layer(&self, token: usize, layer: usize) -> &[f32] {
        let start = (token * self.depth + layer) * self.width;
        &self.data[start..start + self.width]
    }

    /// `[tokens, width]` rows of one layer.
    pub fn layer_rows(&self, layer: usize) -> Vec<f32> {
        (0..self.tokens)
            .flat_map(|t| self.layer(t, layer).iter().copied())
            .collect()
    }
}

fn bad(message: impl Into<String>) -> LmError {
    LmError::Format {
        path: "representation dump".into(),
        message: message.into(),
    }
}

/// Writes the binary records and returns each record's byte offset.
pub fn write_stacks<W: Write>(mut w: W, stacks: &[LayerStack]) -> Result<Vec<u64>> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(stacks.len() as u32).to_le_bytes())?;
    let mut offset = 12u64;
    let mut offsets = Vec::with_capacity(stacks.len());
    for s in stacks {
        offsets.push(offset);
        for v in [s.tokens, s.depth, s.width] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        for x in &s.data {
            w.write_all(&x.to_le_bytes())?;
        }
        offset += 12 + 4 * s.data.len() as u64;
    }
    w.flush()?;
    Ok(offsets)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_stacks<R: Read>(mut r: R) -> Result<Vec<LayerStack>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {}", version)));
    }
    let n = read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let tokens = read_u32(&mut r)? as usize;
        let depth = read_u32(&mut r)? as usize;
        let width = read_u32(&mut r)? as usize;
        let mut raw = vec![0u8; 4 * tokens * depth * width];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push(LayerStack::new(tokens, depth, width, data)?);
    }
    Ok(out)
}

/// Writes `<stem>.bin` and `<stem>.idx` next to each other.
pub fn dump(
    bin: &Path,
    index: &Path,
    sentences: &[&[String]],
    stacks: &[LayerStack],
) -> Result<()> {
    if sentences.len() != stacks.len() {
        return Err(LmError::Input("one stack per sentence".into()));
    }
    let offsets = write_stacks(BufWriter::new(std::fs::File::create(bin)?), stacks)?;
    let mut w = BufWriter::new(std::fs::File::create(index)?);
    for (i, (s, off)) in sentences.iter().zip(offsets).enumerate() {
        writeln!(w, "{}\t{}\t{}\t{}", i, off, s.len(), s.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load(bin: &Path) -> Result<Vec<LayerStack>> {
    read_stacks(BufReader::new(std::fs::File::open(bin)?))
}

/// Token lists from an index file.
pub fn read_index(index: &Path) -> Result<Vec<Vec<String>>> {
    let r = BufReader::new(std::fs::File::open(index)?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let mut parts = line.splitn(4, '\t');
        let toks = parts
            .nth(3)
            .ok_or_else(|| bad(format!("index line {} is short", i + 1)))?;
        out.push(toks.split(' ').map(String::from).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_offsets() {
        let a = LayerStack::new(2, 3, 2, (0..12).map(|x| x as f32).collect()).unwrap();
        let b = LayerStack::new(1, 3, 2, vec![0.5; 6]).unwrap();
        let mut buf = Vec::new();
        let offs = write_stacks(&mut buf, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(offs, vec![12, 12 + 12 + 48]);
        assert_eq!(read_stacks(&buf[..]).unwrap(), vec![a.clone(), b]);
        assert_eq!(a.layer(1, 2), &[10.0, 11.0]);
    }
}
