//! Little-endian binary parameter files.
//!
//! ```text
//! magic     4 bytes  "PGCK"
//! version   u32      1
//! count     u32      number of arrays
//! per array:
//!   name_len u32, name (UTF-8 bytes)
//!   rank     u32, dims (u64 each)
//!   data     f32 × product(dims)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::params::ParamStore;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"PGCK";
pub const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint(msg.into())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Writes named arrays; values are stored as 32-bit floats.
pub fn write_arrays<W: Write, T: Scalar>(w: &mut W, arrays: &[(&str, &Tensor<T>)]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(arrays.len() as u32).to_le_bytes())?;
    for (name, t) in arrays {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &x in t.data() {
            w.write_all(&x.to_single().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_arrays<R: Read, T: Scalar>(r: &mut R) -> Result<Vec<(String, Tensor<T>)>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {}", version)));
    }
    let count = read_u32(r)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = read_u32(r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| bad("array name is not UTF-8"))?;
        let rank = read_u32(r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(r)? as usize);
        }
        let n: usize = shape.iter().product();
        let mut raw = vec![0u8; n * 4];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| T::from_single(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        out.push((name, Tensor::new(shape, data)?));
    }
    Ok(out)
}

pub fn save_params<T: Scalar>(store: &ParamStore<T>, path: impl AsRef<Path>) -> Result<()> {
    let arrays: Vec<(&str, &Tensor<T>)> = store
        .ids()
        .map(|id| (store.name(id), store.value(id)))
        .collect();
    let mut w = BufWriter::new(File::create(path)?);
    write_arrays(&mut w, &arrays)?;
    w.flush()?;
    Ok(())
}

/// Loads a file into a fresh store, preserving array order.
pub fn load_params<T: Scalar>(path: impl AsRef<Path>) -> Result<ParamStore<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut store = ParamStore::new();
    for (name, t) in read_arrays(&mut r)? {
        store.add(name, t);
    }
    Ok(store)
}

/// Overwrites the parameters of `store` from a file. Every parameter of
/// `store` must be present with the same shape.
pub fn load_into<T: Scalar>(store: &mut ParamStore<T>, path: impl AsRef<Path>) -> Result<()> {
    let loaded: ParamStore<T> = load_params(path)?;
    let names: Vec<String> = store.ids().map(|id| store.name(id).to_string()).collect();
    for name in names {
        let id = loaded.id(&name)?;
        store.assign(&name, loaded.value(id).clone())?;
    }
    Ok(())
}
