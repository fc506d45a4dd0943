//! Closed-form orthogonal alignment of one embedding space onto another.

use std::io::BufRead;
use std::path::Path;

use nalgebra::DMatrix;
use polyglot_core::{checkpoint, Tensor};

use crate::error::{EmbedError, Result};
use crate::matrix::EmbeddingMatrix;

/// Orthogonal `d × d` map taking source-language vectors into the target
/// space, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentMap {
    pub dim: usize,
    pub w: Vec<f64>,
    pub source_language: String,
    pub target_language: String,
    /// Dictionary pairs actually used.
    pub pairs_used: usize,
}

impl AlignmentMap {
    pub fn identity(dim: usize) -> Self {
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = 1.0;
        }
        AlignmentMap {
            dim,
            w,
            source_language: String::new(),
            target_language: String::new(),
            pairs_used: 0,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.w[i * d + j] * x[j]).sum())
            .collect()
    }

    /// ‖WᵀW − I‖_F
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.dim;
        let mut err = 0.0;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..d).map(|k| self.w[k * d + i] * self.w[k * d + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                err += (dot - want) * (dot - want);
            }
        }
        err.sqrt()
    }

    /// `Σ ‖W xᵢ − yᵢ‖²` over paired rows.
    pub fn loss(&self, x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
        loss_of(&self.w, self.dim, x, y)
    }

    /// Source matrix preprocessed as for alignment, then mapped.
    pub fn align_matrix(&self, source: &EmbeddingMatrix) -> EmbeddingMatrix {
        source.preprocessed().mapped(&self.w)
    }

    /// Saved as a single `dim × dim` array named `alignment`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let t = Tensor::<f32>::new(
            vec![self.dim, self.dim],
            self.w.iter().map(|&x| x as f32).collect(),
        )?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        checkpoint::write_arrays(&mut f, &[("alignment", &t)])?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let arrays = checkpoint::read_arrays::<_, f32>(&mut f)?;
        let (_, t) = arrays
            .into_iter()
            .find(|(n, _)| n == "alignment")
            .ok_or_else(|| EmbedError::InvalidArgument("no alignment array".into()))?;
        let dim = t.shape()[0];
        Ok(AlignmentMap {
            dim,
            w: t.data().iter().map(|&x| x as f64).collect(),
            ..AlignmentMap::identity(0)
        })
    }
}

pub(crate) fn loss_of(w: &[f64], d: usize, x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(xi, yi)| {
            (0..d)
                .map(|r| {
                    let wx: f64 = (0..d).map(|c| w[r * d + c] * xi[c]).sum();
                    (wx - yi[r]).powi(2)
                })
                .sum::<f64>()
        })
        .sum()
}

/// Two whitespace-separated words per line; blank lines ignored.
pub fn read_dictionary<R: BufRead>(r: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (None, _, _) => continue,
            (Some(a), Some(b), None) => out.push((a.to_string(), b.to_string())),
            _ => {
                return Err(EmbedError::Parse {
                    line: i + 1,
                    message: "expected two words".into(),
                })
            }
        }
    }
    Ok(out)
}

pub fn read_dictionary_file(path: &Path) -> Result<Vec<(String, String)>> {
    read_dictionary(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Stacked dictionary vectors `(x_i, y_i)` from the preprocessed spaces,
/// for pairs present in both vocabularies.
pub fn dictionary_vectors(
    x: &EmbeddingMatrix,
    y: &EmbeddingMatrix,
    dictionary: &[(String, String)],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (xp, yp) = (x.preprocessed(), y.preprocessed());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (s, t) in dictionary {
        let (Some(i), Some(j)) = (x.index_of(s), y.index_of(t)) else {
            continue;
        };
        if x.row(i).iter().all(|&v| v == 0.0) {
            return Err(EmbedError::DegenerateVector(s.clone()));
        }
        if y.row(j).iter().all(|&v| v == 0.0) {
            return Err(EmbedError::DegenerateVector(t.clone()));
        }
        xs.push(xp.row(i).to_vec());
        ys.push(yp.row(j).to_vec());
    }
    if xs.is_empty() {
        return Err(EmbedError::EmptyDictionary);
    }
    Ok((xs, ys))
}

/// Orthogonal `W` minimizing `Σ ‖W xᵢ − yᵢ‖²` over dictionary pairs
/// `(source word in x, target word in y)`, after unit-normalizing and
/// mean-centering both spaces. With `M = Yᵀ X = U Σ Vᵀ`, `W = U Vᵀ`.
pub fn procrustes_align(
    x: &EmbeddingMatrix,
    y: &EmbeddingMatrix,
    dictionary: &[(String, String)],
) -> Result<AlignmentMap> {
    if x.dim() != y.dim() {
        return Err(EmbedError::InvalidArgument(format!(
            "dimension mismatch {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    if dictionary.is_empty() {
        return Err(EmbedError::EmptyDictionary);
    }
    let (xs, ys) = dictionary_vectors(x, y, dictionary)?;
    let d = x.dim();
    if xs.len() < d {
        log::warn!(
            "only {} dictionary pairs for dimension {}; the map is underdetermined",
            xs.len(),
            d
        );
    }
    let w = procrustes_from_pairs(&xs, &ys, d);
    Ok(AlignmentMap {
        dim: d,
        w,
        source_language: String::new(),
        target_language: String::new(),
        pairs_used: xs.len(),
    })
}

/// The SVD step alone, on already paired rows.
pub fn procrustes_from_pairs(xs: &[Vec<f64>], ys: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (xi, yi) in xs.iter().zip(ys) {
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] += yi[r] * xi[c];
            }
        }
    }
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let w = u * v_t;
    let mut out = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..d {
            out[r * d + c] = w[(r, c)];
        }
    }
    out
}
