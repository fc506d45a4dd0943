//! Word translation retrieval through an alignment map.

use std::collections::HashMap;

use polyglot_core::par;

use crate::align::AlignmentMap;
use crate::error::{EmbedError, Result};
use crate::matrix::EmbeddingMatrix;

pub const CSLS_NEIGHBOURS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Cosine,
    Csls,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean of the `k` largest values.
fn top_k_mean(mut v: Vec<f64>, k: usize) -> f64 {
    let k = k.min(v.len()).max(1);
    v.sort_by(|a, b| b.total_cmp(a));
    v[..k].iter().sum::<f64>() / k as f64
}

/// Fraction of distinct test source words whose gold translation (any of
/// them, when the dictionary lists several) is among the `k` best target
/// words for the mapped source vector.
pub fn translation_eval(
    map: &AlignmentMap,
    x: &EmbeddingMatrix,
    y: &EmbeddingMatrix,
    test: &[(String, String)],
    k: usize,
    metric: Metric,
) -> Result<f64> {
    if k < 1 {
        return Err(EmbedError::InvalidArgument("k must be at least 1".into()));
    }
    let mapped = map.align_matrix(x).normalized();
    let targets = y.preprocessed().normalized();
    let mut gold: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut order = Vec::new();
    for (s, t) in test {
        if let (Some(i), Some(j)) = (x.index_of(s), y.index_of(t)) {
            gold.entry(i).or_insert_with(|| {
                order.push(i);
                Vec::new()
            });
            gold.get_mut(&i).expect("inserted").push(j);
        }
    }
    if order.is_empty() {
        return Err(EmbedError::EmptyDictionary);
    }
    let nt = targets.len();
    // Hubness terms: mean similarity of each target to its nearest mapped
    // sources, and of each query to its nearest targets.
    let target_hub: Vec<f64> = match metric {
        Metric::Cosine => vec![0.0; nt],
        Metric::Csls => par::map_range(nt, |j| {
            let sims = (0..mapped.len()).map(|i| dot(targets.row(j), mapped.row(i))).collect();
            top_k_mean(sims, CSLS_NEIGHBOURS)
        }),
    };
    let hits = par::map(&order, |&i| {
        let q = mapped.row(i);
        let sims: Vec<f64> = (0..nt).map(|j| dot(q, targets.row(j))).collect();
        let scores: Vec<f64> = match metric {
            Metric::Cosine => sims,
            Metric::Csls => {
                let r = top_k_mean(sims.clone(), CSLS_NEIGHBOURS);
                sims.iter().zip(&target_hub).map(|(s, h)| 2.0 * s - r - h).collect()
            }
        };
        let mut ranked: Vec<usize> = (0..nt).collect();
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        ranked[..k.min(nt)].iter().any(|j| gold[&i].contains(j))
    });
    Ok(hits.iter().filter(|&&h| h).count() as f64 / order.len() as f64)
}
