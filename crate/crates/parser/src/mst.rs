//! Maximum spanning arborescence decoding (Chu-Liu/Edmonds) with a
//! single child of the root.

use crate::model::ArcScores;

/// Best incoming arc per node; ties go to the lowest head.
fn best_heads(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    let mut head = vec![0; n];
    for (d, h) in head.iter_mut().enumerate().skip(1) {
        let mut best = f64::NEG_INFINITY;
        for (u, row) in w.iter().enumerate() {
            if u != d && row[d] > best {
                best = row[d];
                *h = u;
            }
        }
    }
    head
}

fn find_cycle(head: &[usize]) -> Option<Vec<usize>> {
    let n = head.len();
    let mut state = vec![0u8; n]; // 0 unvisited, 1 on current path, 2 done
    state[0] = 2;
    for start in 1..n {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            v = head[v];
        }
        if state[v] == 1 {
            let pos = path.iter().position(|&x| x == v).expect("node on path");
            return Some(path[pos..].to_vec());
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}

/// Heads of the maximum arborescence rooted at node 0 over the dense
/// score matrix `w[head][dependent]`. `NEG_INFINITY` marks forbidden arcs;
/// every node must have at least one finite incoming arc.
pub fn chu_liu_edmonds(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    let head = best_heads(w);
    let Some(cycle) = find_cycle(&head) else {
        return head;
    };
    let mut in_cycle = vec![false; n];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    // Contract the cycle into the last node of a smaller graph.
    let outside: Vec<usize> = (0..n).filter(|&v| !in_cycle[v]).collect();
    let m = outside.len();
    let c = m;
    let mut w2 = vec![vec![f64::NEG_INFINITY; m + 1]; m + 1];
    let mut enter = vec![0; m + 1];
    let mut leave = vec![0; m + 1];
    for (i, &u) in outside.iter().enumerate() {
        for (j, &v) in outside.iter().enumerate() {
            w2[i][j] = w[u][v];
        }
        let mut best = f64::NEG_INFINITY;
        for &v in &cycle {
            if w[u][v] == f64::NEG_INFINITY {
                continue;
            }
            let s = w[u][v] - w[head[v]][v];
            if s > best {
                best = s;
                enter[i] = v;
            }
        }
        w2[i][c] = best;
        let mut best = f64::NEG_INFINITY;
        for &u2 in &cycle {
            if w[u2][u] > best {
                best = w[u2][u];
                leave[i] = u2;
            }
        }
        w2[c][i] = best;
    }
    let h2 = chu_liu_edmonds(&w2);
    let mut out = head.clone();
    for (j, &v) in outside.iter().enumerate().skip(1) {
        out[v] = if h2[j] == c { leave[j] } else { outside[h2[j]] };
    }
    let from = h2[c];
    out[enter[from]] = outside[from];
    out
}

/// 1-based heads (0 = root) of the best tree whose root has exactly one
/// child. Ties between root children go to the earliest token.
pub fn decode_mst(scores: &ArcScores) -> Vec<usize> {
    let n = scores.n;
    if n == 1 {
        return vec![0];
    }
    let base: Vec<Vec<f64>> = (0..=n)
        .map(|h| {
            (0..=n)
                .map(|d| {
                    if d == 0 || d == h {
                        f64::NEG_INFINITY
                    } else {
                        scores.get(h, d)
                    }
                })
                .collect()
        })
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 1..=n {
        let mut w = base.clone();
        for (d, x) in w[0].iter_mut().enumerate() {
            if d != r {
                *x = f64::NEG_INFINITY;
            }
        }
        let heads = chu_liu_edmonds(&w)[1..].to_vec();
        let s = tree_score(scores, &heads);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, heads));
        }
    }
    best.expect("at least one token").1
}

/// Per-token argmax head, ignoring tree constraints.
pub fn greedy_heads(scores: &ArcScores) -> Vec<usize> {
    (1..=scores.n)
        .map(|d| {
            let mut best = 0;
            for h in 1..=scores.n {
                if h != d && scores.get(h, d) > scores.get(best, d) {
                    best = h;
                }
            }
            best
        })
        .collect()
}

pub fn tree_score(scores: &ArcScores, heads: &[usize]) -> f64 {
    heads.iter().enumerate().map(|(j, &h)| scores.get(h, j + 1)).sum()
}

/// Every token has a head in range, no self loops, no cycles, and
/// exactly one token attaches to the root.
pub fn is_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().enumerate().any(|(j, &h)| h > n || h == j + 1) {
        return false;
    }
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }
    for start in 1..=n {
        let mut v = start;
        for _ in 0..=n {
            if v == 0 {
                break;
            }
            v = heads[v - 1];
        }
        if v != 0 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_checks() {
        assert!(is_tree(&[0]));
        assert!(is_tree(&[2, 0, 2]));
        assert!(!is_tree(&[0, 0]));
        assert!(!is_tree(&[2, 1]));
        assert!(!is_tree(&[1]));
        assert!(!is_tree(&[0, 3, 2]));
    }
}
