use polyglot_core::{seeded_rng, Graph, ParamStore, Tensor};
use polyglot_core::nn::init_normal;
use polyglot_lm::softmax::{LogUniformSampler, SoftmaxLayer, SoftmaxMode};
use proptest::prelude::*;

fn layer(vocab: usize, dim: usize, seed: u64) -> (ParamStore<f64>, SoftmaxLayer) {
    let mut store = ParamStore::new();
    let mut rng = seeded_rng(seed);
    let l = SoftmaxLayer::new(&mut store, "s", vocab, dim, &mut rng);
    *store.value_mut(l.bias) = init_normal(&mut rng, &[vocab, 1], 0.5);
    (store, l)
}

fn losses(store: &ParamStore<f64>, l: &SoftmaxLayer, h: &Tensor<f64>, targets: &[usize], mode: SoftmaxMode, seed: u64) -> Vec<f64> {
    let mut g = Graph::new();
    let hv = g.constant(h.clone());
    let out = l.losses(&mut g, store, hv, targets, mode, &mut seeded_rng(seed));
    g.value(out).data().to_vec()
}

/// Direct log-sum-exp over the whole vocabulary.
fn reference_nll(store: &ParamStore<f64>, l: &SoftmaxLayer, h: &Tensor<f64>, targets: &[usize]) -> Vec<f64> {
    let w = store.value(l.weight);
    let b = store.value(l.bias);
    (0..h.rows())
        .map(|i| {
            let z: Vec<f64> = (0..l.vocab)
                .map(|v| h.row_slice(i).iter().zip(w.row_slice(v)).map(|(a, b)| a * b).sum::<f64>() + b.at(v, 0))
                .collect();
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            lse - z[targets[i]]
        })
        .collect()
}

#[test]
fn full_softmax_matches_direct_sum() {
    let (store, l) = layer(12, 5, 1);
    let h = init_normal(&mut seeded_rng(9), &[7, 5], 1.0);
    let targets = [0, 3, 11, 3, 5, 6, 2];
    let got = losses(&store, &l, &h, &targets, SoftmaxMode::Full, 0);
    for (a, b) in got.iter().zip(reference_nll(&store, &l, &h, &targets)) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn single_class_vocabulary_has_zero_loss() {
    let (store, l) = layer(1, 4, 2);
    let h = init_normal(&mut seeded_rng(3), &[5, 4], 1.0);
    for mode in [SoftmaxMode::Full, SoftmaxMode::Sampled(64), SoftmaxMode::Exhaustive] {
        for x in losses(&store, &l, &h, &[0; 5], mode, 4) {
            assert_eq!(x, 0.0);
        }
    }
}

#[test]
fn too_many_negatives_falls_back_to_full() {
    let (store, l) = layer(10, 3, 5);
    let h = init_normal(&mut seeded_rng(6), &[4, 3], 1.0);
    let t = [1, 2, 3, 9];
    assert_eq!(
        losses(&store, &l, &h, &t, SoftmaxMode::Sampled(10), 1),
        losses(&store, &l, &h, &t, SoftmaxMode::Full, 1)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exhaustive_sample_equals_full_softmax(seed in 0u64..10_000, vocab in 2usize..30, rows in 1usize..8) {
        let (store, l) = layer(vocab, 6, seed);
        let h = init_normal(&mut seeded_rng(seed + 1), &[rows, 6], 2.0);
        let targets: Vec<usize> = (0..rows).map(|i| (i * 7 + seed as usize) % vocab).collect();
        let ex = losses(&store, &l, &h, &targets, SoftmaxMode::Exhaustive, seed);
        let full = losses(&store, &l, &h, &targets, SoftmaxMode::Full, seed);
        for (a, b) in ex.iter().zip(&full) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }

    #[test]
    fn unique_samples_are_distinct_and_in_range(seed in 0u64..10_000, vocab in 2usize..200) {
        let n = (vocab / 3).max(1).min(vocab - 1);
        let s = LogUniformSampler::new(vocab).sample_unique(n, &mut seeded_rng(seed));
        let mut c = s.classes.clone();
        c.sort();
        c.dedup();
        prop_assert_eq!(c.len(), n);
        prop_assert!(c.iter().all(|&k| k < vocab));
        prop_assert!(s.tries >= n);
        prop_assert!(s.expected_counts.iter().all(|&e| e > 0.0 && e <= 1.0));
    }
}

#[test]
fn log_uniform_probabilities_sum_to_one_and_match_draws() {
    let s = LogUniformSampler::new(50);
    let total: f64 = (0..50).map(|k| s.probability(k)).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let mut rng = seeded_rng(11);
    let n = 200_000;
    let mut counts = [0usize; 50];
    for _ in 0..n {
        counts[s.draw(&mut rng)] += 1;
    }
    for k in [0, 1, 5, 20, 49] {
        let p = s.probability(k);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((counts[k] as f64 / n as f64 - p).abs() < 5.0 * sd, "class {}", k);
    }
}

#[test]
fn sampled_loss_is_close_to_full_loss_on_average() {
    let (store, l) = layer(50, 8, 21);
    let h = init_normal(&mut seeded_rng(22), &[6, 8], 1.0);
    let targets = [0, 4, 9, 17, 30, 49];
    let full: f64 = losses(&store, &l, &h, &targets, SoftmaxMode::Full, 0).iter().sum::<f64>() / 6.0;
    let seeds = 10_000;
    let mut acc = 0.0;
    for seed in 0..seeds {
        acc += losses(&store, &l, &h, &targets, SoftmaxMode::Sampled(20), seed).iter().sum::<f64>() / 6.0;
    }
    let mean = acc / seeds as f64;
    assert!((mean - full).abs() / full < 0.05, "sampled {} vs full {}", mean, full);
}
