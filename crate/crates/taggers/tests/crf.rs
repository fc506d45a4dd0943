use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polyglot_core::gradcheck::grad_check;
use polyglot_core::Tensor;
use polyglot_taggers::{crf_nll, CrfParams, TagSet, TaggerError, TransitionMask};

fn random_crf(tags: usize, r: &mut ChaCha8Rng) -> CrfParams {
    let mut v = |n: usize| (0..n).map(|_| r.random_range(-2.0..2.0)).collect::<Vec<f64>>();
    let trans = v(tags * tags);
    let start = v(tags);
    let stop = v(tags);
    CrfParams::new(tags, trans, start, stop).unwrap()
}

/// Every tag sequence of length `len` over `tags` tags.
fn all_paths(len: usize, tags: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..tags).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    out
}

/// Path score written out term by term.
fn score(crf: &CrfParams, em: &[f64], path: &[usize]) -> f64 {
    let t = crf.tags;
    let mut s = crf.start[path[0]];
    for k in 0..path.len() {
        s += em[k * t + path[k]];
        if k > 0 {
            s += crf.transitions[path[k - 1] * t + path[k]];
        }
    }
    s + crf.stop[path[path.len() - 1]]
}

fn allowed(mask: &TransitionMask, path: &[usize]) -> bool {
    mask.start[path[0]] && path.windows(2).all(|w| mask.allowed[w[0] * mask.tags + w[1]])
}

#[test]
fn single_position_partition() {
    let crf = CrfParams::new(3, vec![0.7; 9], vec![0.1, -0.4, 1.0], vec![0.3, 0.2, -1.0]).unwrap();
    let em = [0.5, 2.0, -1.0];
    let want = (0..3).map(|j| (crf.start[j] + em[j] + crf.stop[j]).exp()).sum::<f64>().ln();
    assert!((crf.log_partition(&em).unwrap() - want).abs() < 1e-12);
    let best = (0..3)
        .max_by(|&a, &b| (crf.start[a] + em[a] + crf.stop[a]).total_cmp(&(crf.start[b] + em[b] + crf.stop[b])))
        .unwrap();
    assert_eq!(crf.viterbi(&em, None).unwrap(), vec![best]);
}

#[test]
fn zero_potentials_count_paths() {
    let crf = CrfParams::zeros(3);
    let z = crf.log_partition(&[0.0; 6]).unwrap();
    assert!((z - 9f64.ln()).abs() < 1e-12);
    assert!((z - 2.19722).abs() < 1e-5);
}

#[test]
fn bio_mask_changes_the_decision() {
    let tags = TagSet::from_types(["PER", "ORG"]);
    let t = tags.len();
    let id = |s: &str| tags.id(s).unwrap();
    let mut em = vec![0.0; 2 * t];
    em[id("B-PER")] = 6.0;
    em[t + id("I-ORG")] = 5.0;
    em[t + id("I-PER")] = 4.0;
    let crf = CrfParams::zeros(t);
    let free = crf.viterbi(&em, None).unwrap();
    assert_eq!(tags.decode(&free), vec!["B-PER", "I-ORG"]);
    assert!(!tags.is_valid(&free));
    let constrained = crf.viterbi(&em, Some(&tags.bio_mask())).unwrap();
    assert_eq!(tags.decode(&constrained), vec!["B-PER", "I-PER"]);
    // the constrained answer is the best of the valid sequences
    let best_valid = all_paths(2, t)
        .into_iter()
        .filter(|p| tags.is_valid(p))
        .max_by(|a, b| score(&crf, &em, a).total_cmp(&score(&crf, &em, b)))
        .unwrap();
    assert_eq!(constrained, best_valid);
}

#[test]
fn partition_and_viterbi_match_enumeration() {
    for seed in 0..100u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let tags = r.random_range(1..=4);
        let len = r.random_range(1..=5);
        let crf = random_crf(tags, &mut r);
        let em: Vec<f64> = (0..len * tags).map(|_| r.random_range(-3.0..3.0)).collect();
        let paths = all_paths(len, tags);
        let want = paths.iter().map(|p| score(&crf, &em, p).exp()).sum::<f64>().ln();
        let got = crf.log_partition(&em).unwrap();
        assert!((got - want).abs() < 1e-8, "seed {}: {} vs {}", seed, got, want);

        let best = paths
            .iter()
            .max_by(|a, b| score(&crf, &em, a).total_cmp(&score(&crf, &em, b)))
            .unwrap();
        assert_eq!(&crf.viterbi(&em, None).unwrap(), best, "seed {}", seed);

        // random mask that keeps at least one path
        let mut mask = TransitionMask::unconstrained(tags);
        for a in mask.allowed.iter_mut() {
            *a = r.random_bool(0.7);
        }
        for s in mask.start.iter_mut() {
            *s = r.random_bool(0.7);
        }
        let valid: Vec<&Vec<usize>> = paths.iter().filter(|p| allowed(&mask, p)).collect();
        match valid.iter().max_by(|a, b| score(&crf, &em, a).total_cmp(&score(&crf, &em, b))) {
            Some(best) => {
                let got = crf.viterbi(&em, Some(&mask)).unwrap();
                assert!(allowed(&mask, &got));
                assert!((score(&crf, &em, &got) - score(&crf, &em, best)).abs() < 1e-8, "seed {}", seed);
            }
            None => assert!(matches!(crf.viterbi(&em, Some(&mask)), Err(TaggerError::NoValidPath))),
        }
    }
}

#[test]
fn rejects_bad_shapes() {
    assert!(CrfParams::new(2, vec![0.0; 3], vec![0.0; 2], vec![0.0; 2]).is_err());
    let crf = CrfParams::zeros(2);
    assert!(crf.log_partition(&[0.0; 3]).is_err());
    assert!(crf.sequence_score(&[0.0; 4], &[0]).is_err());
}

#[test]
fn nll_gradients_pass_finite_differences() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    for (len, tags) in [(2usize, 3usize), (4, 4), (1, 2)] {
        let gold: Vec<usize> = (0..len).map(|_| r.random_range(0..tags)).collect();
        let mut rand = |shape: &[usize]| {
            let n: usize = shape.iter().product();
            Tensor::from_f64(shape, &(0..n).map(|_| r.random_range(-1.5..1.5)).collect::<Vec<_>>())
        };
        let inputs = [rand(&[len, tags]), rand(&[tags, tags]), rand(&[1, tags]), rand(&[1, tags])];
        let report = grad_check(
            |g, v| {
                let nll = crf_nll(g, v[0], v[1], v[2], v[3], &gold).unwrap();
                let two = g.scale(nll, 2.0);
                g.sum(two)
            },
            &inputs,
            1e-4,
        );
        assert!(report.passed(1e-3), "{:?}", report.entries);
    }
}

proptest! {
    #[test]
    fn partition_bounds_every_path(seed in any::<u64>(), len in 1usize..6, tags in 1usize..5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let crf = random_crf(tags, &mut r);
        let em: Vec<f64> = (0..len * tags).map(|_| r.random_range(-3.0..3.0)).collect();
        let z = crf.log_partition(&em).unwrap();
        for _ in 0..10 {
            let p: Vec<usize> = (0..len).map(|_| r.random_range(0..tags)).collect();
            prop_assert!(crf.sequence_score(&em, &p).unwrap() <= z + 1e-9);
        }
        let v = crf.viterbi(&em, None).unwrap();
        let prob = (crf.sequence_score(&em, &v).unwrap() - z).exp();
        prop_assert!(prob <= 1.0 + 1e-12);
        prop_assert!(crf.nll(&em, &v).unwrap() >= -1e-12);
    }

    #[test]
    fn bio_decoding_is_always_valid(seed in any::<u64>(), len in 1usize..8) {
        let tags = TagSet::from_types(["A", "B", "C"]);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let crf = random_crf(tags.len(), &mut r);
        let em: Vec<f64> = (0..len * tags.len()).map(|_| r.random_range(-4.0..4.0)).collect();
        let path = crf.viterbi(&em, Some(&tags.bio_mask())).unwrap();
        prop_assert!(tags.is_valid(&path));
        prop_assert!(polyglot_text::bio_to_spans(&tags.decode(&path)).is_ok());
    }
}
