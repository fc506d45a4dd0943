use std::collections::BTreeMap;

use polyglot_text::vocab::{RESERVED, UNK};
use polyglot_text::{build_vocab, TokenStream, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_stream(seed: u64, sentences: usize) -> TokenStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = TokenStream::new("random");
    for _ in 0..sentences {
        let n = rng.random_range(1..12);
        // Skewed word distribution so counts tie and differ.
        let toks = (0..n)
            .map(|_| {
                let r: f64 = rng.random();
                format!("w{}", (r * r * 60.0) as usize)
            })
            .collect();
        s.push(toks, "eng").unwrap();
    }
    s
}

#[test]
fn ordering_matches_naive_count() {
    let stream = random_stream(3, 1000);
    // Independent oracle: count with a BTreeMap, then pick the max repeatedly.
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (sent, _) in stream.iter() {
        for t in sent {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    let mut expected = Vec::new();
    let mut left: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c >= 3).collect();
    while !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            let (bt, bc) = &left[best];
            let (t, c) = &left[i];
            if c > bc || (c == bc && t < bt) {
                best = i;
            }
        }
        expected.push(left.remove(best));
        if expected.len() == 25 {
            break;
        }
    }
    let v = build_vocab(&stream, 3, Some(25)).unwrap();
    assert_eq!(v.len(), RESERVED.len() + expected.len());
    for (k, (tok, count)) in expected.iter().enumerate() {
        let id = RESERVED.len() + k;
        assert_eq!(v.token(id), tok);
        assert_eq!(v.count(id), *count);
        assert_eq!(v.id(tok), id);
    }
}

#[test]
fn save_load_keeps_ids() {
    let stream = random_stream(4, 200);
    let v = build_vocab(&stream, 1, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vocab.txt");
    v.save(&path).unwrap();
    let back = Vocabulary::load(&path).unwrap();
    assert_eq!(back, v);
    for id in 0..v.len() {
        assert_eq!(back.id(v.token(id)), id);
    }
    assert_eq!(back.id("never-seen"), UNK);
    for (i, r) in RESERVED.iter().enumerate() {
        assert_eq!(back.get(r), Some(i));
    }
}

#[test]
fn corrupt_vocab_file_is_rejected() {
    assert!(Vocabulary::read("<unk>\t0\n".as_bytes()).is_err());
    assert!(Vocabulary::read("<pad>\t0\n<unk>\t0\n<s>\t0\n</s>\t0\nx\tmany\n".as_bytes()).is_err());
}
