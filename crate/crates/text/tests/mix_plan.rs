use std::collections::HashSet;

use polyglot_text::{plan_polyglot_mix, TokenStream};

fn stream(lang: &str, sentences: usize, len: usize) -> TokenStream {
    let mut s = TokenStream::new(lang);
    for i in 0..sentences {
        let n = 1 + (i * 7) % len;
        s.push((0..n).map(|k| format!("{}{}", lang, k)).collect(), lang).unwrap();
    }
    s
}

fn to_tokens(target: usize, lang: &str, max_len: usize) -> TokenStream {
    let mut s = TokenStream::new(lang);
    let mut left = target;
    let mut i = 0;
    while left > 0 {
        let n = (1 + (i * 5) % max_len).min(left);
        s.push(vec!["x".to_string(); n], lang).unwrap();
        left -= n;
        i += 1;
    }
    s
}

#[test]
fn equal_sizes_use_everything_and_alternate() {
    let a = to_tokens(1000, "eng", 9);
    let b = to_tokens(1000, "ara", 13);
    let plan = plan_polyglot_mix(&a, &b, 64, 7, 0).unwrap();
    assert_eq!(plan.tokens_for(0), 1000);
    assert_eq!(plan.tokens_for(1), 1000);
    let langs: Vec<usize> = plan.blocks.iter().map(|b| b.stream).collect();
    let alternations = langs.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(alternations + 2 >= langs.len(), "{:?}", langs);
    for b in &plan.blocks {
        let lang = if b.stream == 0 { "eng" } else { "ara" };
        assert_eq!(b.language, lang);
    }
}

#[test]
fn larger_corpus_is_subsampled_to_within_a_batch() {
    let a = to_tokens(2000, "eng", 11);
    let b = to_tokens(1000, "ara", 11);
    for epoch in 0..5 {
        let plan = plan_polyglot_mix(&a, &b, 32, 1, epoch).unwrap();
        let (ta, tb) = (plan.tokens_for(0), plan.tokens_for(1));
        assert_eq!(tb, 1000);
        assert!(ta.abs_diff(tb) <= 32, "epoch {}: {} vs {}", epoch, ta, tb);
    }
}

#[test]
fn sentences_appear_once_and_epochs_differ() {
    let a = stream("eng", 300, 10);
    let b = stream("ara", 120, 10);
    let p0 = plan_polyglot_mix(&a, &b, 20, 5, 0).unwrap();
    let p1 = plan_polyglot_mix(&a, &b, 20, 5, 1).unwrap();
    for p in [&p0, &p1] {
        for which in 0..2 {
            let ids: Vec<usize> = p.sentences_for(which).collect();
            let set: HashSet<usize> = ids.iter().copied().collect();
            assert_eq!(set.len(), ids.len());
        }
        assert_eq!(p.sentences_for(1).count(), b.len());
    }
    let s0: Vec<usize> = p0.sentences_for(0).collect();
    let s1: Vec<usize> = p1.sentences_for(0).collect();
    assert_ne!(s0, s1);
}

#[test]
fn same_seed_same_plan() {
    let a = stream("eng", 100, 8);
    let b = stream("ara", 60, 8);
    assert_eq!(
        plan_polyglot_mix(&a, &b, 16, 9, 2).unwrap(),
        plan_polyglot_mix(&a, &b, 16, 9, 2).unwrap()
    );
    assert!(plan_polyglot_mix(&a, &b, 0, 9, 2).is_err());
    assert!(plan_polyglot_mix(&a, &TokenStream::new("e"), 4, 9, 2).is_err());
}
