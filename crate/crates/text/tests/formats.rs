use polyglot_text::columnar::Column;
use polyglot_text::{
    bio_to_spans, read_columnar, read_conllu, spans_to_bio, write_columnar, write_conllu,
    AnnotatedSentence, Schema, Span,
};
use proptest::prelude::*;

fn tree_sentence(n: usize, seed: usize) -> AnnotatedSentence {
    let mut s = AnnotatedSentence::new((0..n).map(|i| format!("t{}_{}", seed, i)).collect(), "eng");
    s.pos = Some((0..n).map(|i| ["NOUN", "VERB", "ADJ"][(i + seed) % 3].to_string()).collect());
    // Token 1 is the root; others attach to an earlier token.
    s.heads = Some((0..n).map(|i| if i == 0 { 0 } else { (i * seed) % i + 1 }).collect());
    s.deprels = Some((0..n).map(|i| if i == 0 { "root".into() } else { ["obj", "nsubj:pass"][i % 2].into() }).collect());
    s
}

#[test]
fn conllu_round_trip() {
    let sents: Vec<_> = (1..12).map(|k| tree_sentence(k, k * 3)).collect();
    let mut buf = Vec::new();
    write_conllu(&mut buf, &sents).unwrap();
    let back = read_conllu(buf.as_slice(), "eng").unwrap();
    assert_eq!(back, sents);
}

#[test]
fn conllu_file_fixture() {
    let text = "\
# sent_id = 1
# text = Dogs bark.
1\tDogs\tdog\tNOUN\tNNS\t_\t2\tnsubj\t_\t_
2\tbark\tbark\tVERB\tVBP\t_\t0\troot\t_\tSpaceAfter=No
2.1\tghost\t_\t_\t_\t_\t_\t_\t1:dep\t_
3\t.\t.\tPUNCT\t.\t_\t2\tpunct\t_\t_

1\tHi\thi\tINTJ\t_\t_\t0\troot\t_\t_
";
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.conllu");
    std::fs::write(&path, text).unwrap();
    let s = polyglot_text::conllu::read_conllu_file(&path, "eng").unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s[0].tokens, vec!["Dogs", "bark", "."]);
    assert_eq!(s[0].heads, Some(vec![2, 0, 2]));
    assert_eq!(s[1].heads, Some(vec![0]));
}

#[test]
fn columnar_round_trip_with_all_columns() {
    let schema = Schema::new(vec![
        Column::Token,
        Column::Ignore,
        Column::EntityTag,
        Column::PredicateMarker,
        Column::RoleTag,
    ]);
    let mut s = AnnotatedSentence::new(vec!["John".into(), "Smith".into(), "ran".into(), "home".into()], "eng");
    s.entities = Some(vec![Span::new("PER", 0, 1)]);
    s.predicate = Some(2);
    s.roles = Some(vec![Span::new("ARG0", 0, 1), Span::new("V", 2, 2), Span::new("ARGM-DIR", 3, 3)]);
    let mut buf = Vec::new();
    write_columnar(&mut buf, &schema, std::slice::from_ref(&s)).unwrap();
    let back = read_columnar(buf.as_slice(), &schema, "eng").unwrap();
    assert_eq!(back, vec![s]);
}

fn span_sets() -> impl Strategy<Value = (Vec<Span>, usize)> {
    (1usize..30, proptest::collection::vec((0usize..4, 1usize..4, 0usize..3), 0..10)).prop_map(
        |(gap0, pieces)| {
            let mut spans = Vec::new();
            let mut pos = gap0 % 3;
            for (gap, len, label) in pieces {
                let start = pos + gap;
                let end = start + len - 1;
                spans.push(Span::new(["A", "B", "ARG-TMP"][label], start, end));
                pos = end + 1;
            }
            let n = pos + gap0 % 4 + 1;
            (spans, n)
        },
    )
}

proptest! {
    #[test]
    fn spans_bio_spans_identity((spans, n) in span_sets()) {
        let tags = spans_to_bio(&spans, n).unwrap();
        prop_assert_eq!(tags.len(), n);
        prop_assert_eq!(bio_to_spans(&tags).unwrap(), spans);
    }

    #[test]
    fn valid_bio_bio_round_trip(choices in proptest::collection::vec(0usize..5, 1..30)) {
        // Build a valid sequence: I-X only after B-X/I-X.
        let mut tags: Vec<String> = Vec::new();
        for c in choices {
            let prev = tags.last().cloned().unwrap_or_else(|| "O".into());
            let t = match c {
                0 => "O".to_string(),
                1 => "B-X".into(),
                2 => "B-Y".into(),
                _ if prev != "O" => format!("I-{}", &prev[2..]),
                _ => "O".into(),
            };
            tags.push(t);
        }
        let spans = bio_to_spans(&tags).unwrap();
        prop_assert_eq!(spans_to_bio(&spans, tags.len()).unwrap(), tags);
    }
}
