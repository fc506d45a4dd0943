use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polyglot_core::gradcheck::grad_check_params;
use polyglot_core::nn::AlternatingLstm;
use polyglot_core::{Graph, OptimizerConfig, OptimizerKind, ParamStore};
use polyglot_embed::EmbeddingMatrix;
use polyglot_lm::{LayerStack, ReprSpec};
use polyglot_taggers::{
    evaluate, train_tagger_with, NerConfig, NerModel, Schedule, SequenceTagger, SrlConfig, SrlModel, TagExample,
    TagSet, VERB,
};
use polyglot_text::fixtures::{ner_set, treebank};
use polyglot_text::{bio_to_spans, AnnotatedSentence, Span};

fn vectors_for(examples: &[TagExample], dim: usize, seed: u64) -> EmbeddingMatrix {
    let words: Vec<String> = examples
        .iter()
        .flat_map(|e| e.tokens.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..words.len() * dim).map(|_| r.random_range(-0.5..0.5)).collect();
    EmbeddingMatrix::new(words, dim, data).unwrap()
}

fn tiny_schedule() -> Schedule {
    Schedule {
        batch_size: 2,
        epochs: 1,
        patience: 1,
        optimizer: OptimizerConfig::new(OptimizerKind::adam(0.01, 0.9, 0.999)),
        seed: 3,
    }
}

fn tiny_srl() -> SrlConfig {
    SrlConfig {
        indicator_dim: 2,
        lstm_size: 3,
        layers: 4,
        recurrent_dropout: 0.0,
        schedule: tiny_schedule(),
    }
}

fn tiny_ner() -> NerConfig {
    NerConfig {
        char_dim: 2,
        char_lstm: 3,
        max_word_len: 6,
        lstm_size: 3,
        layers: 2,
        input_dropout: 0.0,
        recurrent_dropout: 0.0,
        layer_dropout: 0.0,
        mlp: 3,
        schedule: tiny_schedule(),
    }
}

fn scramble(store: &mut ParamStore<f64>, seed: u64) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for x in store.value_mut(id).data_mut() {
            *x = r.random_range(-0.8..0.8);
        }
    }
}

fn sentence(tokens: &[&str]) -> AnnotatedSentence {
    AnnotatedSentence::new(tokens.iter().map(|t| t.to_string()).collect(), "eng")
}

fn srl_pair() -> Vec<TagExample> {
    let mut a = sentence(&["kim", "runs"]);
    a.predicate = Some(1);
    a.roles = Some(vec![Span::new("ARG0", 0, 0), Span::new(VERB, 1, 1)]);
    let mut b = sentence(&["the", "dog", "sees", "kim"]);
    b.predicate = Some(2);
    b.roles = Some(vec![Span::new("ARG0", 0, 1), Span::new(VERB, 2, 2), Span::new("ARG1", 3, 3)]);
    vec![TagExample::srl(&a, None).unwrap(), TagExample::srl(&b, None).unwrap()]
}

#[test]
fn indicator_rows_differ() {
    let ex = srl_pair();
    let v = vectors_for(&ex, 3, 1);
    let m: SrlModel = SrlModel::for_data(tiny_srl(), ReprSpec::Static(&v), &ex).unwrap();
    let table = m.store.value(m.net.indicator.table);
    assert_eq!(table.shape(), [2, 2]);
    assert_ne!(table.row_slice(0), table.row_slice(1));
    let paper: SrlModel = SrlModel::new(SrlConfig::paper(), ReprSpec::Static(&v), m.tags.clone()).unwrap();
    assert_eq!(paper.store.value(paper.net.indicator.table).shape(), [2, 100]);
}

#[test]
fn layer_directions_alternate() {
    let dirs: Vec<bool> = (0..4).map(AlternatingLstm::is_reversed).collect();
    assert_eq!(dirs, [false, true, false, true]);
    let ex = srl_pair();
    let v = vectors_for(&ex, 3, 1);
    let m: SrlModel = SrlModel::new(SrlConfig::paper(), ReprSpec::Static(&v), TagSet::from_types(["ARG0"])).unwrap();
    assert_eq!(m.net.lstm.layers.len(), 4);
    assert!(m.net.lstm.layers.iter().all(|l| l.hidden == 300));
}

#[test]
fn srl_needs_a_predicate() {
    let s = sentence(&["a", "b"]);
    assert!(TagExample::srl(&s, None).is_err());
    let ex = srl_pair();
    let v = vectors_for(&ex, 3, 1);
    let m: SrlModel = SrlModel::for_data(tiny_srl(), ReprSpec::Static(&v), &ex).unwrap();
    let mut bad = ex[0].clone();
    bad.predicate = Some(5);
    assert!(m.predict(&[bad]).is_err());
}

#[test]
fn char_feature_width() {
    let ex = srl_pair();
    let v = vectors_for(&ex, 3, 1);
    let m: NerModel = NerModel::for_data(NerConfig::paper(), ReprSpec::Static(&v), &ex).unwrap();
    assert_eq!(m.char_feature_dim(), 128);
    let mut g = Graph::new();
    let f = m.char_features::<polyglot_core::Rng>(&mut g, &m.store, &["kim", "a"], None);
    assert_eq!(g.shape(f), [2, 128]);
}

#[test]
fn char_feature_ignores_padding() {
    let ex = srl_pair();
    let v = vectors_for(&ex, 3, 1);
    let m: NerModel = NerModel::for_data(tiny_ner(), ReprSpec::Static(&v), &ex).unwrap();
    let alone = {
        let mut g = Graph::new();
        let f = m.char_features::<polyglot_core::Rng>(&mut g, &m.store, &["kim"], None);
        g.value(f).clone()
    };
    let mut g = Graph::new();
    let f = m.char_features::<polyglot_core::Rng>(&mut g, &m.store, &["kim", "the"], None);
    assert_eq!(g.value(f).row_slice(0), alone.row_slice(0));
}

#[test]
fn srl_loss_gradients() {
    let ex = srl_pair();
    let v = vectors_for(&ex, 3, 2);
    let mut m: SrlModel<f64> = SrlModel::for_data(tiny_srl(), ReprSpec::Static(&v), &ex).unwrap();
    scramble(&mut m.store, 21);
    let batch: Vec<&TagExample> = ex.iter().collect();
    let report = grad_check_params(
        &m.store,
        |g: &mut Graph<f64>, store| m.loss::<polyglot_core::Rng>(g, store, &batch, None).unwrap(),
        1e-4,
        None,
    );
    assert!(report.passed(1e-3), "{:?}", report.failures(1e-3));
}

#[test]
fn ner_loss_gradients_through_crf() {
    let mut s = sentence(&["kim", "lee"]);
    s.entities = Some(vec![Span::new("PER", 0, 1)]);
    let e = TagExample::ner(&s, None).unwrap();
    let v = vectors_for(std::slice::from_ref(&e), 3, 3);
    let mut m: NerModel<f64> = NerModel::for_data(tiny_ner(), ReprSpec::Static(&v), std::slice::from_ref(&e)).unwrap();
    assert_eq!(m.tags.len(), 3);
    scramble(&mut m.store, 22);
    let report = grad_check_params(
        &m.store,
        |g: &mut Graph<f64>, store| m.loss::<polyglot_core::Rng>(g, store, &[&e], None).unwrap(),
        1e-4,
        None,
    );
    assert!(report.passed(1e-3), "{:?}", report.failures(1e-3));
}

#[test]
fn contextual_inputs_only_train_the_mix() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut ex = srl_pair();
    for e in &mut ex {
        let data = (0..e.len() * 3 * 4).map(|_| r.random_range(-1.0f32..1.0)).collect();
        e.stack = Some(LayerStack::new(e.len(), 3, 4, data).unwrap());
    }
    let mut m: SrlModel<f64> =
        SrlModel::for_data(tiny_srl(), ReprSpec::Contextual { depth: 3, width: 4 }, &ex).unwrap();
    let repr_params: Vec<String> = m
        .store
        .ids()
        .map(|id| m.store.name(id).to_string())
        .filter(|n| n.starts_with("srl.repr"))
        .collect();
    assert_eq!(repr_params, ["srl.repr.mix.raw", "srl.repr.mix.gamma"]);
    scramble(&mut m.store, 23);
    let batch: Vec<&TagExample> = ex.iter().collect();
    let report = grad_check_params(
        &m.store,
        |g: &mut Graph<f64>, store| m.loss::<polyglot_core::Rng>(g, store, &batch, None).unwrap(),
        1e-4,
        None,
    );
    assert!(report.passed(1e-3), "{:?}", report.failures(1e-3));
}

fn overfit<M: SequenceTagger>(model: &mut M, train: &[TagExample]) -> (f64, usize) {
    let mut reached = None;
    train_tagger_with(model, train, None, |ep, m| {
        if ep.epoch % 5 == 4 && evaluate(m, train).unwrap().f1() == 1.0 {
            reached = Some(ep.epoch + 1);
            return false;
        }
        true
    })
    .unwrap();
    for tags in model.predict(train).unwrap() {
        assert!(bio_to_spans(&tags).is_ok(), "invalid BIO {:?}", tags);
    }
    (evaluate(model, train).unwrap().f1(), reached.unwrap_or(usize::MAX))
}

#[test]
fn srl_overfits_fixture() {
    let train: Vec<TagExample> = treebank("eng", 20, 4).iter().map(|s| TagExample::srl(s, None).unwrap()).collect();
    let v = vectors_for(&train, 16, 4);
    let mut m: SrlModel = SrlModel::for_data(SrlConfig::fixture(), ReprSpec::Static(&v), &train).unwrap();
    let (f1, epochs) = overfit(&mut m, &train);
    eprintln!("SRL training F1 {:.4} at epoch {}", f1, epochs);
    assert_eq!(f1, 1.0);
    assert!(epochs <= 300);
}

#[test]
fn ner_overfits_fixture() {
    let train: Vec<TagExample> = ner_set("ara", 20, 4).iter().map(|s| TagExample::ner(s, None).unwrap()).collect();
    let v = vectors_for(&train, 16, 4);
    let mut m: NerModel = NerModel::for_data(NerConfig::fixture(), ReprSpec::Static(&v), &train).unwrap();
    let (f1, epochs) = overfit(&mut m, &train);
    eprintln!("NER training F1 {:.4} at epoch {}", f1, epochs);
    assert_eq!(f1, 1.0);
    assert!(epochs <= 300);
}
