use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use polyglot_harness::config::{CorpusRef, TaskData};
use polyglot_harness::{ExperimentConfig, HarnessError, MatrixConfig, Preset, Representation, Task, TaskHyper};

fn data(lang: &str) -> TaskData {
    TaskData {
        train: format!("{}.train.conllu", lang).into(),
        dev: Some(format!("{}.dev.conllu", lang).into()),
        test: Some(format!("{}.test.conllu", lang).into()),
    }
}

fn base() -> ExperimentConfig {
    ExperimentConfig {
        name: None,
        task: Task::Ud,
        representation: Representation::RositaChar,
        target: "ara".into(),
        languages: vec!["ara".into(), "eng".into()],
        preset: Preset::Desk,
        seed: 3,
        runs: 5,
        epochs: None,
        data: BTreeMap::from([("ara".into(), data("ara")), ("eng".into(), data("eng"))]),
        embeddings: vec![],
        lm: Some("lm/rosita_char".into()),
        lm_corpus: vec![CorpusRef {
            language: "ara".into(),
            path: "ara.txt".into(),
        }],
        output: "out/ud".into(),
    }
}

#[test]
fn toml_round_trip() {
    let c = base();
    let text = c.to_toml();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
    let m = MatrixConfig {
        experiment: vec![c.clone(), c],
    };
    let back: MatrixConfig = toml::from_str(&m.to_toml()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn defaults_and_unknown_fields() {
    let text = r#"
task = "ner"
representation = "static_mono"
target = "zho"
languages = ["zho"]
preset = "paper"
embeddings = ["zho.vec"]
output = "o"
[data.zho]
train = "t.tsv"
test = "s.tsv"
"#;
    let c = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!((c.seed, c.runs, c.epochs), (1, 1, None));
    assert_eq!(c.display_name(), "ner-static_mono-zho");
    let bad = format!("{}\nlearning_rate = 3\n", text.replace("[data.zho]", "colour = 1\n[data.zho]"));
    assert!(ExperimentConfig::from_toml(&bad).is_err());
}

#[test]
fn validation_rejects_inconsistent_configs() {
    let cases: Vec<(&str, Box<dyn Fn(&mut ExperimentConfig)>)> = vec![
        ("zero runs", Box::new(|c| c.runs = 0)),
        ("target not a task language", Box::new(|c| c.languages = vec!["eng".into()])),
        ("repeated language", Box::new(|c| c.languages.push("ara".into()))),
        ("no data for a language", Box::new(|c| {
            c.data.remove("eng");
        })),
        ("no target test set", Box::new(|c| c.data.get_mut("ara").unwrap().test = None)),
        ("contextual without checkpoint", Box::new(|c| c.lm = None)),
        ("contextual without corpus", Box::new(|c| c.lm_corpus.clear())),
        ("static_mono with two files", Box::new(|c| {
            c.representation = Representation::StaticMono;
            c.embeddings = vec!["a".into(), "b".into()];
        })),
        ("static_poly with one file", Box::new(|c| {
            c.representation = Representation::StaticPoly;
            c.embeddings = vec!["a".into()];
        })),
    ];
    for (what, edit) in cases {
        let mut c = base();
        edit(&mut c);
        assert!(matches!(c.validate(), Err(HarnessError::Config(_))), "{} accepted", what);
    }
    base().validate().unwrap();
}

#[test]
fn presets_resolve_and_runs_shift_the_seed() {
    let mut c = base();
    c.epochs = Some(7);
    for (task, preset) in [Task::Ud, Task::Srl, Task::Ner].into_iter().flat_map(|t| [(t, Preset::Paper), (t, Preset::Desk), (t, Preset::Fixture)]) {
        c.task = task;
        c.preset = preset;
        match c.hyperparameters(2) {
            TaskHyper::Ud(p) => assert_eq!((p.seed, p.epochs), (5, 7)),
            TaskHyper::Srl(s) => assert_eq!((s.schedule.seed, s.schedule.epochs), (5, 7)),
            TaskHyper::Ner(n) => assert_eq!((n.schedule.seed, n.schedule.epochs), (5, 7)),
        }
    }
}

#[test]
fn relative_inputs_resolve_against_the_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, base().to_toml()).unwrap();
    let c = ExperimentConfig::load(&path).unwrap();
    assert_eq!(c.data["ara"].train, dir.path().join("ara.train.conllu"));
    assert_eq!(c.lm, Some(dir.path().join("lm/rosita_char")));
    assert_eq!(c.lm_corpus[0].path, dir.path().join("ara.txt"));
    // Outputs stay relative; they go under the output root.
    assert_eq!(c.output, PathBuf::from("out/ud"));
}

#[test]
fn languages_label_puts_target_first() {
    let mut c = base();
    c.languages = vec!["eng".into(), "ara".into()];
    assert_eq!(c.languages_label(), "ara+eng");
}

fn edited(k: u8, v: u64) -> ExperimentConfig {
    let mut c = base();
    match k % 7 {
        0 => c.seed = v,
        1 => c.runs = 1 + (v % 9) as usize,
        2 => c.epochs = Some(1 + (v % 50) as usize),
        3 => c.output = format!("out/{}", v).into(),
        4 => c.preset = [Preset::Paper, Preset::Desk, Preset::Fixture][(v % 3) as usize],
        5 => c.task = [Task::Ud, Task::Srl, Task::Ner][(v % 3) as usize],
        _ => c.lm = Some(format!("lm/{}", v).into()),
    }
    c
}

proptest! {
    #[test]
    fn fingerprint_changes_iff_config_changes(k1 in 0u8..7, v1 in 0u64..40, k2 in 0u8..7, v2 in 0u64..40) {
        let (a, b) = (edited(k1, v1), edited(k2, v2));
        prop_assert_eq!(a == b, a.fingerprint() == b.fingerprint());
        prop_assert_eq!(a.fingerprint(), a.clone().fingerprint());
        prop_assert_eq!(a.fingerprint().len(), 64);
    }
}
