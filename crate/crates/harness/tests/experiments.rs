//! End-to-end runs over a small generated fixture directory.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use polyglot_harness::data::{load_task_set, write_plain};
use polyglot_harness::experiment::output_dir;
use polyglot_harness::{
    prepare_fixture, run_experiment, run_matrix, score_files, ExperimentConfig, FixtureOptions, HarnessError, MatrixConfig,
    MetricsReport, Representation, Task,
};

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    matrix: PathBuf,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let opts = FixtureOptions {
            task_sentences: 24,
            held_out: 6,
            corpus_sentences: 120,
            lm_epochs: 2,
            task_epochs: 3,
            ud_runs: 2,
            tagger_runs: 1,
            ..FixtureOptions::default()
        };
        let matrix = prepare_fixture(&dir.path().join("data"), &opts).unwrap();
        Fixture {
            root: dir.path().to_path_buf(),
            _dir: dir,
            matrix,
        }
    })
}

fn configs() -> Vec<ExperimentConfig> {
    MatrixConfig::load(&fixture().matrix).unwrap().experiment
}

fn find(task: Task, rep: Representation, poly: bool) -> ExperimentConfig {
    configs()
        .into_iter()
        .find(|c| c.task == task && c.representation == rep && (c.languages.len() == 2) == poly)
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let p = fixture().root.join("scratch").join(name);
    std::fs::create_dir_all(&p).unwrap();
    p
}

#[test]
fn fixture_matrix_has_every_row_for_every_task() {
    let cs = configs();
    assert_eq!(cs.len(), 21);
    for task in Task::ALL {
        let rows: Vec<(Representation, usize)> = cs.iter().filter(|c| c.task == task).map(|c| (c.representation, c.languages.len())).collect();
        assert_eq!(rows.len(), 7);
        for c in cs.iter().filter(|c| c.task == task) {
            c.validate().unwrap();
        }
    }
}

#[test]
fn ud_report_has_mean_and_std_over_runs() {
    let c = find(Task::Ud, Representation::RositaWord, true);
    let out = scratch("ud-report");
    let r = run_experiment(&c, &out).unwrap();
    assert_eq!(r.runs.len(), 2);
    assert_eq!(r.runs.iter().map(|x| x.seed).collect::<Vec<_>>(), vec![c.seed, c.seed + 1]);
    let las = r.summary["las"];
    assert!(las.std.is_some());
    assert!(r.summary["las"].mean <= r.summary["uas"].mean);
    assert!(r.lm_perplexity.unwrap().is_finite());
    assert_eq!(r.fingerprint, c.fingerprint());

    let dir = output_dir(&c, &out);
    let saved = MetricsReport::load(&dir.join("metrics.json")).unwrap();
    assert_eq!(saved, r);
    // The prediction file scores to the first run's numbers.
    let test = c.data["ara"].test.clone().unwrap();
    let m = score_files(Task::Ud, &test, &dir.join("predictions.conllu"), "ara").unwrap();
    assert!((m["las"].as_f64().unwrap() - r.runs[0].metrics["las"]).abs() < 1e-9);
    let preds = load_task_set(Task::Ud, &dir.join("predictions.conllu"), "ara").unwrap();
    assert!(preds.iter().all(|s| polyglot_parser::is_tree(s.heads.as_ref().unwrap())));
}

#[test]
fn single_run_report_has_no_std() {
    let c = find(Task::Ner, Representation::StaticMono, false);
    let r = run_experiment(&c, &scratch("ner-single")).unwrap();
    assert_eq!(r.runs.len(), 1);
    assert!(r.summary.values().all(|s| s.std.is_none()));
    assert!(r.lm_perplexity.is_none());
    assert_eq!(r.summary.keys().collect::<Vec<_>>(), ["f1", "precision", "recall"]);
}

#[test]
fn identical_config_and_seed_give_identical_metrics() {
    let c = find(Task::Srl, Representation::RositaChar, true);
    let a = run_experiment(&c, &scratch("det-a")).unwrap();
    let b = run_experiment(&c, &scratch("det-b")).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());
}

#[test]
fn planted_test_sentence_in_lm_corpus_is_refused() {
    let mut c = find(Task::Ud, Representation::MonoChar, false);
    let test = load_task_set(Task::Ud, c.data["ara"].test.as_ref().unwrap(), "ara").unwrap();
    let dir = scratch("overlap");
    let corpus = dir.join("corpus.txt");
    let mut lines: Vec<Vec<String>> = polyglot_text::TokenStream::read(&c.lm_corpus[0].path, "ara").unwrap().sentences().to_vec();
    lines.insert(3, test[2].tokens.clone());
    write_plain(&corpus, &lines).unwrap();
    c.lm_corpus[0].path = corpus;
    match run_experiment(&c, &dir) {
        Err(HarnessError::Overlap(sents)) => assert_eq!(sents, vec![test[2].tokens.join(" ")]),
        other => panic!("expected an overlap error, got {:?}", other.map(|r| r.name)),
    }
    // Nothing was written.
    assert!(!output_dir(&c, &dir).join("metrics.json").exists());
}

#[test]
fn missing_artifact_and_wrong_checkpoint_fail() {
    let mut c = find(Task::Ner, Representation::RositaChar, false);
    c.lm = Some(fixture().root.join("no-such-lm"));
    assert!(matches!(run_experiment(&c, &scratch("missing")), Err(HarnessError::MissingArtifact(p)) if p.ends_with("no-such-lm")));

    let mut c = find(Task::Ner, Representation::RositaWord, false);
    c.lm = find(Task::Ner, Representation::MonoChar, false).lm;
    assert!(matches!(run_experiment(&c, &scratch("variant")), Err(HarnessError::Config(m)) if m.contains("mono_char")));
}

#[test]
fn empty_matrix_gives_empty_results() {
    let r = run_matrix(&[], &scratch("empty"));
    assert!(r.entries.is_empty());
    assert!(r.all_succeeded());
}

#[test]
fn one_failing_entry_leaves_the_others() {
    let mut cs: Vec<ExperimentConfig> = configs().into_iter().filter(|c| c.task == Task::Ner).take(3).collect();
    cs[1].data.get_mut("ara").unwrap().train = PathBuf::from("/nonexistent/train.tsv");
    let r = run_matrix(&cs, &scratch("one-bad"));
    assert_eq!(r.entries.len(), 3);
    assert_eq!(r.failures().count(), 1);
    assert!(r.entries[1].error.as_ref().unwrap().contains("nonexistent"));
    assert!(r.entries[0].report.is_some() && r.entries[2].report.is_some());
    assert!(!r.all_succeeded());
}

#[test]
fn shared_output_directory_is_an_error() {
    let c = find(Task::Ner, Representation::StaticMono, false);
    let r = run_matrix(&[c.clone(), c], &scratch("shared"));
    assert!(r.entries[0].report.is_some());
    assert!(r.entries[1].error.as_ref().unwrap().contains("already used"));
}

fn polyglot(args: &[&str], root: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_polyglot"))
        .args(args)
        .env("POLYGLOT_OUTPUT_ROOT", root)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes_follow_job_outcomes() {
    let root = scratch("cli");
    let good: Vec<ExperimentConfig> = configs().into_iter().filter(|c| c.task == Task::Ner && c.languages.len() == 1).take(2).collect();
    let good_path = root.join("good.toml");
    std::fs::write(&good_path, MatrixConfig { experiment: good.clone() }.to_toml()).unwrap();
    let out = polyglot(&["run-matrix", "--config", good_path.to_str().unwrap(), "--out", "good.json"], &root);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(root.join("good.json").exists());

    let table = polyglot(&["emit-table", root.join("good.json").to_str().unwrap(), "--format", "csv"], &root);
    assert!(table.status.success());
    let rows = polyglot_harness::parse_csv_table(&String::from_utf8(table.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);

    let mut bad = good;
    bad[0].embeddings = vec![PathBuf::from("/nonexistent.vec")];
    let bad_path = root.join("bad.toml");
    std::fs::write(&bad_path, MatrixConfig { experiment: bad }.to_toml()).unwrap();
    let out = polyglot(&["run-matrix", "--config", bad_path.to_str().unwrap(), "--out", "bad.json"], &root);
    assert!(!out.status.success());

    let out = polyglot(&["evaluate", "--task", "pos", "--gold", "a", "--predicted", "b"], &root);
    assert!(!out.status.success());
}
