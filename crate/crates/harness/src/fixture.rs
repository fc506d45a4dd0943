//! A complete synthetic experiment directory: task data for a target
//! language and English, LM corpora with the test sentences held out,
//! word vectors, their alignment, the three LMs and a matrix file with
//! the full set of comparison rows for every task.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use polyglot_embed::{EmbeddingMatrix, SgnsConfig};
use polyglot_lm::Variant;
use polyglot_text::fixtures::{lexicon_corpus, ner_set, treebank, Lexicon};
use polyglot_text::{normalize, AnnotatedSentence, TokenStream};

use crate::config::{CorpusRef, ExperimentConfig, MatrixConfig, Preset, Representation, Task, TaskData};
use crate::config::lm_preset;
use crate::data::{extension, split, write_plain, write_task_set};
use crate::error::Result;
use crate::pipeline::{align_spaces, train_embeddings, train_lm_checkpoint};

pub const ENGLISH: &str = "eng";

#[derive(Clone, Debug)]
pub struct FixtureOptions {
    pub target: String,
    pub seed: u64,
    /// Sentences per task and language before the split.
    pub task_sentences: usize,
    /// Dev and test sentences each.
    pub held_out: usize,
    /// LM corpus sentences per language, before test sentences are removed.
    pub corpus_sentences: usize,
    pub lm_epochs: usize,
    pub task_epochs: usize,
    pub ud_runs: usize,
    pub tagger_runs: usize,
    /// Relative output directory of the matrix entries.
    pub output: PathBuf,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions {
            target: "ara".into(),
            seed: 1,
            task_sentences: 40,
            held_out: 8,
            corpus_sentences: 300,
            lm_epochs: 4,
            task_epochs: 6,
            ud_runs: 3,
            tagger_runs: 2,
            output: PathBuf::from("fixture-matrix"),
        }
    }
}

fn key(tokens: &[String], language: &str) -> String {
    normalize(&tokens.join(" "), language)
}

fn sgns_config(seed: u64) -> SgnsConfig {
    SgnsConfig {
        dim: 32,
        window: 3,
        negatives: 5,
        min_n: 3,
        max_n: 5,
        buckets: 20_000,
        epochs: 5,
        lr: 0.05,
        min_count: 1,
        seed,
    }
}

/// Word pairs `(target word, English word)` from the parallel lexicon
/// categories.
pub fn lexicon_dictionary(target: &str) -> Vec<(String, String)> {
    let (a, b) = (Lexicon::for_language(target), Lexicon::for_language(ENGLISH));
    let cats = |l: &Lexicon| {
        [&l.det, &l.adj, &l.noun, &l.verb, &l.adp, &l.pron, &l.person, &l.place, &l.org]
            .into_iter()
            .flatten()
            .cloned()
            .collect::<Vec<_>>()
    };
    cats(&a).into_iter().zip(cats(&b)).collect()
}

fn task_sets(task: Task, language: &str, n: usize, seed: u64) -> Vec<AnnotatedSentence> {
    match task {
        Task::Ud => treebank(language, n, seed),
        Task::Srl => treebank(language, n, seed.wrapping_add(1000)),
        Task::Ner => ner_set(language, n, seed),
    }
}

/// Writes everything under `dir` and returns the path of `matrix.toml`.
pub fn prepare_fixture(dir: &Path, opts: &FixtureOptions) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let langs = [opts.target.clone(), ENGLISH.to_string()];
    let mut data: BTreeMap<Task, BTreeMap<String, TaskData>> = BTreeMap::new();
    let mut corpora = Vec::new();
    for (li, lang) in langs.iter().enumerate() {
        let lang_seed = opts.seed.wrapping_add(97 * li as u64);
        let mut held_out = HashSet::new();
        for task in Task::ALL {
            let all = task_sets(task, lang, opts.task_sentences, lang_seed);
            let (train, dev, test) = split(&all, opts.held_out, opts.held_out);
            held_out.extend(test.iter().map(|s| key(&s.tokens, lang)));
            let path = |part: &str| PathBuf::from(format!("data/{}.{}.{}.{}", task.name(), lang, part, extension(task)));
            std::fs::create_dir_all(dir.join("data"))?;
            for (part, set) in [("train", &train), ("dev", &dev), ("test", &test)] {
                write_task_set(task, &dir.join(path(part)), set)?;
            }
            data.entry(task).or_default().insert(
                lang.clone(),
                TaskData {
                    train: path("train"),
                    dev: Some(path("dev")),
                    test: Some(path("test")),
                },
            );
        }
        let raw = lexicon_corpus(lang, opts.corpus_sentences, lang_seed.wrapping_add(5), &[]);
        let kept: Vec<Vec<String>> = raw
            .sentences()
            .iter()
            .filter(|s| !held_out.contains(&key(s, lang)))
            .cloned()
            .collect();
        let rel = PathBuf::from(format!("corpus.{}.txt", lang));
        write_plain(&dir.join(&rel), &kept)?;
        corpora.push((
            CorpusRef {
                language: lang.clone(),
                path: rel.clone(),
            },
            TokenStream::read(&dir.join(&rel), lang)?,
        ));
    }

    let vectors: Vec<EmbeddingMatrix> = corpora
        .iter()
        .map(|(_, s)| train_embeddings(s, &sgns_config(opts.seed)))
        .collect::<Result<_>>()?;
    let (map, aligned, eng) = align_spaces(&vectors[0], &vectors[1], &lexicon_dictionary(&opts.target), &opts.target, ENGLISH)?;
    let mono_vectors = PathBuf::from(format!("vectors.{}.txt", opts.target));
    let aligned_vectors = PathBuf::from(format!("vectors.{}.aligned.txt", opts.target));
    let eng_vectors = PathBuf::from("vectors.eng.aligned.txt");
    vectors[0].save(&dir.join(&mono_vectors))?;
    vectors[1].save(&dir.join("vectors.eng.txt"))?;
    aligned.save(&dir.join(&aligned_vectors))?;
    eng.save(&dir.join(&eng_vectors))?;
    map.save(&dir.join("alignment.bin"))?;

    let streams: Vec<TokenStream> = corpora.iter().map(|(_, s)| s.clone()).collect();
    for variant in [Variant::MonoChar, Variant::RositaChar, Variant::RositaWord] {
        let mut cfg = lm_preset(Preset::Fixture, variant);
        cfg.epochs = opts.lm_epochs;
        cfg.seed = opts.seed;
        let used = if variant.is_polyglot() { &streams[..] } else { &streams[..1] };
        let report = train_lm_checkpoint(cfg, used, &[aligned.clone(), eng.clone()], &dir.join("lm").join(variant.name()))?;
        log::info!("fixture {} final loss {:?}", variant.name(), report.losses().last());
    }

    let mut experiment = Vec::new();
    let rows = [
        (Representation::StaticMono, false),
        (Representation::StaticPoly, true),
        (Representation::MonoChar, false),
        (Representation::RositaChar, false),
        (Representation::RositaChar, true),
        (Representation::RositaWord, false),
        (Representation::RositaWord, true),
    ];
    for task in Task::ALL {
        for (rep, poly) in rows {
            let languages = if poly { langs.to_vec() } else { vec![opts.target.clone()] };
            let corpus_langs = if matches!(rep, Representation::StaticMono | Representation::MonoChar) { 1 } else { 2 };
            let mut c = ExperimentConfig {
                name: None,
                task,
                representation: rep,
                target: opts.target.clone(),
                data: languages.iter().map(|l| (l.clone(), data[&task][l].clone())).collect(),
                languages,
                preset: Preset::Fixture,
                seed: opts.seed,
                runs: if task == Task::Ud { opts.ud_runs } else { opts.tagger_runs },
                epochs: Some(opts.task_epochs),
                embeddings: match rep {
                    Representation::StaticMono => vec![mono_vectors.clone()],
                    Representation::StaticPoly => vec![aligned_vectors.clone(), eng_vectors.clone()],
                    _ => Vec::new(),
                },
                lm: rep.lm_variant().map(|v| PathBuf::from("lm").join(v.name())),
                lm_corpus: corpora[..corpus_langs].iter().map(|(c, _)| c.clone()).collect(),
                output: PathBuf::new(),
            };
            c.output = opts.output.join(c.display_name());
            experiment.push(c);
        }
    }
    let path = dir.join("matrix.toml");
    std::fs::write(&path, MatrixConfig { experiment }.to_toml())?;
    Ok(path)
}
