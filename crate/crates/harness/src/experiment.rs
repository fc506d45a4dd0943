//! One configured experiment: representation, task training over one or
//! more seeds, test scoring and the metrics report.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use polyglot_embed::EmbeddingMatrix;
use polyglot_lm::{checkpoint, LayerStack, LmModel, ReprSpec};
use polyglot_parser::{las_eval, train_parser, AttachmentCounts, ParseExample, ParserModel};
use polyglot_taggers::{span_counts, train_tagger, NerModel, SequenceTagger, SpanCounts, SrlModel, TagExample};
use polyglot_text::{bio_to_spans, AnnotatedSentence, TokenStream};

use crate::config::{ExperimentConfig, Preset, Representation, Task, TaskHyper};
use crate::data::{check_overlap, extension, load_task_set, write_task_set};
use crate::error::{HarnessError, Result};

/// Mean and sample standard deviation of one metric over runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Present only with two or more runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let std = (n >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Summary { mean, std }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: usize,
    pub seed: u64,
    /// `uas`/`las` for parsing, `precision`/`recall`/`f1` for tagging, all
    /// in percent.
    pub metrics: BTreeMap<String, f64>,
    /// Epoch whose parameters were kept, when a dev set drove stopping.
    pub best_epoch: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub task: Task,
    pub representation: Representation,
    pub target: String,
    pub languages: Vec<String>,
    /// Row label of the task languages, e.g. `ara+eng`.
    pub languages_label: String,
    pub preset: Preset,
    pub fingerprint: String,
    pub runs: Vec<RunMetrics>,
    pub summary: BTreeMap<String, Summary>,
    /// LM perplexity on the target test sentences (contextual only).
    pub lm_perplexity: Option<f64>,
    pub wall_clock_secs: f64,
}

impl MetricsReport {
    /// The report with the wall-clock time zeroed, for comparing runs.
    pub fn without_timing(&self) -> MetricsReport {
        MetricsReport {
            wall_clock_secs: 0.0,
            ..self.clone()
        }
    }

    pub fn headline(&self) -> Option<Summary> {
        self.summary.get(self.task.headline()).copied()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Output directory of `config`: relative paths go under `out_root`.
pub fn output_dir(config: &ExperimentConfig, out_root: &Path) -> PathBuf {
    if config.output.is_absolute() {
        config.output.clone()
    } else {
        out_root.join(&config.output)
    }
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(HarnessError::MissingArtifact(path.to_path_buf()))
    }
}

fn check_artifacts(config: &ExperimentConfig) -> Result<()> {
    for l in &config.languages {
        let d = &config.data[l];
        require(&d.train)?;
        for p in d.dev.iter().chain(&d.test) {
            require(p)?;
        }
    }
    for p in config.embeddings.iter().chain(&config.lm) {
        require(p)?;
    }
    for c in &config.lm_corpus {
        require(&c.path)?;
    }
    Ok(())
}

/// Union of embedding files; a word keeps the vector of the first file
/// that has it.
pub fn merge_embeddings(paths: &[PathBuf]) -> Result<EmbeddingMatrix> {
    let mut words = Vec::new();
    let mut data = Vec::new();
    let mut seen = HashSet::new();
    let mut dim = None;
    for p in paths {
        let m = EmbeddingMatrix::load(p)?;
        if *dim.get_or_insert(m.dim()) != m.dim() {
            return Err(HarnessError::Config(format!(
                "{} has width {}, earlier files {}",
                p.display(),
                m.dim(),
                dim.unwrap_or(0)
            )));
        }
        for (i, w) in m.words().iter().enumerate() {
            if seen.insert(w.clone()) {
                words.push(w.clone());
                data.extend_from_slice(m.row(i));
            }
        }
    }
    Ok(EmbeddingMatrix::new(words, dim.unwrap_or(0), data)?)
}

enum Prepared {
    Static(EmbeddingMatrix),
    Contextual(LmModel<f32>),
}

impl Prepared {
    fn spec(&self) -> ReprSpec<'_> {
        match self {
            Prepared::Static(m) => ReprSpec::Static(m),
            Prepared::Contextual(lm) => ReprSpec::Contextual {
                depth: lm.config.layers + 1,
                width: lm.config.layer_width(),
            },
        }
    }

    fn stacks(&self, sentences: &[AnnotatedSentence]) -> Result<Vec<Option<LayerStack>>> {
        match self {
            Prepared::Static(_) => Ok(vec![None; sentences.len()]),
            Prepared::Contextual(lm) => {
                let toks: Vec<&[String]> = sentences.iter().map(|s| s.tokens.as_slice()).collect();
                Ok(lm.extract(&toks)?.into_iter().map(Some).collect())
            }
        }
    }
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    match (config.representation.lm_variant(), &config.lm) {
        (None, _) => Ok(Prepared::Static(merge_embeddings(&config.embeddings)?)),
        (Some(want), Some(dir)) => {
            let lm = checkpoint::load(dir)?;
            if lm.config.variant != want {
                return Err(HarnessError::Config(format!(
                    "{} needs a {} checkpoint but {} holds {}",
                    config.representation.name(),
                    want.name(),
                    dir.display(),
                    lm.config.variant.name()
                )));
            }
            Ok(Prepared::Contextual(lm))
        }
        (Some(_), None) => Err(HarnessError::Config("contextual representation without an LM".into())),
    }
}

/// Training sentences of every task language, the target dev set and the
/// target test set.
struct Splits {
    train: Vec<AnnotatedSentence>,
    dev: Vec<AnnotatedSentence>,
    test: Vec<AnnotatedSentence>,
}

fn load_splits(config: &ExperimentConfig) -> Result<Splits> {
    let mut train = Vec::new();
    for l in &config.languages {
        train.extend(load_task_set(config.task, &config.data[l].train, l)?);
    }
    let target = &config.data[&config.target];
    let dev = match &target.dev {
        Some(p) => load_task_set(config.task, p, &config.target)?,
        None => Vec::new(),
    };
    let test_path = target.test.as_ref().ok_or_else(|| HarnessError::Config("no target test set".into()))?;
    let test = load_task_set(config.task, test_path, &config.target)?;
    Ok(Splits { train, dev, test })
}

fn to_stream(sentences: &[AnnotatedSentence], source: &str) -> Result<TokenStream> {
    let mut s = TokenStream::new(source);
    for x in sentences {
        s.push(x.tokens.clone(), &x.language)?;
    }
    Ok(s)
}

fn parse_examples(sentences: &[AnnotatedSentence], stacks: Vec<Option<LayerStack>>) -> Result<Vec<ParseExample>> {
    Ok(sentences
        .iter()
        .zip(stacks)
        .map(|(s, st)| ParseExample::from_sentence(s, st))
        .collect::<std::result::Result<_, _>>()?)
}

fn tag_examples(task: Task, sentences: &[AnnotatedSentence], stacks: Vec<Option<LayerStack>>) -> Result<Vec<TagExample>> {
    let make = |(s, st): (&AnnotatedSentence, Option<LayerStack>)| match task {
        Task::Srl => TagExample::srl(s, st),
        _ => TagExample::ner(s, st),
    };
    Ok(sentences.iter().zip(stacks).map(make).collect::<std::result::Result<_, _>>()?)
}

/// Metrics of one run plus the annotated test predictions.
type RunOutcome = (BTreeMap<String, f64>, Option<usize>, Vec<AnnotatedSentence>);

struct Prepped<'a> {
    splits: &'a Splits,
    stacks: [Vec<Option<LayerStack>>; 3],
}

fn run_parser(hyper: polyglot_parser::ParserConfig, spec: ReprSpec, p: &Prepped) -> Result<RunOutcome> {
    let train = parse_examples(&p.splits.train, p.stacks[0].clone())?;
    let dev = parse_examples(&p.splits.dev, p.stacks[1].clone())?;
    let test = parse_examples(&p.splits.test, p.stacks[2].clone())?;
    let mut model = ParserModel::for_data(hyper, spec, &train)?;
    let report = train_parser(&mut model, &train, (!dev.is_empty()).then_some(dev.as_slice()))?;
    let parses = model.parse(&test)?;
    let mut counts = AttachmentCounts::default();
    let mut out = Vec::with_capacity(parses.len());
    for ((parse, e), s) in parses.into_iter().zip(&test).zip(&p.splits.test) {
        counts.add(las_eval(&parse.heads, &parse.rels, &e.heads, &e.rels)?);
        let mut s = s.clone();
        s.heads = Some(parse.heads);
        s.deprels = Some(parse.rels);
        out.push(s);
    }
    let metrics = BTreeMap::from([("uas".to_string(), counts.uas()), ("las".to_string(), counts.las())]);
    Ok((metrics, report.best_epoch, out))
}

fn run_tagger<M: SequenceTagger>(mut model: M, task: Task, train: &[TagExample], dev: &[TagExample], test: &[TagExample], gold: &[AnnotatedSentence]) -> Result<RunOutcome> {
    let report = train_tagger(&mut model, train, (!dev.is_empty()).then_some(dev))?;
    let predicted = model.predict(test)?;
    let mut counts = SpanCounts::default();
    let mut out = Vec::with_capacity(test.len());
    for ((tags, e), s) in predicted.iter().zip(test).zip(gold) {
        let spans = bio_to_spans(tags)?;
        counts.add(span_counts(&spans, &e.spans()?, model.excluded()));
        let mut s = s.clone();
        match task {
            Task::Srl => s.roles = Some(spans),
            _ => s.entities = Some(spans),
        }
        out.push(s);
    }
    let m = counts.metrics();
    let metrics = BTreeMap::from([
        ("precision".to_string(), m.precision),
        ("recall".to_string(), m.recall),
        ("f1".to_string(), m.f1),
    ]);
    Ok((metrics, report.best_epoch, out))
}

fn run_once(hyper: TaskHyper, spec: ReprSpec, p: &Prepped) -> Result<RunOutcome> {
    match hyper {
        TaskHyper::Ud(c) => run_parser(c, spec, p),
        TaskHyper::Srl(c) => {
            let ex = |i: usize, s: &[AnnotatedSentence]| tag_examples(Task::Srl, s, p.stacks[i].clone());
            let (train, dev, test) = (ex(0, &p.splits.train)?, ex(1, &p.splits.dev)?, ex(2, &p.splits.test)?);
            let model = SrlModel::for_data(c, spec, &train)?;
            run_tagger(model, Task::Srl, &train, &dev, &test, &p.splits.test)
        }
        TaskHyper::Ner(c) => {
            let ex = |i: usize, s: &[AnnotatedSentence]| tag_examples(Task::Ner, s, p.stacks[i].clone());
            let (train, dev, test) = (ex(0, &p.splits.train)?, ex(1, &p.splits.dev)?, ex(2, &p.splits.test)?);
            let model = NerModel::for_data(c, spec, &train)?;
            run_tagger(model, Task::Ner, &train, &dev, &test, &p.splits.test)
        }
    }
}

/// Runs `config` and writes `metrics.json` and the first run's test
/// predictions to its output directory.
pub fn run_experiment(config: &ExperimentConfig, out_root: &Path) -> Result<MetricsReport> {
    let started = Instant::now();
    config.validate()?;
    check_artifacts(config)?;
    let splits = load_splits(config)?;
    let corpora = config
        .lm_corpus
        .iter()
        .map(|c| Ok(TokenStream::read(&c.path, &c.language)?))
        .collect::<Result<Vec<_>>>()?;
    check_overlap(&splits.test, &corpora)?;

    let prepared = prepare(config)?;
    let lm_perplexity = match &prepared {
        Prepared::Contextual(lm) => Some(lm.perplexity(&to_stream(&splits.test, "test")?)),
        Prepared::Static(_) => None,
    };
    let p = Prepped {
        stacks: [prepared.stacks(&splits.train)?, prepared.stacks(&splits.dev)?, prepared.stacks(&splits.test)?],
        splits: &splits,
    };

    let mut runs = Vec::with_capacity(config.runs);
    let mut first_predictions = None;
    for run in 0..config.runs {
        let hyper = config.hyperparameters(run);
        log::info!("{} run {} of {}", config.display_name(), run + 1, config.runs);
        let (metrics, best_epoch, predictions) = run_once(hyper, prepared.spec(), &p)?;
        first_predictions.get_or_insert(predictions);
        runs.push(RunMetrics {
            run,
            seed: config.seed.wrapping_add(run as u64),
            metrics,
            best_epoch,
        });
    }
    let keys: Vec<String> = runs[0].metrics.keys().cloned().collect();
    let summary = keys
        .into_iter()
        .map(|k| {
            let vals: Vec<f64> = runs.iter().map(|r| r.metrics[&k]).collect();
            (k, summarize(&vals))
        })
        .collect();

    let report = MetricsReport {
        name: config.display_name(),
        task: config.task,
        representation: config.representation,
        target: config.target.clone(),
        languages: config.languages.clone(),
        languages_label: config.languages_label(),
        preset: config.preset,
        fingerprint: config.fingerprint(),
        runs,
        summary,
        lm_perplexity,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    let dir = output_dir(config, out_root);
    std::fs::create_dir_all(&dir)?;
    report.save(&dir.join("metrics.json"))?;
    std::fs::write(dir.join("config.toml"), config.to_toml())?;
    if let Some(pred) = first_predictions {
        write_task_set(config.task, &dir.join(format!("predictions.{}", extension(config.task))), &pred)?;
    }
    Ok(report)
}

/// Scores a prediction file against a gold file of the same task, giving
/// the task's metrics JSON.
pub fn score_files(task: Task, gold: &Path, predicted: &Path, language: &str) -> Result<serde_json::Value> {
    let gold = load_task_set(task, gold, language)?;
    let pred = load_task_set(task, predicted, language)?;
    if gold.len() != pred.len() {
        return Err(HarnessError::Data(format!("{} gold but {} predicted sentences", gold.len(), pred.len())));
    }
    for (i, (g, p)) in gold.iter().zip(&pred).enumerate() {
        if g.tokens != p.tokens {
            return Err(HarnessError::Data(format!("sentence {} has different tokens", i + 1)));
        }
    }
    match task {
        Task::Ud => {
            let mut c = AttachmentCounts::default();
            for (g, p) in gold.iter().zip(&pred) {
                let missing = || HarnessError::Data("sentence without a tree".into());
                c.add(las_eval(
                    p.heads.as_ref().ok_or_else(missing)?,
                    p.deprels.as_ref().ok_or_else(missing)?,
                    g.heads.as_ref().ok_or_else(missing)?,
                    g.deprels.as_ref().ok_or_else(missing)?,
                )?);
            }
            Ok(serde_json::to_value(c.metrics())?)
        }
        Task::Srl | Task::Ner => {
            let exclude: &[&str] = if task == Task::Srl { &[polyglot_taggers::VERB] } else { &[] };
            let spans = |s: &AnnotatedSentence| {
                let v = if task == Task::Srl { &s.roles } else { &s.entities };
                v.clone().unwrap_or_default()
            };
            let mut c = SpanCounts::default();
            for (g, p) in gold.iter().zip(&pred) {
                c.add(span_counts(&spans(p), &spans(g), exclude));
            }
            Ok(serde_json::to_value(c.metrics())?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_std_needs_two_runs() {
        assert_eq!(summarize(&[3.0]), Summary { mean: 3.0, std: None });
        let s = summarize(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std.unwrap() - 1.0).abs() < 1e-12);
    }
}
