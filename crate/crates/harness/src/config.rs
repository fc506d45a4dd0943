//! Declarative experiment descriptions, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use polyglot_lm::{LmConfig, Variant};
use polyglot_parser::ParserConfig;
use polyglot_taggers::{NerConfig, SrlConfig};

use crate::error::{HarnessError, Result};

/// Environment variable naming the directory relative outputs go under.
pub const OUTPUT_ROOT_VAR: &str = "POLYGLOT_OUTPUT_ROOT";

/// The output root from the environment, or the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Ud,
    Srl,
    Ner,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Ud, Task::Srl, Task::Ner];

    pub fn name(self) -> &'static str {
        match self {
            Task::Ud => "ud",
            Task::Srl => "srl",
            Task::Ner => "ner",
        }
    }

    /// Metric shown in tables.
    pub fn headline(self) -> &'static str {
        match self {
            Task::Ud => "las",
            Task::Srl | Task::Ner => "f1",
        }
    }

    pub fn column_title(self) -> &'static str {
        match self {
            Task::Ud => "UD LAS",
            Task::Srl => "SRL F1",
            Task::Ner => "NER F1",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    StaticMono,
    StaticPoly,
    MonoChar,
    RositaChar,
    RositaWord,
}

impl Representation {
    pub const ALL: [Representation; 5] = [
        Representation::StaticMono,
        Representation::StaticPoly,
        Representation::MonoChar,
        Representation::RositaChar,
        Representation::RositaWord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::StaticMono => "static_mono",
            Representation::StaticPoly => "static_poly",
            Representation::MonoChar => "mono_char",
            Representation::RositaChar => "rosita_char",
            Representation::RositaWord => "rosita_word",
        }
    }

    /// LM variant whose stacks this representation uses.
    pub fn lm_variant(self) -> Option<Variant> {
        match self {
            Representation::StaticMono | Representation::StaticPoly => None,
            Representation::MonoChar => Some(Variant::MonoChar),
            Representation::RositaChar => Some(Variant::RositaChar),
            Representation::RositaWord => Some(Variant::RositaWord),
        }
    }

    pub fn is_contextual(self) -> bool {
        self.lm_variant().is_some()
    }

    /// Row label in result tables.
    pub fn label(self, target: &str) -> String {
        match self {
            Representation::StaticMono => format!("fastT ({})", target),
            Representation::StaticPoly => format!("fastT ({}+eng)", target),
            Representation::MonoChar => "MonoChar".into(),
            Representation::RositaChar => "RositaChar".into(),
            Representation::RositaWord => "RositaWord".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Published sizes.
    Paper,
    /// Reduced sizes for laptop runs.
    Desk,
    /// Tiny models for smoke tests on synthetic data.
    Fixture,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskData {
    pub train: PathBuf,
    #[serde(default)]
    pub dev: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
}

/// One LM training file and its language.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRef {
    pub language: String,
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub task: Task,
    pub representation: Representation,
    /// Language whose test set is scored.
    pub target: String,
    /// Languages whose training data the task model sees; the target
    /// alone or the target plus English.
    pub languages: Vec<String>,
    pub preset: Preset,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Repetitions with seeds `seed, seed + 1, ..`.
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Overrides the preset's epoch count.
    #[serde(default)]
    pub epochs: Option<usize>,
    /// Task data per language.
    pub data: BTreeMap<String, TaskData>,
    /// Word-vector files for static representations, merged in order (an
    /// earlier file wins on shared words).
    #[serde(default)]
    pub embeddings: Vec<PathBuf>,
    /// LM checkpoint directory for contextual representations.
    #[serde(default)]
    pub lm: Option<PathBuf>,
    /// Text the LM and embeddings were trained on, checked against the
    /// test set before anything runs.
    #[serde(default)]
    pub lm_corpus: Vec<CorpusRef>,
    /// Relative paths are resolved under the output root.
    pub output: PathBuf,
}

fn default_seed() -> u64 {
    1
}

fn default_runs() -> usize {
    1
}

/// Fully resolved task hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskHyper {
    Ud(ParserConfig),
    Srl(SrlConfig),
    Ner(NerConfig),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config file; relative input paths are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut c = Self::from_toml(&text)?;
        c.resolve_inputs(path.parent().unwrap_or(Path::new(".")));
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Makes data, embedding, checkpoint and corpus paths absolute with
    /// respect to `base`.
    pub fn resolve_inputs(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in self.data.values_mut() {
            fix(&mut d.train);
            d.dev.as_mut().map(fix);
            d.test.as_mut().map(fix);
        }
        self.embeddings.iter_mut().for_each(fix);
        self.lm.as_mut().map(fix);
        self.lm_corpus.iter_mut().for_each(|c| fix(&mut c.path));
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.epochs == Some(0) {
            return bad("epochs must be at least 1".into());
        }
        if !self.languages.contains(&self.target) {
            return bad(format!("task languages {:?} must include the target {}", self.languages, self.target));
        }
        let mut seen = self.languages.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.languages.len() {
            return bad("task languages repeat".into());
        }
        for l in &self.languages {
            if !self.data.contains_key(l) {
                return bad(format!("no task data for {}", l));
            }
        }
        if self.data[&self.target].test.is_none() {
            return bad(format!("no test set for the target {}", self.target));
        }
        match self.representation {
            Representation::StaticMono if self.embeddings.len() != 1 => {
                bad("static_mono takes exactly one embedding file".into())
            }
            Representation::StaticPoly if self.embeddings.len() < 2 => {
                bad("static_poly takes the aligned target vectors and the English vectors".into())
            }
            r if r.is_contextual() && self.lm.is_none() => bad(format!("{} needs an LM checkpoint", r.name())),
            r if r.is_contextual() && self.lm_corpus.is_empty() => {
                bad(format!("{} needs the LM corpus for the overlap check", r.name()))
            }
            _ => Ok(()),
        }
    }

    /// Label of the task-language column, e.g. `ara+eng`.
    pub fn languages_label(&self) -> String {
        let mut langs = vec![self.target.clone()];
        langs.extend(self.languages.iter().filter(|l| **l != self.target).cloned());
        langs.join("+")
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            format!("{}-{}-{}", self.task.name(), self.representation.name(), self.languages_label())
        })
    }

    /// Task hyperparameters of the preset, with the epoch override applied
    /// and the seed of run `run`.
    pub fn hyperparameters(&self, run: usize) -> TaskHyper {
        let seed = self.seed.wrapping_add(run as u64);
        match self.task {
            Task::Ud => {
                let mut c = match self.preset {
                    Preset::Paper => ParserConfig::paper(),
                    Preset::Desk => ParserConfig::desk(),
                    Preset::Fixture => ParserConfig::fixture(),
                };
                c.seed = seed;
                if let Some(e) = self.epochs {
                    c.epochs = e;
                }
                TaskHyper::Ud(c)
            }
            Task::Srl => {
                let mut c = match self.preset {
                    Preset::Paper => SrlConfig::paper(),
                    Preset::Desk => SrlConfig::desk(),
                    Preset::Fixture => SrlConfig::fixture(),
                };
                c.schedule.seed = seed;
                if let Some(e) = self.epochs {
                    c.schedule.epochs = e;
                }
                TaskHyper::Srl(c)
            }
            Task::Ner => {
                let mut c = match self.preset {
                    Preset::Paper => NerConfig::paper(),
                    Preset::Desk => NerConfig::desk(),
                    Preset::Fixture => NerConfig::fixture(),
                };
                c.schedule.seed = seed;
                if let Some(e) = self.epochs {
                    c.schedule.epochs = e;
                }
                TaskHyper::Ner(c)
            }
        }
    }

    /// SHA-256 of the canonical JSON of the config together with its
    /// resolved hyperparameters, hex encoded.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            config: &'a ExperimentConfig,
            hyperparameters: TaskHyper,
        }
        let json = serde_json::to_vec(&Canonical {
            config: self,
            hyperparameters: self.hyperparameters(0),
        })
        .expect("configs serialize");
        hex::encode(Sha256::digest(&json))
    }
}

/// LM hyperparameters of a preset.
pub fn lm_preset(preset: Preset, variant: Variant) -> LmConfig {
    match preset {
        Preset::Paper => LmConfig::paper(variant),
        Preset::Desk => LmConfig::desk(variant),
        Preset::Fixture => LmConfig::fixture(variant),
    }
}

/// A list of experiments: `[[experiment]]` tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

impl MatrixConfig {
    /// Reads a matrix file. Entries are not validated here so that one bad
    /// entry fails alone when the matrix runs.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: MatrixConfig = toml::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut m.experiment {
            e.resolve_inputs(base);
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }
}
