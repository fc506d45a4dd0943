//! Running a list of experiments as independent jobs.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use polyglot_core::par;

use crate::config::{ExperimentConfig, Representation, Task};
use crate::error::Result;
use crate::experiment::{output_dir, run_experiment, MetricsReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub name: String,
    pub task: Task,
    pub representation: Representation,
    pub target: String,
    pub languages_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixResult {
    pub entries: Vec<MatrixEntry>,
}

impl MatrixResult {
    pub fn all_succeeded(&self) -> bool {
        self.entries.iter().all(|e| e.error.is_none())
    }

    pub fn failures(&self) -> impl Iterator<Item = &MatrixEntry> {
        self.entries.iter().filter(|e| e.error.is_some())
    }

    pub fn reports(&self) -> Vec<MetricsReport> {
        self.entries.iter().filter_map(|e| e.report.clone()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Runs every config, concurrently when the `parallel` feature is on. A
/// failing entry records its error and the rest still run. Entries that
/// share an output directory with an earlier entry fail without running.
pub fn run_matrix(configs: &[ExperimentConfig], out_root: &Path) -> MatrixResult {
    let mut first_user: HashMap<std::path::PathBuf, String> = HashMap::new();
    let clashes: Vec<Option<String>> = configs
        .iter()
        .map(|c| {
            let name = c.display_name();
            match first_user.get(&output_dir(c, out_root)) {
                Some(other) => Some(format!("output directory already used by {}", other)),
                None => {
                    first_user.insert(output_dir(c, out_root), name);
                    None
                }
            }
        })
        .collect();
    let jobs: Vec<(&ExperimentConfig, Option<String>)> = configs.iter().zip(clashes).collect();
    let entries = par::map(&jobs, |(c, clash)| {
        let outcome = match clash {
            Some(e) => Err(e.clone()),
            None => run_experiment(c, out_root).map_err(|e| e.to_string()),
        };
        if let Err(e) = &outcome {
            log::error!("{} failed: {}", c.display_name(), e);
        }
        MatrixEntry {
            name: c.display_name(),
            task: c.task,
            representation: c.representation,
            target: c.target.clone(),
            languages_label: c.languages_label(),
            error: outcome.as_ref().err().cloned(),
            report: outcome.ok(),
        }
    });
    MatrixResult { entries }
}
