//! Experiment harness: declarative configs, the representation × task
//! comparison matrix, result tables and the synthetic fixture pipeline.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod fixture;
pub mod matrix;
pub mod pipeline;
pub mod table;

pub use config::{output_root, ExperimentConfig, MatrixConfig, Preset, Representation, Task, TaskHyper, OUTPUT_ROOT_VAR};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, score_files, summarize, MetricsReport, RunMetrics, Summary};
pub use fixture::{prepare_fixture, FixtureOptions};
pub use matrix::{run_matrix, MatrixEntry, MatrixResult};
pub use table::{emit_table, parse_csv_table, TableFormat, TableRow};
