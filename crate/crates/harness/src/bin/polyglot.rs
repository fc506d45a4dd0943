use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use polyglot_embed::align::read_dictionary_file;
use polyglot_embed::{EmbeddingMatrix, SgnsConfig};
use polyglot_harness::config::lm_preset;
use polyglot_harness::data::load_task_set;
use polyglot_harness::pipeline::{align_spaces, extract_to_files, train_embeddings, train_lm_checkpoint};
use polyglot_harness::{
    emit_table, output_root, prepare_fixture, run_experiment, run_matrix, score_files, ExperimentConfig, FixtureOptions,
    MatrixConfig, MatrixResult, MetricsReport, Preset, Task, TableFormat, OUTPUT_ROOT_VAR,
};
use polyglot_lm::Variant;
use polyglot_text::TokenStream;

#[derive(Parser)]
#[command(name = "polyglot", version, about = "Polyglot contextual representations: training and evaluation")]
struct Cli {
    /// Directory that relative output paths are placed under.
    #[arg(long, global = true, env = OUTPUT_ROOT_VAR)]
    output_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train subword skip-gram vectors on a plain-text corpus.
    TrainEmbeddings {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        language: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Map source vectors onto target vectors with a bilingual dictionary.
    Align {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Two words per line: source word, target word.
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long, default_value = "src")]
        source_language: String,
        #[arg(long, default_value = "eng")]
        target_language: String,
        /// Mapped source vectors.
        #[arg(long)]
        out: PathBuf,
        /// Target vectors preprocessed into the shared space.
        #[arg(long)]
        out_target: Option<PathBuf>,
        /// The orthogonal map.
        #[arg(long)]
        out_map: Option<PathBuf>,
    },
    /// Train a character LM and save a checkpoint directory.
    TrainLm {
        /// mono_char, rosita_char or rosita_word.
        #[arg(long)]
        variant: String,
        #[arg(long, default_value = "desk")]
        preset: String,
        /// `language=path`, once for mono_char and twice (target first) otherwise.
        #[arg(long = "corpus", required = true)]
        corpora: Vec<String>,
        /// Aligned word vectors for rosita_word, earlier files winning.
        #[arg(long = "vectors")]
        vectors: Vec<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump per-token layer stacks for the sentences of a file.
    ExtractReprs {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// text (one sentence per line), ud, srl or ner.
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        language: String,
        /// Output stem; `.bin` and `.idx` are added.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment config and write its metrics.
    TrainTask {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the task of the config.
        #[arg(long)]
        task: Option<String>,
    },
    /// Score a prediction file against gold data.
    Evaluate {
        #[arg(long)]
        task: String,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long, default_value = "und")]
        language: String,
    },
    /// Run every experiment of a matrix file.
    RunMatrix {
        #[arg(long)]
        config: PathBuf,
        /// Collected results; relative paths go under the output root.
        #[arg(long, default_value = "matrix.json")]
        out: PathBuf,
    },
    /// Render results (matrix.json or metrics.json files) as a table.
    EmitTable {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic experiment directory with a ready matrix file.
    FixtureData {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "ara")]
        target: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn under(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

fn parse_task(s: &str) -> anyhow::Result<Task> {
    Task::parse(s).with_context(|| format!("unknown task {:?}; expected ud, srl or ner", s))
}

fn parse_variant(s: &str) -> anyhow::Result<Variant> {
    [Variant::MonoChar, Variant::RositaChar, Variant::RositaWord]
        .into_iter()
        .find(|v| v.name() == s)
        .with_context(|| format!("unknown LM variant {:?}", s))
}

fn parse_preset(s: &str) -> anyhow::Result<Preset> {
    match s {
        "paper" => Ok(Preset::Paper),
        "desk" => Ok(Preset::Desk),
        "fixture" => Ok(Preset::Fixture),
        _ => bail!("unknown preset {:?}", s),
    }
}

fn ensure_parent(p: &Path) -> anyhow::Result<()> {
    if let Some(d) = p.parent() {
        std::fs::create_dir_all(d)?;
    }
    Ok(())
}

/// Returns whether every job succeeded.
fn run(cli: Cli) -> anyhow::Result<bool> {
    let root = cli.output_root.unwrap_or_else(output_root);
    match cli.command {
        Command::TrainEmbeddings { corpus, language, out, dim, epochs, seed } => {
            let stream = TokenStream::read(&corpus, &language)?;
            let cfg = SgnsConfig { dim, epochs, seed, ..SgnsConfig::default() };
            let m = train_embeddings(&stream, &cfg)?;
            let out = under(&root, &out);
            ensure_parent(&out)?;
            m.save(&out)?;
            println!("{} vectors of width {} -> {}", m.len(), m.dim(), out.display());
        }
        Command::Align { source, target, dictionary, source_language, target_language, out, out_target, out_map } => {
            let x = EmbeddingMatrix::load(&source)?;
            let y = EmbeddingMatrix::load(&target)?;
            let dict = read_dictionary_file(&dictionary)?;
            let (map, mapped, tgt) = align_spaces(&x, &y, &dict, &source_language, &target_language)?;
            let out = under(&root, &out);
            ensure_parent(&out)?;
            mapped.save(&out)?;
            if let Some(p) = out_target {
                tgt.save(&under(&root, &p))?;
            }
            if let Some(p) = out_map {
                map.save(&under(&root, &p))?;
            }
            println!("{} pairs used, orthogonality error {:e}", map.pairs_used, map.orthogonality_error());
        }
        Command::TrainLm { variant, preset, corpora, vectors, epochs, seed, out } => {
            let variant = parse_variant(&variant)?;
            let mut cfg = lm_preset(parse_preset(&preset)?, variant);
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            cfg.seed = seed;
            let streams = corpora
                .iter()
                .map(|c| {
                    let (lang, path) = c.split_once('=').with_context(|| format!("--corpus {:?} is not language=path", c))?;
                    Ok(TokenStream::read(Path::new(path), lang)?)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let vectors = vectors.iter().map(|p| EmbeddingMatrix::load(p)).collect::<Result<Vec<_>, _>>()?;
            let out = under(&root, &out);
            let report = train_lm_checkpoint(cfg, &streams, &vectors, &out)?;
            let last = report.epochs.last().map_or(f64::NAN, |e| e.loss);
            println!("{} epochs, final loss {:.4} -> {}", report.epochs.len(), last, out.display());
        }
        Command::ExtractReprs { lm, input, format, language, out } => {
            let sentences: Vec<Vec<String>> = match format.as_str() {
                "text" => TokenStream::read(&input, &language)?.sentences().to_vec(),
                other => load_task_set(parse_task(other)?, &input, &language)?.into_iter().map(|s| s.tokens).collect(),
            };
            let out = under(&root, &out);
            ensure_parent(&out)?;
            let n = extract_to_files(&lm, &sentences, &out)?;
            println!("{} sentences -> {}.bin", n, out.display());
        }
        Command::TrainTask { config, task } => {
            let mut c = ExperimentConfig::load(&config)?;
            if let Some(t) = task {
                c.task = parse_task(&t)?;
                c.validate()?;
            }
            let report = run_experiment(&c, &root)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Evaluate { task, gold, predicted, language } => {
            let metrics = score_files(parse_task(&task)?, &gold, &predicted, &language)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Command::RunMatrix { config, out } => {
            let m = MatrixConfig::load(&config)?;
            let result = run_matrix(&m.experiment, &root);
            let out = under(&root, &out);
            ensure_parent(&out)?;
            result.save(&out)?;
            for e in &result.entries {
                match (&e.report, &e.error) {
                    (Some(r), _) => println!("ok    {} {:?}", e.name, r.headline()),
                    (_, Some(err)) => println!("FAIL  {} {}", e.name, err),
                    _ => {}
                }
            }
            println!("{} -> {}", result.entries.len(), out.display());
            return Ok(result.all_succeeded());
        }
        Command::EmitTable { inputs, format, out } => {
            let format = TableFormat::parse(&format).with_context(|| format!("unknown table format {:?}", format))?;
            let mut reports = Vec::new();
            for p in &inputs {
                match MatrixResult::load(p) {
                    Ok(m) => reports.extend(m.reports()),
                    Err(_) => reports.push(MetricsReport::load(p).with_context(|| format!("reading {}", p.display()))?),
                }
            }
            let table = emit_table(&reports, format);
            match out {
                Some(p) => {
                    let p = under(&root, &p);
                    ensure_parent(&p)?;
                    std::fs::write(&p, table)?;
                }
                None => print!("{}", table),
            }
        }
        Command::FixtureData { dir, target, seed } => {
            let opts = FixtureOptions { target, seed, ..FixtureOptions::default() };
            let path = prepare_fixture(&under(&root, &dir), &opts)?;
            println!("{}", path.display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::FAILURE
        }
    }
}
