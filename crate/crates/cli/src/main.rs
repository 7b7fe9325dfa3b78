//! Pipeline driver.
//!
//! Each subcommand wires one stage of the measurement pipeline, prints
//! JSON progress lines to stderr, writes data only to declared output
//! files, and records a manifest (resolved parameters plus input
//! digests) alongside its primary output. Outputs are written to a
//! temporary file and renamed, so interrupted runs never leave
//! truncated files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::Digest;

use kspan_core::analysis::{
    bootstrap_curve, fit_model, moderation_curves, project_2d, write_curve_csv,
    write_projection_csv, AnalysisError, CurveParams, ModelId, ModelSpec,
};
use kspan_core::corpus::{load_corpus, write_corpus, CorpusError};
use kspan_core::embedding::{
    build_vocabulary, train_embeddings_with_progress, EmbeddingConfig, EmbeddingError,
    EmbeddingMatrix, TrainMode,
};
use kspan_core::knowledge_tree::{load_tree, KnowledgeTree, LevelRule, TreeError};
use kspan_core::metrics::{
    compute_metrics, read_metrics_csv, write_metrics_csv, MetricsConfig, MetricsError,
};
use kspan_core::synth::{generate_corpus, generate_tree, tree_edges, write_truth_csv, SynthConfig, SynthError};

#[derive(Parser)]
#[command(name = "kspan", version, about = "Knowledge-spanning measurement pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sequential,
    Parallel,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Shortest,
    Longest,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus file and write a load report.
    Ingest {
        /// Line-delimited question records.
        #[arg(long)]
        input: PathBuf,
        /// Records created after this date are skipped (YYYY-MM-DD).
        #[arg(long)]
        cutoff: NaiveDate,
        /// Where to write the JSON load report.
        #[arg(long)]
        report: PathBuf,
    },
    /// Train category embeddings from question-category co-occurrence.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        cutoff: NaiveDate,
        /// Embedding dimension.
        #[arg(long, default_value_t = 50)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        /// Negative samples per observed pair.
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        /// Drop categories mentioned fewer times than this.
        #[arg(long, default_value_t = 5)]
        min_count: u64,
        /// Initial learning rate.
        #[arg(long, default_value_t = 0.025)]
        lr: f64,
        /// Co-occurrence window (category lists are short; the default
        /// covers whole lists).
        #[arg(long, default_value_t = 8)]
        window: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Sequential)]
        mode: ModeArg,
        /// Worker threads in parallel mode (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute hierarchy levels from a parent,child edge list.
    Tree {
        #[arg(long)]
        edges: PathBuf,
        /// Name of the root category.
        #[arg(long)]
        root: String,
        #[arg(long)]
        levels_out: PathBuf,
        /// Level rule when a category has several parents.
        #[arg(long, value_enum, default_value_t = RuleArg::Shortest)]
        rule: RuleArg,
    },
    /// Compute per-question metrics from a corpus, embeddings, and levels.
    Measure {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        cutoff: NaiveDate,
        #[arg(long)]
        embeddings: PathBuf,
        /// category,level table produced by `tree`.
        #[arg(long)]
        tree_levels: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an appeal regression model on a metrics table.
    Fit {
        #[arg(long)]
        metrics: PathBuf,
        /// 1 = spanning only, 2 = + controls, 3 = + hierarchy interactions.
        #[arg(long)]
        model: ModelId,
        /// Z-score predictors and outcome before fitting.
        #[arg(long)]
        standardize: bool,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Binned appeal-versus-spanning curve with bootstrap bands.
    Curve {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long, default_value_t = 30)]
        bins: usize,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        /// Bins with fewer rows than this are dropped.
        #[arg(long, default_value_t = 30)]
        min_bin_count: usize,
        #[arg(long)]
        seed: u64,
        /// Fit one curve per listed hierarchy level (comma separated);
        /// each stratum gets its own output file.
        #[arg(long, value_delimiter = ',')]
        by_hierarchy: Option<Vec<u32>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project category vectors onto their top two principal components.
    Project {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with planted ground truth.
    Synth {
        /// key = value config file; `seed` is required.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        corpus_out: PathBuf,
        /// Edge list consumable by `tree --edges`.
        #[arg(long)]
        tree_out: PathBuf,
        /// Per-question latent truth table.
        #[arg(long)]
        truth_out: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Corpus(CorpusError),
    Tree(TreeError),
    Embedding(EmbeddingError),
    Metrics(MetricsError),
    Analysis(AnalysisError),
    Synth(SynthError),
    Io { path: String, source: std::io::Error },
    Data(String),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Corpus(e) => e.fmt(f),
            CliError::Tree(e) => e.fmt(f),
            CliError::Embedding(e) => e.fmt(f),
            CliError::Metrics(e) => e.fmt(f),
            CliError::Analysis(e) => e.fmt(f),
            CliError::Synth(e) => e.fmt(f),
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Data(msg) | CliError::Usage(msg) => f.write_str(msg),
        }
    }
}

macro_rules! from_error {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::$variant(e)
            }
        }
    };
}
from_error!(Corpus, CorpusError);
from_error!(Tree, TreeError);
from_error!(Embedding, EmbeddingError);
from_error!(Metrics, MetricsError);
from_error!(Analysis, AnalysisError);
from_error!(Synth, SynthError);

impl CliError {
    /// 2 = usage, 3 = data or validation, 4 = numerical failure.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Embedding(EmbeddingError::NonFinite { .. })
            | CliError::Embedding(EmbeddingError::ZeroNorm)
            | CliError::Analysis(
                AnalysisError::RankDeficient { .. }
                | AnalysisError::Underdetermined { .. }
                | AnalysisError::NonFiniteInput(_)
                | AnalysisError::ConstantColumn { .. }
                | AnalysisError::ConstantOutcome,
            ) => 4,
            _ => 3,
        }
    }
}

/// One machine-parseable progress line on the diagnostic stream.
fn progress(value: serde_json::Value) {
    eprintln!("{value}");
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

/// What reproduces a run: the resolved configuration and input digests.
/// Deliberately carries no timestamps, so identical runs write
/// identical manifests.
#[derive(Serialize)]
struct RunManifest {
    subcommand: &'static str,
    version: &'static str,
    seed: Option<u64>,
    parameters: BTreeMap<String, serde_json::Value>,
    inputs: Vec<InputDigest>,
}

impl RunManifest {
    fn new(subcommand: &'static str, seed: Option<u64>) -> Self {
        RunManifest {
            subcommand,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
        }
    }

    fn param(mut self, key: &str, value: impl Serialize) -> Self {
        let value = serde_json::to_value(value).expect("parameter serializes");
        self.parameters.insert(key.to_string(), value);
        self
    }

    fn input(mut self, path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(sha2::Sha256::digest(&bytes)),
        });
        Ok(self)
    }

    /// Writes `<primary_output>.manifest.json`.
    fn write(&self, primary_output: &Path) -> Result<(), CliError> {
        let path = PathBuf::from(format!("{}.manifest.json", primary_output.display()));
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        progress(json!({"event": "manifest", "path": path.display().to_string()}));
        Ok(())
    }
}

/// Writes via a temporary file in the target directory plus a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |source: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn open_reader(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            progress(json!({"event": "error", "message": err.to_string()}));
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest {
            input,
            cutoff,
            report,
        } => cmd_ingest(&input, cutoff, &report),
        Command::Train {
            input,
            cutoff,
            dim,
            epochs,
            negatives,
            min_count,
            lr,
            window,
            seed,
            mode,
            workers,
            out,
        } => cmd_train(
            &input, cutoff, dim, epochs, negatives, min_count, lr, window, seed, mode, workers,
            &out,
        ),
        Command::Tree {
            edges,
            root,
            levels_out,
            rule,
        } => cmd_tree(&edges, &root, &levels_out, rule),
        Command::Measure {
            corpus,
            cutoff,
            embeddings,
            tree_levels,
            out,
        } => cmd_measure(&corpus, cutoff, &embeddings, &tree_levels, &out),
        Command::Fit {
            metrics,
            model,
            standardize,
            out,
        } => cmd_fit(&metrics, model, standardize, out.as_deref()),
        Command::Curve {
            metrics,
            bins,
            resamples,
            min_bin_count,
            seed,
            by_hierarchy,
            out,
        } => cmd_curve(&metrics, bins, resamples, min_bin_count, seed, by_hierarchy, &out),
        Command::Project { embeddings, out } => cmd_project(&embeddings, &out),
        Command::Synth {
            config,
            corpus_out,
            tree_out,
            truth_out,
        } => cmd_synth(&config, &corpus_out, &tree_out, &truth_out),
    }
}

fn cmd_ingest(input: &Path, cutoff: NaiveDate, report_path: &Path) -> Result<(), CliError> {
    let (corpus, summary) = load_corpus(input, cutoff)?;
    let stats = corpus.stats()?;
    progress(json!({
        "event": "ingest",
        "lines_read": summary.lines_read,
        "loaded": summary.loaded,
        "skipped": summary.skipped_count(),
    }));

    let report = json!({
        "lines_read": summary.lines_read,
        "loaded": summary.loaded,
        "skipped": summary
            .skipped
            .iter()
            .map(|(line, issue)| json!({"line": line, "reason": issue.to_string()}))
            .collect::<Vec<_>>(),
        "category_dedup": summary
            .category_dedup
            .iter()
            .map(|(line, dropped)| json!({"line": line, "duplicates_dropped": dropped}))
            .collect::<Vec<_>>(),
        "stats": {
            "records": stats.records,
            "multi_category_share": stats.multi_category_share,
            "category_count_histogram": stats.category_count_histogram,
        },
    });
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    write_atomic(report_path, &bytes)?;

    RunManifest::new("ingest", None)
        .param("cutoff", cutoff.to_string())
        .param("report", report_path.display().to_string())
        .input(input)?
        .write(report_path)
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    input: &Path,
    cutoff: NaiveDate,
    dim: usize,
    epochs: usize,
    negatives: usize,
    min_count: u64,
    lr: f64,
    window: usize,
    seed: u64,
    mode: ModeArg,
    workers: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    let mode = match (mode, workers) {
        (ModeArg::Sequential, None) => TrainMode::Sequential,
        (ModeArg::Sequential, Some(_)) => {
            return Err(CliError::Usage(
                "--workers only applies to --mode parallel".into(),
            ))
        }
        (ModeArg::Parallel, workers) => TrainMode::Parallel {
            workers: workers.unwrap_or(0),
        },
    };

    let (corpus, summary) = load_corpus(input, cutoff)?;
    progress(json!({
        "event": "load",
        "records": corpus.len(),
        "skipped": summary.skipped_count(),
    }));
    let vocab = build_vocabulary(&corpus, min_count)?;
    progress(json!({"event": "vocabulary", "categories": vocab.len()}));

    let config = EmbeddingConfig {
        dimension: dim,
        epochs,
        negatives,
        learning_rate: lr,
        window,
        min_count,
        seed,
        mode,
    };
    let matrix = train_embeddings_with_progress(&corpus, &vocab, &config, |stats| {
        progress(json!({
            "event": "epoch",
            "epoch": stats.epoch,
            "epochs": stats.epochs,
            "pairs_done": stats.pairs_done,
        }));
    })?;

    let mut bytes = Vec::new();
    matrix.export(&mut bytes)?;
    write_atomic(out, &bytes)?;
    progress(json!({
        "event": "write",
        "path": out.display().to_string(),
        "categories": matrix.len(),
        "dimension": matrix.dimension(),
    }));

    let mode_name = match config.mode {
        TrainMode::Sequential => "sequential".to_string(),
        TrainMode::Parallel { workers } => format!("parallel:{workers}"),
    };
    RunManifest::new("train", Some(seed))
        .param("cutoff", cutoff.to_string())
        .param("dim", dim)
        .param("epochs", epochs)
        .param("negatives", negatives)
        .param("min_count", min_count)
        .param("lr", lr)
        .param("window", window)
        .param("mode", mode_name)
        .param("out", out.display().to_string())
        .input(input)?
        .write(out)
}

fn cmd_tree(edges: &Path, root: &str, levels_out: &Path, rule: RuleArg) -> Result<(), CliError> {
    let rule = match rule {
        RuleArg::Shortest => LevelRule::Shortest,
        RuleArg::Longest => LevelRule::Longest,
    };
    let (tree, summary) = load_tree(edges, root, rule)?;
    progress(json!({
        "event": "tree",
        "nodes": summary.nodes,
        "edges": summary.edges,
        "duplicate_edges": summary.duplicate_edges,
        "unreachable": summary.unreachable.len(),
    }));

    let mut bytes = Vec::new();
    tree.write_levels_csv(&mut bytes)
        .map_err(|e| CliError::Data(format!("cannot encode levels: {e}")))?;
    write_atomic(levels_out, &bytes)?;
    progress(json!({"event": "write", "path": levels_out.display().to_string()}));

    RunManifest::new("tree", None)
        .param("root", root)
        .param("rule", match rule {
            LevelRule::Shortest => "shortest",
            LevelRule::Longest => "longest",
        })
        .param("levels_out", levels_out.display().to_string())
        .input(edges)?
        .write(levels_out)
}

/// Rebuilds a level-lookup tree from a `category,level` table, taking
/// the root to be the single level-0 row.
fn read_tree_levels(path: &Path) -> Result<KnowledgeTree, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut root: Option<String> = None;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("bad levels table: {e}")))?;
        if record.get(1) == Some("0") {
            if let Some(first) = &root {
                return Err(CliError::Data(format!(
                    "levels table has multiple level-0 rows ({first:?} and {:?})",
                    &record[0]
                )));
            }
            root = Some(record[0].to_string());
        }
    }
    let root = root.ok_or_else(|| CliError::Data("levels table has no level-0 root row".into()))?;
    Ok(KnowledgeTree::read_levels_csv(text.as_bytes(), &root)?)
}

fn cmd_measure(
    corpus_path: &Path,
    cutoff: NaiveDate,
    embeddings: &Path,
    tree_levels: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let (corpus, summary) = load_corpus(corpus_path, cutoff)?;
    progress(json!({
        "event": "load",
        "records": corpus.len(),
        "skipped": summary.skipped_count(),
    }));
    let matrix = EmbeddingMatrix::import(open_reader(embeddings)?)?;
    let tree = read_tree_levels(tree_levels)?;

    let (rows, meta) = compute_metrics(&corpus, &matrix, &tree, &MetricsConfig::default())?;
    progress(json!({
        "event": "measure",
        "rows": rows.len(),
        "missing_ks_log": meta.missing_ks_log,
        "missing_hierarchy": meta.missing_hierarchy,
    }));

    let mut bytes = Vec::new();
    write_metrics_csv(&rows, &mut bytes)?;
    write_atomic(out, &bytes)?;
    progress(json!({"event": "write", "path": out.display().to_string()}));

    let meta_path = PathBuf::from(format!("{}.meta.json", out.display()));
    let mut meta_bytes = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
    meta_bytes.push(b'\n');
    write_atomic(&meta_path, &meta_bytes)?;
    progress(json!({"event": "write", "path": meta_path.display().to_string()}));

    RunManifest::new("measure", None)
        .param("cutoff", cutoff.to_string())
        .param("out", out.display().to_string())
        .input(corpus_path)?
        .input(embeddings)?
        .input(tree_levels)?
        .write(out)
}

fn cmd_fit(
    metrics: &Path,
    model: ModelId,
    standardize: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let rows = read_metrics_csv(open_reader(metrics)?)?;
    let spec = ModelSpec {
        id: model,
        standardize,
    };
    let report = fit_model(&rows, &spec)?;
    progress(json!({
        "event": "fit",
        "n_used": report.n_used,
        "adjusted_r_squared": report.adjusted_r_squared,
    }));

    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    let manifest = RunManifest::new("fit", None)
        .param("model", format!("{:?}", spec.id).to_lowercase())
        .param("standardize", standardize)
        .input(metrics)?;
    match out {
        Some(path) => {
            write_atomic(path, &bytes)?;
            progress(json!({"event": "write", "path": path.display().to_string()}));
            manifest.param("out", path.display().to_string()).write(path)
        }
        None => {
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|source| CliError::Io {
                    path: "stdout".into(),
                    source,
                })?;
            manifest.write(Path::new("fit"))
        }
    }
}

/// Output path for one stratum: `curves.csv` plus level 3 becomes
/// `curves.h3.csv`.
fn stratum_path(out: &Path, level: u32) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => out.with_extension(format!("h{level}.{ext}")),
        None => PathBuf::from(format!("{}.h{level}", out.display())),
    }
}

fn cmd_curve(
    metrics: &Path,
    bins: usize,
    resamples: usize,
    min_bin_count: usize,
    seed: u64,
    by_hierarchy: Option<Vec<u32>>,
    out: &Path,
) -> Result<(), CliError> {
    let rows = read_metrics_csv(open_reader(metrics)?)?;
    let params = CurveParams {
        n_bins: bins,
        n_resamples: resamples,
        min_bin_count,
        seed,
    };

    let mut manifest = RunManifest::new("curve", Some(seed))
        .param("bins", bins)
        .param("resamples", resamples)
        .param("min_bin_count", min_bin_count)
        .param("out", out.display().to_string())
        .input(metrics)?;

    match by_hierarchy {
        None => {
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter_map(|m| m.ks_log.map(|ks_log| (ks_log, m.appeal)))
                .unzip();
            let curve = bootstrap_curve(&x, &y, &params)?;
            progress(json!({
                "event": "curve",
                "rows": x.len(),
                "bins": curve.bins.len(),
                "dropped_bins": curve.dropped_bins,
            }));
            let mut bytes = Vec::new();
            write_curve_csv(&curve, &mut bytes)?;
            write_atomic(out, &bytes)?;
            progress(json!({"event": "write", "path": out.display().to_string()}));
        }
        Some(levels) => {
            let result = moderation_curves(&rows, &levels, &params)?;
            for skip in &result.skipped {
                progress(json!({
                    "event": "stratum_skipped",
                    "level": skip.level,
                    "observations": skip.observations,
                }));
            }
            let mut files = Vec::new();
            for stratum in &result.curves {
                let path = stratum_path(out, stratum.level);
                let mut bytes = Vec::new();
                write_curve_csv(&stratum.curve, &mut bytes)?;
                write_atomic(&path, &bytes)?;
                progress(json!({
                    "event": "write",
                    "path": path.display().to_string(),
                    "level": stratum.level,
                    "rows": stratum.observations,
                    "bins": stratum.curve.bins.len(),
                }));
                files.push(path.display().to_string());
            }
            manifest = manifest
                .param("by_hierarchy", &levels)
                .param("stratum_files", &files);
        }
    }
    manifest.write(out)
}

fn cmd_project(embeddings: &Path, out: &Path) -> Result<(), CliError> {
    let matrix = EmbeddingMatrix::import(open_reader(embeddings)?)?;
    let projection = project_2d(&matrix)?;
    if projection.degenerate {
        progress(json!({
            "event": "warning",
            "message": "input has rank below 2; second component is degenerate",
        }));
    }
    progress(json!({
        "event": "project",
        "categories": projection.categories.len(),
        "variance_explained": projection.variance_explained,
    }));

    let mut bytes = Vec::new();
    write_projection_csv(&projection, &mut bytes)?;
    write_atomic(out, &bytes)?;
    progress(json!({"event": "write", "path": out.display().to_string()}));

    RunManifest::new("project", None)
        .param("out", out.display().to_string())
        .input(embeddings)?
        .write(out)
}

fn cmd_synth(
    config_path: &Path,
    corpus_out: &Path,
    tree_out: &Path,
    truth_out: &Path,
) -> Result<(), CliError> {
    let config = SynthConfig::load(config_path)?;
    let tree = generate_tree(&config)?;
    let (corpus, truth) = generate_corpus(&config, &tree)?;
    progress(json!({
        "event": "synth",
        "questions": corpus.len(),
        "categories": tree.node_count() - 1,
    }));

    let mut edge_bytes = Vec::new();
    for (parent, child) in tree_edges(&config)? {
        edge_bytes.extend_from_slice(format!("{parent},{child}\n").as_bytes());
    }
    write_atomic(tree_out, &edge_bytes)?;
    progress(json!({"event": "write", "path": tree_out.display().to_string()}));

    let dir = match corpus_out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|source| CliError::Io {
        path: corpus_out.display().to_string(),
        source,
    })?;
    let tmp_path = tmp.into_temp_path();
    write_corpus(&corpus, &tmp_path)?;
    tmp_path
        .persist(corpus_out)
        .map_err(|e| CliError::Io {
            path: corpus_out.display().to_string(),
            source: e.error,
        })?;
    progress(json!({"event": "write", "path": corpus_out.display().to_string()}));

    let mut truth_bytes = Vec::new();
    write_truth_csv(&truth, &mut truth_bytes)?;
    write_atomic(truth_out, &truth_bytes)?;
    progress(json!({"event": "write", "path": truth_out.display().to_string()}));

    RunManifest::new("synth", Some(config.seed))
        .param("config", serde_json::to_value(config).expect("config serializes"))
        .param("corpus_out", corpus_out.display().to_string())
        .param("tree_out", tree_out.display().to_string())
        .param("truth_out", truth_out.display().to_string())
        .input(config_path)?
        .write(corpus_out)
}
