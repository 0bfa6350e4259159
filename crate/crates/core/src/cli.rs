//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or arguments, 2 internal or I/O
//! failure. Reports go to `--output` or standard output.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::budgeting::{budget_by_clustering, class_centroids, fit_class_ellipsoids, select_budget};
use crate::calib::{ece, entropy_shift, pr_auc, roc_auc, EntropyShift, OodScores};
use crate::conformal::{calibrate, coverage_from_sets, predict_sets, CoverageReport, PredictionSet};
use crate::error::{Error, Result};
use crate::evalrank::{
    default_lambda_grid, evaluate_dataset, lift_mass, lower_probability_budget, parse_lambda_grid,
    rank_models, EvalConfig, EvalReport, Ranking,
};
use crate::frame::{Budget, FocalSet};
use crate::io::{
    format_budget, format_report, read_embeddings, read_labels, read_outcomes, read_predictions,
    read_scores, ConfigDefaults, DatasetFile,
};
use crate::measures::{DivergenceKind, LogBase, MeasureConfig, VertexMode};
use crate::rsloss::{toy_experiment, LossConfig, ToyMetrics, TrainConfig};
use crate::MassFunction;

/// Environment variable that sets the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "RSNN_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rsnn-lab", version, about = "Belief-function uncertainty toolkit for classifiers")]
pub struct Cli {
    /// Worker threads (default: RSNN_LAB_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one model with E = d + λ·NS.
    Eval(EvalArgs),
    /// Rank several models over a λ grid.
    Rank(RankArgs),
    /// Select a focal-set budget from class embeddings.
    #[command(subcommand)]
    Budget(BudgetCommand),
    /// Inductive conformal prediction sets and coverage.
    Conformal(ConformalArgs),
    /// Calibration and OoD separation metrics.
    #[command(subcommand)]
    Calib(CalibCommand),
    /// Train the toy random-set model on synthetic blobs.
    TrainToy(TrainToyArgs),
    /// Check input files without running anything.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    #[arg(long, value_parser = parse_divergence)]
    pub divergence: Option<DivergenceKind>,
    #[arg(long, value_parser = parse_base)]
    pub divergence_base: Option<LogBase>,
    #[arg(long, value_parser = parse_base)]
    pub ns_base: Option<LogBase>,
    #[arg(long, value_parser = parse_base)]
    pub entropy_base: Option<LogBase>,
    #[arg(long, value_parser = parse_vertex_mode)]
    pub vertex_mode: Option<VertexMode>,
    /// Largest focal-set size for lower probabilities when the file declares no budget.
    #[arg(long)]
    pub lower_max_cardinality: Option<usize>,
    /// Evaluate sample clouds through their mean.
    #[arg(long)]
    pub collapse_samples: bool,
}

fn parse_divergence(s: &str) -> std::result::Result<DivergenceKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_base(s: &str) -> std::result::Result<LogBase, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_vertex_mode(s: &str) -> std::result::Result<VertexMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl MeasureArgs {
    /// Flags first, then dataset defaults, then built-in defaults.
    pub fn resolve(&self, file: &ConfigDefaults) -> EvalConfig {
        let d = MeasureConfig::default();
        EvalConfig {
            measures: MeasureConfig {
                divergence: self.divergence.or(file.divergence).unwrap_or(d.divergence),
                divergence_base: self.divergence_base.or(file.divergence_base).unwrap_or(d.divergence_base),
                ns_base: self.ns_base.or(file.ns_base).unwrap_or(d.ns_base),
                entropy_base: self.entropy_base.or(file.entropy_base).unwrap_or(d.entropy_base),
                kl_epsilon: d.kl_epsilon,
                vertex_mode: self.vertex_mode.or(file.vertex_mode).unwrap_or(d.vertex_mode),
            },
            lower_max_cardinality: self.lower_max_cardinality,
            collapse_samples: self.collapse_samples,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    /// Model name recorded in the report.
    #[arg(long, default_value = "model")]
    pub name: String,
    #[command(flatten)]
    pub measures: MeasureArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// NAME=PATH, repeated once per model.
    #[arg(long = "model", required = true, value_parser = parse_model)]
    pub models: Vec<(String, PathBuf)>,
    #[arg(long)]
    pub labels: PathBuf,
    /// start:stop:step, inclusive of stop (default 0.1:1.0:0.1).
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[command(flatten)]
    pub measures: MeasureArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_model(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, got `{s}`")),
    }
}

#[derive(Debug, Subcommand)]
pub enum BudgetCommand {
    /// Top-K overlapping class ellipsoids.
    Ellipsoid(EllipsoidArgs),
    /// Average-linkage clustering of class centroids.
    Cluster(ClusterArgs),
}

#[derive(Debug, Args)]
pub struct EllipsoidArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 200_000)]
    pub mc: usize,
    #[arg(long)]
    pub seed: u64,
    /// Also write the budget in the one-set-per-line format.
    #[arg(long)]
    pub budget_out: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub budget_out: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConformalArgs {
    #[arg(long)]
    pub calibration: PathBuf,
    #[arg(long)]
    pub calibration_labels: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub test_labels: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long)]
    pub seed: u64,
    /// Also write every prediction set, one JSON object per line.
    #[arg(long)]
    pub sets_out: Option<PathBuf>,
    #[command(flatten)]
    pub measures: MeasureArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CalibCommand {
    /// Expected calibration error from `confidence,predicted,true` rows.
    Ece(EceArgs),
    /// Area under the ROC curve, OoD as positives.
    Auroc(OodArgs),
    /// Average precision, OoD as positives.
    Auprc(OodArgs),
    /// iD versus OoD entropy summary.
    EntropyShift(OodArgs),
}

#[derive(Debug, Args)]
pub struct EceArgs {
    #[arg(long)]
    pub outcomes: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OodArgs {
    /// One in-distribution score per line.
    #[arg(long)]
    pub id: PathBuf,
    /// One out-of-distribution score per line.
    #[arg(long)]
    pub ood: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    #[arg(long, default_value_t = 2.0)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub beta: f64,
    /// Translation applied to both coordinates of the OoD copy of the test set.
    #[arg(long, default_value_t = 10.0)]
    pub shift: f64,
    /// Also write the trained weights as JSON.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub predictions: Vec<PathBuf>,
    /// Label files, checked against the frame of the first predictions file.
    #[arg(long)]
    pub labels: Vec<PathBuf>,
    #[arg(long)]
    pub embeddings: Vec<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RankReport {
    models: Vec<String>,
    config: EvalConfig,
    ranking: Ranking,
    reports: Vec<EvalReport>,
}

#[derive(Debug, Serialize)]
struct BudgetEntry {
    set: FocalSet,
    labels: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overlap: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BudgetReport {
    method: &'static str,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_cardinality: Option<usize>,
    frame: Vec<String>,
    budget: Vec<BudgetEntry>,
}

#[derive(Debug, Serialize)]
struct ConformalReport {
    config: EvalConfig,
    #[serde(flatten)]
    coverage: CoverageReport,
}

#[derive(Debug, Serialize)]
struct CalibReport {
    metric: &'static str,
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    id_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ood_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift: Option<EntropyShift>,
}

#[derive(Debug, Serialize)]
struct TrainReport {
    config: TrainConfig,
    classes: usize,
    per_class: usize,
    shift: f64,
    budget: Vec<FocalSet>,
    metrics: ToyMetrics,
}

#[derive(Debug, Serialize)]
struct ValidatedFile {
    path: String,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    records: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    errors: usize,
    files: Vec<ValidatedFile>,
}

fn emit<T: Serialize>(report: &T, output: Option<&Path>) -> Result<()> {
    let text = format_report(report);
    match output {
        Some(path) => write_text(path, &text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                message: e.to_string(),
            })
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn labelled(ds: &DatasetFile, labels_path: &Path) -> Result<Vec<usize>> {
    let labels = read_labels(labels_path, &ds.header.frame)?;
    labels.align(ds.records.iter().map(|r| r.id.as_str()))
}

fn eval_one(name: &str, ds: &DatasetFile, labels_path: &Path, lambda: f64, measures: &MeasureArgs) -> Result<EvalReport> {
    let truth = labelled(ds, labels_path)?;
    let cfg = measures.resolve(&ds.header.defaults);
    let lower = lower_probability_budget(ds.n(), ds.header.budget.as_ref(), &cfg)?;
    evaluate_dataset(name, &ds.records, &truth, lambda, &cfg, &lower)
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let ds = read_predictions(&a.predictions)?;
    let report = eval_one(&a.name, &ds, &a.labels, a.lambda, &a.measures)?;
    emit(&report, a.output.as_deref())
}

fn run_rank(a: &RankArgs) -> Result<()> {
    let grid = match &a.lambda_grid {
        Some(g) => parse_lambda_grid(g)?,
        None => default_lambda_grid(),
    };
    let mut seen = std::collections::HashSet::new();
    let mut base = Vec::with_capacity(a.models.len());
    let mut ids: Option<Vec<String>> = None;
    for (name, path) in &a.models {
        if !seen.insert(name.clone()) {
            return Err(Error::InvalidArgument(format!("model `{name}` given twice")));
        }
        let ds = read_predictions(path)?;
        let these: Vec<String> = ds.records.iter().map(|r| r.id.clone()).collect();
        match &ids {
            None => ids = Some(these),
            Some(first) if *first != these => {
                return Err(Error::InvalidArgument(format!(
                    "model `{name}` was not evaluated on the same instances as the first model"
                )))
            }
            _ => {}
        }
        base.push(eval_one(name, &ds, &a.labels, 0.0, &a.measures)?);
    }
    let mut reports = Vec::with_capacity(base.len() * grid.len());
    for &lambda in &grid {
        for r in &base {
            reports.push(r.at_lambda(lambda)?);
        }
    }
    let ranking = rank_models(&reports, &grid)?;
    let config = base[0].config;
    let report = RankReport {
        models: a.models.iter().map(|m| m.0.clone()).collect(),
        config,
        ranking,
        reports: base,
    };
    emit(&report, a.output.as_deref())
}

fn budget_entries(b: &Budget, frame: &crate::Frame, overlaps: &[(FocalSet, f64)]) -> Vec<BudgetEntry> {
    b.sets()
        .iter()
        .map(|&set| BudgetEntry {
            set,
            labels: frame.decode_set(set).into_iter().map(String::from).collect(),
            overlap: overlaps.iter().find(|o| o.0 == set).map(|o| o.1),
        })
        .collect()
}

fn run_budget(cmd: &BudgetCommand) -> Result<()> {
    match cmd {
        BudgetCommand::Ellipsoid(a) => {
            let emb = read_embeddings(&a.embeddings, None)?;
            let ells = fit_class_ellipsoids(&emb)?;
            let sel = select_budget(&ells, a.k, a.mc, a.seed)?;
            let overlaps: Vec<(FocalSet, f64)> = sel.selected.iter().map(|s| (s.set, s.overlap)).collect();
            if let Some(p) = &a.budget_out {
                write_text(p, &format_budget(&sel.budget))?;
            }
            let report = BudgetReport {
                method: "ellipsoid",
                k: a.k,
                mc: Some(a.mc),
                seed: Some(a.seed),
                max_cardinality: Some(sel.max_cardinality),
                frame: emb.frame.labels().to_vec(),
                budget: budget_entries(&sel.budget, &emb.frame, &overlaps),
            };
            emit(&report, a.output.as_deref())
        }
        BudgetCommand::Cluster(a) => {
            let emb = read_embeddings(&a.embeddings, None)?;
            let budget = budget_by_clustering(&class_centroids(&emb)?, a.k)?;
            if let Some(p) = &a.budget_out {
                write_text(p, &format_budget(&budget))?;
            }
            let report = BudgetReport {
                method: "average-linkage",
                k: a.k,
                mc: None,
                seed: None,
                max_cardinality: None,
                frame: emb.frame.labels().to_vec(),
                budget: budget_entries(&budget, &emb.frame, &[]),
            };
            emit(&report, a.output.as_deref())
        }
    }
}

fn masses_of(ds: &DatasetFile, cfg: &EvalConfig) -> Result<Vec<MassFunction>> {
    use rayon::prelude::*;
    let lower = lower_probability_budget(ds.n(), ds.header.budget.as_ref(), cfg)?;
    ds.records
        .par_iter()
        .map(|r| lift_mass(&r.prediction, cfg, &lower))
        .collect()
}

fn run_conformal(a: &ConformalArgs) -> Result<()> {
    let cal_ds = read_predictions(&a.calibration)?;
    let test_ds = read_predictions(&a.test)?;
    if cal_ds.header.frame != test_ds.header.frame {
        return Err(Error::FrameMismatch {
            expected: cal_ds.n(),
            found: test_ds.n(),
        });
    }
    let cfg = a.measures.resolve(&cal_ds.header.defaults);
    let cal_labels = labelled(&cal_ds, &a.calibration_labels)?;
    let test_labels = labelled(&test_ds, &a.test_labels)?;
    let cal = calibrate(&masses_of(&cal_ds, &cfg)?, &cal_labels)?;
    let ids: Vec<String> = test_ds.records.iter().map(|r| r.id.clone()).collect();
    let sets = predict_sets(&cal, &ids, &masses_of(&test_ds, &cfg)?, a.epsilon, a.seed)?;
    if let Some(p) = &a.sets_out {
        let mut text = String::new();
        for s in &sets {
            text.push_str(&serde_json::to_string::<PredictionSet>(s).expect("sets serialise"));
            text.push('\n');
        }
        write_text(p, &text)?;
    }
    let coverage = coverage_from_sets(&cal, &sets, &test_labels, a.seed)?;
    emit(&ConformalReport { config: cfg, coverage }, a.output.as_deref())
}

fn run_calib(cmd: &CalibCommand) -> Result<()> {
    let blank = CalibReport {
        metric: "",
        method: "",
        bins: None,
        count: None,
        id_count: None,
        ood_count: None,
        value: None,
        shift: None,
    };
    let (report, output) = match cmd {
        CalibCommand::Ece(a) => {
            let outcomes = read_outcomes(&a.outcomes)?;
            let value = ece(&outcomes, a.bins)?;
            let r = CalibReport {
                metric: "ece",
                method: "equal-width bins, right-inclusive",
                bins: Some(a.bins),
                count: Some(outcomes.len()),
                value: Some(value),
                ..blank
            };
            (r, &a.output)
        }
        CalibCommand::Auroc(a) | CalibCommand::Auprc(a) | CalibCommand::EntropyShift(a) => {
            let s = OodScores::new(read_scores(&a.id)?, read_scores(&a.ood)?)?;
            let mut r = CalibReport {
                id_count: Some(s.id.len()),
                ood_count: Some(s.ood.len()),
                ..blank
            };
            match cmd {
                CalibCommand::Auroc(_) => {
                    r.metric = "auroc";
                    r.method = "rank statistic, ties count one half, OoD positive";
                    r.value = Some(roc_auc(&s)?);
                }
                CalibCommand::Auprc(_) => {
                    r.metric = "auprc";
                    r.method = "average precision (step), OoD positive";
                    r.value = Some(pr_auc(&s)?);
                }
                _ => {
                    r.metric = "entropy-shift";
                    r.method = "population statistics, gap = OoD mean - iD mean";
                    r.shift = Some(entropy_shift(&s.id, &s.ood)?);
                }
            }
            (r, &a.output)
        }
    };
    emit(&report, output.as_deref())
}

fn run_train_toy(a: &TrainToyArgs) -> Result<()> {
    if a.classes == 0 || a.per_class == 0 || a.hidden == 0 {
        return Err(Error::InvalidArgument("classes, per-class and hidden must be positive".into()));
    }
    if !(a.learning_rate > 0.0 && a.alpha >= 0.0 && a.beta >= 0.0) {
        return Err(Error::InvalidArgument("learning rate must be positive, alpha and beta non-negative".into()));
    }
    let cfg = TrainConfig {
        hidden: a.hidden,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        loss: LossConfig {
            alpha: a.alpha,
            beta: a.beta,
        },
        seed: a.seed,
    };
    let (model, metrics) = toy_experiment(a.classes, a.per_class, a.shift, &cfg)?;
    if let Some(p) = &a.model_out {
        write_text(p, &format_report(&model))?;
    }
    let budget = Budget::up_to_cardinality(a.classes, 2.min(a.classes))?;
    let report = TrainReport {
        config: cfg,
        classes: a.classes,
        per_class: a.per_class,
        shift: a.shift,
        budget: budget.sets().to_vec(),
        metrics,
    };
    emit(&report, a.output.as_deref())
}

fn run_validate(a: &ValidateArgs) -> Result<bool> {
    if a.predictions.is_empty() && a.embeddings.is_empty() {
        return Err(Error::InvalidArgument("nothing to validate".into()));
    }
    if !a.labels.is_empty() && a.predictions.is_empty() {
        return Err(Error::InvalidArgument("label files need a predictions file for their frame".into()));
    }
    let mut files = Vec::new();
    let mut frame = None;
    for p in &a.predictions {
        let path = p.display().to_string();
        files.push(match read_predictions(p) {
            Ok(ds) => {
                let entry = ValidatedFile {
                    path,
                    kind: "predictions",
                    records: Some(ds.records.len()),
                    classes: Some(ds.n()),
                    error: None,
                };
                frame.get_or_insert(ds.header.frame);
                entry
            }
            Err(e) => ValidatedFile {
                path,
                kind: "predictions",
                records: None,
                classes: None,
                error: Some(e.to_string()),
            },
        });
    }
    for p in &a.labels {
        let path = p.display().to_string();
        let res = match &frame {
            Some(f) => read_labels(p, f).map(|l| l.len()),
            None => Err(Error::InvalidArgument("no valid predictions file to take the frame from".into())),
        };
        files.push(ValidatedFile {
            path,
            kind: "labels",
            records: res.as_ref().ok().copied(),
            classes: None,
            error: res.err().map(|e| e.to_string()),
        });
    }
    for p in &a.embeddings {
        let path = p.display().to_string();
        let res = read_embeddings(p, None);
        files.push(ValidatedFile {
            path,
            kind: "embeddings",
            records: res.as_ref().ok().map(|e| e.points.len()),
            classes: res.as_ref().ok().map(|e| e.frame.len()),
            error: res.err().map(|e| e.to_string()),
        });
    }
    let errors = files.iter().filter(|f| f.error.is_some()).count();
    for f in files.iter().filter(|f| f.error.is_some()) {
        eprintln!("error: {}", f.error.as_deref().unwrap_or_default());
    }
    emit(&ValidateReport { errors, files }, a.output.as_deref())?;
    Ok(errors == 0)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(Error::InvalidArgument("--threads must be at least 1".into()))
        } else {
            Ok(Some(n))
        };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs a parsed command. `Ok(false)` means the command ran but found invalid
/// inputs (only `validate` reports that way).
pub fn run(cli: &Cli) -> Result<bool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cli.threads)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Io {
        path: "<thread pool>".into(),
        message: e.to_string(),
    })?;
    pool.install(|| match &cli.command {
        Command::Eval(a) => run_eval(a).map(|_| true),
        Command::Rank(a) => run_rank(a).map(|_| true),
        Command::Budget(c) => run_budget(c).map(|_| true),
        Command::Conformal(a) => run_conformal(a).map(|_| true),
        Command::Calib(c) => run_calib(c).map(|_| true),
        Command::TrainToy(a) => run_train_toy(a).map(|_| true),
        Command::Validate(a) => run_validate(a),
    })
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
