//! Command-line surface: simulate, train, rank, explain, experiment, eval.
//!
//! Every command writes a `manifest.json` into its output directory recording
//! the parsed arguments, seed, and a hash of the effective configuration, so
//! reruns can be verified byte-for-byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::basis::BasisSpec;
use crate::evaluate::{
    roc_auc, run_experiment_1, run_experiment_2, run_experiment_3, split_indices,
    Experiment1Config, Experiment2Config, Experiment3Config,
};
use crate::explain::{attribute_importance, diagnose_model, interpret_alpha};
use crate::hybrid::{
    select_iterations_cv, train, AlphaParam, LossVariant, ModelArtifact, ModelConfig,
    OptimizerKind, TrainConfig, TrainSet,
};
use crate::ingest::{denormalize_curve, load_csv, SchemaSpec};
use crate::ranking::{normalize_model, rank, PreferenceThresholds};
use crate::synthgen::{gen_alternatives, noisy_scores, truth_for_family, Family, SyntheticSpec};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "nn-mcda",
    about = "Hybrid additive/neural multiple-criteria decision analysis",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its ground truth.
    Simulate(SimulateArgs),
    /// Train a model on a CSV dataset.
    Train(TrainArgs),
    /// Rank alternatives with a trained model.
    Rank(RankArgs),
    /// Emit marginal curves, diagnostics, and importance for a model.
    Explain(ExplainArgs),
    /// Run one of the simulation experiments.
    Experiment(ExperimentArgs),
    /// Evaluate a trained model on a labeled dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Linear,
    #[value(name = "polynomial-3")]
    Polynomial3,
    #[value(name = "polynomial-15")]
    Polynomial15,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Linear => Family::Linear,
            FamilyArg::Polynomial3 => Family::Polynomial3,
            FamilyArg::Polynomial15 => Family::Polynomial15,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adagrad,
    Adam,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(o: OptimizerArg) -> OptimizerKind {
        match o {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adagrad => OptimizerKind::Adagrad,
            OptimizerArg::Adam => OptimizerKind::Adam,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LossArg {
    Mse,
    RegLinear,
    RegBalanced,
}

impl From<LossArg> for LossVariant {
    fn from(l: LossArg) -> LossVariant {
        match l {
            LossArg::Mse => LossVariant::Mse,
            LossArg::RegLinear => LossVariant::MsePlusLinearReg,
            LossArg::RegBalanced => LossVariant::MseBalancedReg,
        }
    }
}

/// `trainable` or `fixed=<value>`.
fn parse_alpha(s: &str) -> std::result::Result<AlphaParam, String> {
    if s == "trainable" {
        return Ok(AlphaParam::Trainable { raw: 0.0 });
    }
    if let Some(v) = s.strip_prefix("fixed=") {
        let value: f64 = v.parse().map_err(|_| format!("invalid alpha value '{v}'"))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(format!("fixed alpha {value} outside [0, 1]"));
        }
        return Ok(AlphaParam::Fixed { value });
    }
    Err(format!("expected 'trainable' or 'fixed=<value>', got '{s}'"))
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Dataset family.
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Number of attributes.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Number of alternatives.
    #[arg(long = "alternatives", default_value_t = 250)]
    pub alternatives: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard-normal noise multiplier.
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input CSV file.
    #[arg(long)]
    pub dataset: PathBuf,
    /// JSON schema describing columns, label, and linear attributes.
    #[arg(long)]
    pub schema: PathBuf,
    /// Polynomial degree of the marginal value functions.
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// 'trainable' or 'fixed=<value>'.
    #[arg(long, value_parser = parse_alpha, default_value = "trainable")]
    pub alpha: AlphaParam,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    /// Training epochs.
    #[arg(long, default_value_t = 60)]
    pub iters: usize,
    /// Select the epoch count by 5-fold cross-validation, capped at --iters.
    #[arg(long, default_value_t = false)]
    pub cv_iters: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training fraction of the train/test split.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, value_enum, default_value_t = LossArg::Mse)]
    pub loss: LossArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Trained model artifact.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV of alternatives: header row, one numeric column per attribute,
    /// values already normalized to [0, 1].
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 0.45)]
    pub eta1: f64,
    #[arg(long, default_value_t = 0.55)]
    pub eta2: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Samples per marginal curve.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment number: 1, 2, or 3.
    #[arg(long)]
    pub id: u8,
    /// Full-scale grid instead of the desk-scale default.
    #[arg(long, default_value_t = false)]
    pub full: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// FNV-1a over a string; stable across runs and platforms.
pub fn config_hash(text: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    config_hash: &'a str,
    arguments: serde_json::Value,
    artifact_version: u32,
}

fn write_manifest(
    out: &Path,
    command: &str,
    seed: u64,
    arguments: serde_json::Value,
) -> Result<String> {
    let hash = config_hash(&serde_json::to_string(&arguments)?);
    let manifest = Manifest {
        command,
        seed,
        config_hash: &hash,
        arguments,
        artifact_version: crate::hybrid::ARTIFACT_VERSION,
    };
    std::fs::create_dir_all(out)?;
    std::fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(hash)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Train(args) => cmd_train(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Explain(args) => cmd_explain(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Eval(args) => cmd_eval(args),
    }
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let spec = SyntheticSpec::new(args.family.into(), args.alternatives, args.n, args.seed)?
        .with_noise_scale(args.noise_scale);
    let truth = truth_for_family(&spec)?;
    let alternatives = gen_alternatives(&spec);
    let scores = noisy_scores(&truth, &alternatives, args.seed);

    write_manifest(
        &args.out,
        "simulate",
        args.seed,
        serde_json::to_value(&spec)?,
    )?;
    let mut csv = String::new();
    for j in 0..args.n {
        write!(csv, "x{j},").unwrap();
    }
    csv.push_str("score\n");
    for (row, score) in alternatives.iter().zip(&scores) {
        for v in row {
            write!(csv, "{v},").unwrap();
        }
        writeln!(csv, "{score}").unwrap();
    }
    std::fs::write(args.out.join("alternatives.csv"), csv)?;
    std::fs::write(
        args.out.join("truth.json"),
        serde_json::to_string_pretty(&truth)?,
    )?;
    println!(
        "wrote {} alternatives with {} attributes to {}",
        args.alternatives,
        args.n,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_train(args: TrainArgs) -> Result<()> {
    let schema = SchemaSpec::from_json_file(&args.schema)?;
    let dataset = load_csv(&args.dataset, &schema)?;
    let n_attrs = dataset.schema.attribute_names.len();
    let basis = BasisSpec::uniform(n_attrs, args.degree)?;
    let data = TrainSet::from_raw(&dataset.rows, dataset.labels.clone(), &basis)?;
    let (train_idx, test_idx) = split_indices(data.len(), args.split, args.seed)?;
    let train_set = data.subset(&train_idx);
    let test_set = data.subset(&test_idx);

    let mut model_config = ModelConfig::uniform(n_attrs, args.degree);
    model_config.linear_attrs = dataset.schema.linear_attrs.clone();
    model_config.alpha = args.alpha;
    let mut train_config = TrainConfig {
        optimizer: args.optimizer.into(),
        learning_rate: args.lr,
        iterations: args.iters,
        seed: args.seed,
        loss: args.loss.into(),
        ..TrainConfig::default()
    };

    let hash = write_manifest(
        &args.out,
        "train",
        args.seed,
        serde_json::json!({
            "dataset": args.dataset,
            "schema": args.schema,
            "model": model_config,
            "train": train_config,
            "split": args.split,
            "cv_iters": args.cv_iters,
        }),
    )?;

    if args.cv_iters {
        let selected = select_iterations_cv(&model_config, &train_set, &train_config)?;
        println!("cross-validation selected {selected} iterations");
        train_config.iterations = selected;
    }
    let (model, report) = train(&model_config, &train_set, &train_config)?;

    let predictions: Vec<f64> = test_set
        .features
        .iter()
        .map(|f| model.predict_proba_expanded(f))
        .collect::<Result<_>>()?;
    let test_auc = roc_auc(&predictions, &test_set.labels).map(|r| r.auc);

    let mut artifact = ModelArtifact::new(model, dataset.schema.attribute_names.clone(), hash);
    artifact.bounds = Some(dataset.schema.bounds.clone());
    artifact.save(&args.out.join("model.json"))?;
    let report_json = serde_json::json!({
        "final_alpha": report.final_alpha,
        "loss_trace": report.loss_trace,
        "duration_secs": report.duration_secs,
        "seed": report.seed,
        "iterations": train_config.iterations,
        "train_rows": train_set.len(),
        "test_rows": test_set.len(),
        "dropped_rows": dataset.dropped_rows,
        "test_auc": test_auc.as_ref().ok(),
    });
    std::fs::write(
        args.out.join("report.json"),
        serde_json::to_string_pretty(&report_json)?,
    )?;
    match test_auc {
        Ok(auc) => println!(
            "final alpha {:.4}, test AUC {:.4} ({} test rows)",
            report.final_alpha,
            auc,
            test_set.len()
        ),
        Err(e) => println!(
            "final alpha {:.4}; test AUC unavailable: {e}",
            report.final_alpha
        ),
    }
    Ok(())
}

/// Plain numeric CSV with a header: one row per alternative.
fn load_plain_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(Error::from)?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(Error::from)?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.trim().parse::<f64>().map_err(|_| Error::Ingest {
                    row: line + 2,
                    column: format!("{c}"),
                    message: format!("unparseable numeric '{cell}'"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn cmd_rank(args: RankArgs) -> Result<()> {
    let artifact = ModelArtifact::load(&args.model)?;
    let thresholds = PreferenceThresholds::new(args.eta1, args.eta2)?;
    let alternatives = load_plain_matrix(&args.dataset)?;
    if alternatives.is_empty() {
        return Err(Error::config("no alternatives to rank"));
    }
    let normalized = normalize_model(&artifact.model)?;
    let ranked = rank(&normalized, &alternatives)?;

    write_manifest(
        &args.out,
        "rank",
        0,
        serde_json::json!({
            "model": args.model,
            "dataset": args.dataset,
            "eta1": thresholds.eta1,
            "eta2": thresholds.eta2,
        }),
    )?;
    let mut csv = String::from("rank,alternative,score,normalized_score\n");
    for r in &ranked {
        writeln!(csv, "{},{},{},{}", r.rank, r.index, r.score, r.normalized_score).unwrap();
    }
    std::fs::write(args.out.join("ranked.csv"), csv)?;
    println!("ranked {} alternatives", ranked.len());
    Ok(())
}

pub fn cmd_explain(args: ExplainArgs) -> Result<()> {
    let artifact = ModelArtifact::load(&args.model)?;
    let model = &artifact.model;
    write_manifest(
        &args.out,
        "explain",
        0,
        serde_json::json!({ "model": args.model, "grid": args.grid }),
    )?;

    let analyses = diagnose_model(model, args.grid)?;
    let mut diagnostics = Vec::new();
    for (curve, diag) in &analyses {
        let name = artifact
            .attribute_names
            .get(curve.attr)
            .cloned()
            .unwrap_or_else(|| format!("attr{}", curve.attr));
        let samples = match artifact.bounds.as_ref().and_then(|b| b.get(curve.attr)) {
            Some(&bounds) => denormalize_curve(&curve.samples, bounds),
            None => curve.samples.clone(),
        };
        let mut csv = String::from("x,value\n");
        for (x, y) in &samples {
            writeln!(csv, "{x},{y}").unwrap();
        }
        let file_name = format!("curve_{}.csv", name.replace(['/', '=', '.'], "_"));
        std::fs::write(args.out.join(file_name), csv)?;
        diagnostics.push(serde_json::json!({
            "attribute": name,
            "zero_crossings": diag.zero_crossings,
            "monotonicity_inflexions": diag.monotonicity_inflexions,
            "concavity_changes": diag.concavity_changes,
            "near_zero": diag.near_zero,
        }));
    }
    std::fs::write(
        args.out.join("diagnostics.json"),
        serde_json::to_string_pretty(&diagnostics)?,
    )?;

    let importance = attribute_importance(model)?;
    let mut csv = String::from("attribute,weight,normalized_weight,rank\n");
    for row in &importance {
        let name = artifact
            .attribute_names
            .get(row.attr)
            .cloned()
            .unwrap_or_else(|| format!("attr{}", row.attr));
        writeln!(
            csv,
            "{name},{},{},{}",
            row.weight, row.normalized_weight, row.rank
        )
        .unwrap();
    }
    std::fs::write(args.out.join("importance.csv"), csv)?;

    let alpha = model.alpha.value();
    let recommendation = interpret_alpha(alpha)?;
    println!("alpha {alpha:.4}: {}", serde_json::to_string(&recommendation)?.trim_matches('"'));
    Ok(())
}

pub fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    write_manifest(
        &args.out,
        "experiment",
        args.seed,
        serde_json::json!({ "id": args.id, "full": args.full, "seed": args.seed }),
    )?;
    match args.id {
        1 => {
            let config = if args.full {
                Experiment1Config::full(args.seed)
            } else {
                Experiment1Config::desk(args.seed)
            };
            let report = run_experiment_1(&config);
            std::fs::write(args.out.join("experiment1.csv"), report.to_csv())?;
            std::fs::write(
                args.out.join("experiment1.json"),
                serde_json::to_string_pretty(&report)?,
            )?;
            println!("experiment 1: {} cells", report.cells.len());
        }
        2 => {
            let config = if args.full {
                Experiment2Config::full(args.seed)
            } else {
                Experiment2Config::desk(args.seed)
            };
            let report = run_experiment_2(&config);
            std::fs::write(args.out.join("experiment2.csv"), report.to_csv())?;
            std::fs::write(
                args.out.join("experiment2.json"),
                serde_json::to_string_pretty(&report)?,
            )?;
            println!("experiment 2: {} cells", report.cells.len());
        }
        3 => {
            for kind in 1..=4u8 {
                let config = Experiment3Config::desk(kind, args.seed);
                let report = run_experiment_3(&config)?;
                std::fs::write(
                    args.out.join(format!("experiment3_kind{kind}.json")),
                    serde_json::to_string_pretty(&report)?,
                )?;
                // curve pairs for the first run, plot-ready
                if let Some(fit) = report.runs.first() {
                    let mut csv = String::from("attr,x,fitted,truth\n");
                    for cf in &fit.hybrid {
                        for ((x, fy), (_, ty)) in cf.fitted.iter().zip(&cf.truth) {
                            writeln!(csv, "{},{x},{fy},{ty}", cf.attr).unwrap();
                        }
                    }
                    std::fs::write(args.out.join(format!("experiment3_kind{kind}_curves.csv")), csv)?;
                }
                println!(
                    "experiment 3 kind {kind}: {} runs, {} failures",
                    report.runs.len(),
                    report.failures.len()
                );
            }
        }
        other => return Err(Error::config(format!("unknown experiment id {other}"))),
    }
    Ok(())
}

pub fn cmd_eval(args: EvalArgs) -> Result<()> {
    let artifact = ModelArtifact::load(&args.model)?;
    let schema = SchemaSpec::from_json_file(&args.schema)?;
    let dataset = load_csv(&args.dataset, &schema)?;
    let basis = &artifact.model.all_spec;
    if dataset.schema.attribute_names.len() != basis.n_attrs() {
        return Err(Error::schema(format!(
            "dataset has {} encoded attributes, model expects {}",
            dataset.schema.attribute_names.len(),
            basis.n_attrs()
        )));
    }
    let data = TrainSet::from_raw(&dataset.rows, dataset.labels.clone(), basis)?;
    let predictions: Vec<f64> = data
        .features
        .iter()
        .map(|f| artifact.model.predict_proba_expanded(f))
        .collect::<Result<_>>()?;
    let roc = roc_auc(&predictions, &data.labels)?;

    write_manifest(
        &args.out,
        "eval",
        0,
        serde_json::json!({ "model": args.model, "dataset": args.dataset }),
    )?;
    std::fs::write(
        args.out.join("eval.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "auc": roc.auc,
            "n_pos": roc.n_pos,
            "n_neg": roc.n_neg,
            "rows": data.len(),
        }))?,
    )?;
    let mut csv = String::from("fpr,tpr\n");
    for (fpr, tpr) in &roc.curve {
        writeln!(csv, "{fpr},{tpr}").unwrap();
    }
    std::fs::write(args.out.join("roc.csv"), csv)?;
    println!("AUC {:.4} over {} rows", roc.auc, data.len());
    Ok(())
}
