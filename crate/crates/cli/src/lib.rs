//! Subcommands of the `nlembed` tool. Each one reads its inputs, writes its
//! outputs and a [`RunManifest`] beside the primary output.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use nlembed::data::{generate_pairs, synth_blobs, synth_nonlinear, FeatureMatrix, Labels, PairSet};
use nlembed::eval::{eval_pipeline, undersized_classes, EvalReport, RetrievalConfig, RetrievalDistance};
use nlembed::io::{load_features, load_labels, load_pairs, save_features, save_labels, save_pairs};
use nlembed::model::{load_model, save_model};
use nlembed::pca::fit_pca;
use nlembed::train::{grad_check, train_kml, train_linear, train_nml, TrainConfig, TrainReport};
use nlembed::{KernelId, Model};

mod manifest;

pub use manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] nlembed::Error),
    #[error("gradient check failed: max relative error {error:e} >= threshold {threshold:e}")]
    CheckFailed { error: f64, threshold: f64 },
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Output(String),
}

impl CliError {
    /// 1 for a failed check, 3 for numeric breakdown, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed { .. } => 1,
            CliError::Lib(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nlembed",
    version,
    about = "Learn and evaluate low-dimensional embeddings from pair constraints"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labelled dataset.
    Synth(SynthArgs),
    /// Sample similar/dissimilar pairs from labels.
    Pairs(PairsArgs),
    /// Train an embedding model.
    Train(TrainArgs),
    /// Embed every row of a feature file with a trained model.
    Embed(EmbedArgs),
    /// Leave-one-out category retrieval.
    Eval(EvalArgs),
    /// Train and evaluate over a margin × bias grid.
    Sweep(SweepArgs),
    /// Compare analytic and numeric subgradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    Blobs,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nml,
    Ml,
    Kml,
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Chi2,
    Linear,
}

impl From<KernelArg> for KernelId {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Chi2 => KernelId::Chi2,
            KernelArg::Linear => KernelId::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalize {
    L1,
    L2,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    L2,
    L1,
    Chi2,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "blobs")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    #[arg(long, default_value_t = 32)]
    pub dims: usize,
    /// Prototype separation (blobs only).
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_features: PathBuf,
    #[arg(long)]
    pub out_labels: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PairsArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 500_000)]
    pub budget: usize,
    #[arg(long, default_value_t = nlembed::data::DEFAULT_POS_FRACTION)]
    pub pos_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Required for every model except pca.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "nml")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, value_enum, default_value = "chi2")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 1_000_000)]
    pub iters: u64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Defaults to 0.02 (nml, kml) or 0.2 (ml).
    #[arg(long)]
    pub margin: Option<f64>,
    /// Defaults to 0.1 (nml, kml) or 1 (ml).
    #[arg(long)]
    pub bias: Option<f64>,
    #[arg(long)]
    pub update_bias: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to l1 for nml and kml, l2 for ml and pca.
    #[arg(long, value_enum)]
    pub normalize: Option<Normalize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Defaults to the normalization the model family trains with.
    #[arg(long, value_enum)]
    pub normalize: Option<Normalize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, conflicts_with = "reference")]
    pub model: Option<PathBuf>,
    /// Distance on the raw features when no model is given (default l2).
    #[arg(long, value_enum)]
    pub reference: Option<Reference>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,20,30")]
    pub k: Vec<usize>,
    /// Defaults to the model family's normalization, or none for references.
    #[arg(long, value_enum)]
    pub normalize: Option<Normalize>,
    /// Writes `<prefix>_per_class.csv` and `<prefix>_summary.csv`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    /// Evaluate on this set instead of the training set.
    #[arg(long, requires = "test_labels")]
    pub test_features: Option<PathBuf>,
    #[arg(long, requires = "test_features")]
    pub test_labels: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.02")]
    pub margins: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub biases: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, value_enum, default_value = "chi2")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 1_000_000)]
    pub iters: u64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "l1")]
    pub normalize: Normalize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GradcheckArgs {
    #[arg(long, value_enum, default_value = "chi2")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub input_dim: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub threshold: f64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Pairs(a) => cmd_pairs(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Embed(a) => cmd_embed(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a),
    }
}

fn normalize(features: FeatureMatrix, how: Normalize) -> Result<FeatureMatrix, CliError> {
    Ok(match how {
        Normalize::L1 => features.l1_normalize()?,
        Normalize::L2 => features.l2_normalize()?,
        Normalize::None => features,
    })
}

/// The normalization a model family is trained with by default.
fn default_normalization(model: &Model) -> Normalize {
    match model {
        Model::Nonlinear(_) | Model::Kernelized(_) => Normalize::L1,
        Model::Linear(_) | Model::Pca(_) => Normalize::L2,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(nlembed::Error::from)?))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let (features, labels) = match a.kind {
        SynthKind::Blobs => synth_blobs(a.classes, a.per_class, a.dims, a.separation, a.seed)?,
        SynthKind::Nonlinear => synth_nonlinear(a.classes, a.per_class, a.dims, a.seed)?,
    };
    save_features(features.values(), &a.out_features)?;
    save_labels(&labels, &a.out_labels)?;
    RunManifest::new("synth", a, Some(a.seed))?.write_beside(&a.out_features)?;
    Ok(())
}

pub fn cmd_pairs(a: &PairsArgs) -> Result<(), CliError> {
    let labels = load_labels(&a.labels)?;
    let pairs = generate_pairs(&labels, a.budget, a.pos_fraction, a.seed)?;
    save_pairs(&pairs, &a.out)?;
    let mut m = RunManifest::new("pairs", a, Some(a.seed))?;
    m.add_input(&a.labels)?;
    m.write_beside(&a.out)?;
    Ok(())
}

fn train_config(kind: ModelKind, iters: u64, lr: f64, seed: u64) -> TrainConfig {
    let base = match kind {
        ModelKind::Ml => TrainConfig::linear(),
        ModelKind::Kml => TrainConfig::kml(),
        ModelKind::Nml | ModelKind::Pca => TrainConfig::nml(),
    };
    base.with_iterations(iters).with_learning_rate(lr).with_seed(seed)
}

fn train_model(
    kind: ModelKind,
    features: &FeatureMatrix,
    pairs: Option<&PairSet>,
    dim: usize,
    kernel: KernelId,
    cfg: &TrainConfig,
) -> Result<(Model, Option<TrainReport>), CliError> {
    let need_pairs = || pairs.ok_or_else(|| CliError::Usage("--pairs is required for this model".into()));
    Ok(match kind {
        ModelKind::Nml => {
            let (m, r) = train_nml(features, need_pairs()?, dim, kernel, cfg)?;
            (m.into(), Some(r))
        }
        ModelKind::Ml => {
            let (m, r) = train_linear(features, need_pairs()?, dim, cfg)?;
            (m.into(), Some(r))
        }
        ModelKind::Kml => {
            let (m, r) = train_kml(features, need_pairs()?, dim, kernel, cfg)?;
            (m.into(), Some(r))
        }
        ModelKind::Pca => (Model::Pca(fit_pca(features, dim)?), None),
    })
}

pub fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let how = a.normalize.unwrap_or(match a.model {
        ModelKind::Nml | ModelKind::Kml => Normalize::L1,
        ModelKind::Ml | ModelKind::Pca => Normalize::L2,
    });
    let features = normalize(load_features(&a.features)?, how)?;
    let pairs = a.pairs.as_ref().map(load_pairs).transpose()?;

    let mut cfg = train_config(a.model, a.iters, a.lr, a.seed);
    cfg.bias = a.bias.unwrap_or(cfg.bias);
    cfg.margin = a.margin.unwrap_or(cfg.margin);
    cfg.update_bias = a.update_bias;

    let (model, report) = train_model(a.model, &features, pairs.as_ref(), a.dim, a.kernel.into(), &cfg)?;
    save_model(&model, &a.out)?;
    if let Some(r) = report {
        println!("final objective estimate: {}", r.final_objective_estimate);
        println!("active fraction: {}", r.active_fraction);
    }

    let mut m = RunManifest::new("train", a, Some(a.seed))?;
    m.add_input(&a.features)?;
    if let Some(p) = &a.pairs {
        m.add_input(p)?;
    }
    m.write_beside(&a.out)?;
    Ok(())
}

pub fn cmd_embed(a: &EmbedArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let how = a.normalize.unwrap_or_else(|| default_normalization(&model));
    let features = normalize(load_features(&a.features)?, how)?;
    let embedded = model.as_embedding().embed_all(&features)?;
    save_features(&embedded, &a.out)?;
    let mut m = RunManifest::new("embed", a, None)?;
    m.add_input(&a.model)?;
    m.add_input(&a.features)?;
    m.write_beside(&a.out)?;
    Ok(())
}

fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_report(report: &EvalReport, prefix: &Path) -> Result<(), CliError> {
    report.write_per_class_csv(create(&prefixed(prefix, "_per_class.csv"))?)?;
    report.write_summary_csv(create(&prefixed(prefix, "_summary.csv"))?)?;
    Ok(())
}

fn warn_undersized(labels: &Labels, k_max: usize) {
    let small = undersized_classes(labels, k_max);
    if !small.is_empty() {
        warn!(
            "classes {small:?} have fewer than {} members; their precision@{k_max} cannot reach 1",
            k_max + 1
        );
    }
}

pub fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let labels = load_labels(&a.labels)?;
    let model = a.model.as_ref().map(load_model).transpose()?;
    let (distance, default_norm) = match (&model, a.reference) {
        (Some(m), _) => (RetrievalDistance::L2OnEmbedding, default_normalization(m)),
        (None, Some(Reference::L1)) => (RetrievalDistance::L1Raw, Normalize::None),
        (None, Some(Reference::Chi2)) => (RetrievalDistance::Chi2Raw, Normalize::None),
        (None, Some(Reference::L2) | None) => (RetrievalDistance::L2Raw, Normalize::None),
    };
    let features = normalize(load_features(&a.features)?, a.normalize.unwrap_or(default_norm))?;
    let cfg = RetrievalConfig::new(a.k.clone(), distance)?;
    warn_undersized(&labels, *cfg.k_values().last().expect("non-empty"));
    let report = eval_pipeline(model.as_ref(), &features, &labels, &cfg)?;
    write_report(&report, &a.out_prefix)?;
    for (k, v) in report.k_values.iter().zip(&report.mprec) {
        println!("mprec@{k}: {v}");
    }

    let mut m = RunManifest::new("eval", a, None)?;
    m.add_input(&a.features)?;
    m.add_input(&a.labels)?;
    if let Some(p) = &a.model {
        m.add_input(p)?;
    }
    m.write_beside(&prefixed(&a.out_prefix, "_summary.csv"))?;
    Ok(())
}

/// Cutoff reported by the sweep.
pub const SWEEP_K: usize = 10;

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    if a.margins.is_empty() || a.biases.is_empty() {
        return Err(CliError::Usage("--margins and --biases must be non-empty".into()));
    }
    let features = normalize(load_features(&a.features)?, a.normalize)?;
    let labels = load_labels(&a.labels)?;
    labels.check_matches(&features)?;
    let pairs = load_pairs(&a.pairs)?;
    let (test_features, test_labels) = match (&a.test_features, &a.test_labels) {
        (Some(f), Some(l)) => (normalize(load_features(f)?, a.normalize)?, load_labels(l)?),
        _ => (features.clone(), labels.clone()),
    };
    let cfg = RetrievalConfig::new(vec![SWEEP_K], RetrievalDistance::L2OnEmbedding)?;
    warn_undersized(&test_labels, SWEEP_K);

    let grid: Vec<(f64, f64)> = a
        .margins
        .iter()
        .flat_map(|&m| a.biases.iter().map(move |&b| (m, b)))
        .collect();
    let scores = grid
        .par_iter()
        .map(|&(margin, bias)| {
            let tc = train_config(ModelKind::Nml, a.iters, a.lr, a.seed).with_hinge(bias, margin);
            let (model, _) = train_nml(&features, &pairs, a.dim, a.kernel.into(), &tc)?;
            let report = eval_pipeline(Some(&model.into()), &test_features, &test_labels, &cfg)?;
            Ok(report.mprec[0])
        })
        .collect::<Result<Vec<f64>, nlembed::Error>>()?;

    let mut text = format!("m,b,mprec@{SWEEP_K}\n");
    for ((m, b), s) in grid.iter().zip(&scores) {
        text += &format!("{m},{b},{s}\n");
    }
    std::fs::write(&a.out, text).map_err(nlembed::Error::from)?;

    let mut man = RunManifest::new("sweep", a, Some(a.seed))?;
    man.add_input(&a.features)?;
    man.add_input(&a.labels)?;
    man.add_input(&a.pairs)?;
    if let (Some(f), Some(l)) = (&a.test_features, &a.test_labels) {
        man.add_input(f)?;
        man.add_input(l)?;
    }
    man.write_beside(&a.out)?;
    Ok(())
}

pub fn cmd_gradcheck(a: &GradcheckArgs) -> Result<(), CliError> {
    if a.dim == 0 || a.input_dim == 0 || a.trials == 0 {
        return Err(CliError::Usage(
            "--dim, --input-dim and --trials must be positive".into(),
        ));
    }
    let r = grad_check(a.kernel.into(), a.dim, a.input_dim, a.trials, a.seed);
    println!(
        "kernel {} trials {} max relative error {:e}",
        r.kernel, r.trials, r.max_relative_error
    );
    if r.max_relative_error < a.threshold {
        Ok(())
    } else {
        Err(CliError::CheckFailed {
            error: r.max_relative_error,
            threshold: a.threshold,
        })
    }
}
