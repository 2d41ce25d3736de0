//! Subcommands. Exit status: 0 success, 1 runtime or data error, 2 bad arguments.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fxcast_core::dataset::{chronological_split, gen_synthetic, make_windows, train_count, SplitDataset, SynthKind, SYNTH_MIN_BARS};
use fxcast_core::evaluation::{compare_with, format_table, EvalReport};
use fxcast_core::indicators::build_feature_matrix;
use fxcast_core::model::{predict_series, ModelSpec, Variant};
use fxcast_core::training::{train_with, EpochLog};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, Metadata};
use crate::config::{self, check_train_fraction, IndicatorFlags, RunConfig, RunFlags};
use crate::csvio;
use crate::error::{AppError, AppResult};

#[derive(Debug, Parser)]
#[command(name = "fxcast", version, about = "Next-bar close forecasting with CNN1D / LSTM / attention models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic OHLCV CSV
    Synth(SynthArgs),
    /// Write the indicator feature matrix of an OHLCV CSV
    Featurize(FeaturizeArgs),
    /// Train one model and write a checkpoint plus its loss history
    Train(TrainArgs),
    /// Write predicted vs actual closes for every window of a CSV
    Predict(PredictArgs),
    /// Print MSE / RMSE / R-Square of a checkpoint on a CSV
    Evaluate(EvaluateArgs),
    /// Train and evaluate several variants on one split
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// sine or random_walk
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub bars: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise amplitude in [0, 0.9)
    #[arg(long, default_value_t = 0.002)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub indicators: IndicatorFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunFlags,
    /// hybrid, lstm_only or cnn_only [default: hybrid]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Checkpoint path
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Loss history path [default: checkpoint path with extension `loss.csv`]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Score only the windows after this leading share; all windows when absent
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Also write the report as CSV with full precision
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunFlags,
    /// Comma-separated variants [default: cnn_only,lstm_only,hybrid]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variants: Option<String>,
    /// Also write the table as CSV
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

pub fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Featurize(a) => cmd_featurize(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

pub fn cmd_synth(a: &SynthArgs) -> AppResult<()> {
    let kind: SynthKind = a.kind.parse().map_err(config::usage)?;
    if a.bars < SYNTH_MIN_BARS {
        return Err(AppError::Usage(format!("--bars must be at least {SYNTH_MIN_BARS}, got {}", a.bars)));
    }
    if !(0.0..0.9).contains(&a.noise) {
        return Err(AppError::Usage(format!("--noise must lie in [0, 0.9), got {}", a.noise)));
    }
    let series = gen_synthetic(kind, a.bars, a.seed, a.noise)?;
    csvio::write_ohlc_csv(&series, &a.out)
}

pub fn cmd_featurize(a: &FeaturizeArgs) -> AppResult<()> {
    let indicators = a.indicators.resolve()?;
    let series = csvio::load_ohlc_csv(&a.data)?;
    let features = build_feature_matrix(&series, &indicators)?;
    csvio::write_features_csv(&features, &a.out)?;
    println!("wrote {} feature rows to {}", features.len(), a.out.display());
    Ok(())
}

fn merged<T>(flags: &T, config: Option<&Path>) -> AppResult<T>
where
    T: Serialize + serde::de::DeserializeOwned,
{
    let file = match config {
        Some(p) => config::read_config_file(p)?,
        None => Default::default(),
    };
    config::overlay(file, flags)
}

fn parse_variant(s: &str) -> AppResult<Variant> {
    s.trim().parse().map_err(config::usage)
}

fn load_split(cfg: &RunConfig) -> AppResult<SplitDataset> {
    let series = csvio::load_ohlc_csv(&cfg.data)?;
    let features = build_feature_matrix(&series, &cfg.indicators)?;
    let samples = make_windows(&features, cfg.spec.lookback)?;
    let mut data = chronological_split(&samples, cfg.train_fraction, true)?;
    if let Some(stem) = cfg.data.file_stem() {
        data.label = stem.to_string_lossy().into_owned();
    }
    Ok(data)
}

fn log_epoch(prefix: &str, total: usize, e: &EpochLog) {
    match e.val_loss {
        Some(v) => eprintln!("{prefix}epoch {}/{total} train_loss={:.6e} val_loss={v:.6e}", e.epoch, e.train_loss),
        None => eprintln!("{prefix}epoch {}/{total} train_loss={:.6e}", e.epoch, e.train_loss),
    }
}

pub fn cmd_train(a: &TrainArgs) -> AppResult<()> {
    let a: TrainArgs = merged(a, a.run.config.as_deref())?;
    let variant = a.variant.as_deref().map(parse_variant).transpose()?.unwrap_or(Variant::Hybrid);
    let cfg = a.run.resolve(variant)?;
    let out = a.out.clone().ok_or_else(|| AppError::Usage("missing --out (checkpoint path)".into()))?;
    let loss_csv = a.loss_csv.clone().unwrap_or_else(|| out.with_extension("loss.csv"));

    let data = load_split(&cfg)?;
    let start = Instant::now();
    let (params, mut report) = train_with(&cfg.spec, &data, &cfg.train, |e| log_epoch("", cfg.train.epochs, e))?;
    report.wall_time_secs = Some(start.elapsed().as_secs_f64());

    let checkpoint = Checkpoint {
        params,
        indicators: cfg.indicators,
        scaler: data.scaler.clone(),
        meta: Metadata { seed: cfg.train.seed, epochs_trained: report.epochs_run, train_fraction: cfg.train_fraction },
    };
    checkpoint.save(&out)?;
    csvio::write_loss_history(&report, &loss_csv)?;

    let last_train = report.train_losses.last().copied().unwrap_or(f64::NAN);
    print!("variant={} epochs={} train_loss={last_train:.6e}", variant, report.epochs_run);
    if let Some(v) = report.val_losses.last() {
        print!(" val_loss={v:.6e}");
    }
    if let Some(b) = report.best_epoch {
        print!(" best_epoch={b}");
    }
    println!(" stopped_early={}", report.stopped_early);
    println!("checkpoint: {}", out.display());
    println!("loss history: {}", loss_csv.display());
    Ok(())
}

pub fn cmd_predict(a: &PredictArgs) -> AppResult<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let series = csvio::load_ohlc_csv(&a.data)?;
    let features = build_feature_matrix(&series, &ck.indicators)?;
    let predictions = predict_series(&ck.params, &features, &ck.scaler)?;
    csvio::export_predictions_csv(&predictions, &a.out)?;
    println!("wrote {} predictions to {}", predictions.len(), a.out.display());
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> AppResult<()> {
    if let Some(f) = a.train_fraction {
        check_train_fraction(f)?;
    }
    let ck = Checkpoint::load(&a.checkpoint)?;
    let series = csvio::load_ohlc_csv(&a.data)?;
    let features = build_feature_matrix(&series, &ck.indicators)?;
    let predictions = predict_series(&ck.params, &features, &ck.scaler)?;
    let scored = match a.train_fraction {
        Some(f) => &predictions[train_count(predictions.len(), f)..],
        None => &predictions[..],
    };
    if scored.is_empty() {
        return Err(fxcast_core::Error::InsufficientData { required: 1, actual: 0, what: "windows to evaluate" }.into());
    }
    let label = a.data.file_stem().map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
    let report = EvalReport::from_predictions(ck.params.spec.variant.as_str(), &label, scored)?;
    print!("{}", format_table(std::slice::from_ref(&report)));
    if let Some(path) = &a.csv {
        csvio::write_reports_csv(&[report], path)?;
    }
    Ok(())
}

pub fn cmd_compare(a: &CompareArgs) -> AppResult<()> {
    let a: CompareArgs = merged(a, a.run.config.as_deref())?;
    let variants = match a.variants.as_deref() {
        Some(list) => list.split(',').map(parse_variant).collect::<AppResult<Vec<_>>>()?,
        None => Variant::ALL.to_vec(),
    };
    if variants.is_empty() {
        return Err(AppError::Usage("--variants is empty".into()));
    }
    let cfg = a.run.resolve(Variant::Hybrid)?;
    let specs: Vec<ModelSpec> = variants.iter().map(|&variant| ModelSpec { variant, ..cfg.spec }).collect();
    let data = load_split(&cfg)?;
    let rows = compare_with(&specs, &data, &cfg.train, |_, row| {
        eprintln!(
            "{}: {} epochs, test MSE {:.3e}",
            row.spec.variant, row.training.epochs_run, row.report.mse
        );
    })?;
    let reports: Vec<EvalReport> = rows.iter().map(|r| r.report.clone()).collect();
    print!("{}", format_table(&reports));
    if let Some(path) = &a.csv {
        csvio::write_comparison_csv(&rows, path)?;
    }
    Ok(())
}
