//! Run configuration shared by `train` and `compare`.
//!
//! A config file is a flat JSON object whose keys are the long flag names
//! (`"hidden-size": 32`, `"data": "eurusd.csv"`). Flags given on the command
//! line replace the file's values. One file may carry keys for both commands;
//! each command reads the keys it knows and unknown keys are rejected.

use std::path::{Path, PathBuf};

use clap::Args;
use fxcast_core::indicators::{IndicatorConfig, NUM_FEATURES};
use fxcast_core::model::{ModelSpec, Variant};
use fxcast_core::training::TrainConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{AppError, AppResult};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Every key a config file may contain.
pub const CONFIG_KEYS: &[&str] = &[
    "data",
    "sma-n",
    "rsi-n",
    "bb-n",
    "bb-k",
    "variant",
    "hidden-size",
    "num-filters",
    "kernel-size",
    "lookback",
    "learning-rate",
    "beta1",
    "beta2",
    "epsilon",
    "epochs",
    "batch-size",
    "seed",
    "patience",
    "validation-fraction",
    "train-fraction",
    "out",
    "loss-csv",
    "variants",
    "csv",
];

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct IndicatorFlags {
    /// SMA window [default: 20]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sma_n: Option<usize>,
    /// RSI window [default: 14]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rsi_n: Option<usize>,
    /// Bollinger window [default: 20]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bb_n: Option<usize>,
    /// Bollinger band width in standard deviations [default: 2]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bb_k: Option<f64>,
}

impl IndicatorFlags {
    pub fn resolve(&self) -> AppResult<IndicatorConfig> {
        let d = IndicatorConfig::default();
        let cfg = IndicatorConfig {
            sma_n: self.sma_n.unwrap_or(d.sma_n),
            rsi_n: self.rsi_n.unwrap_or(d.rsi_n),
            bb_n: self.bb_n.unwrap_or(d.bb_n),
            bb_k: self.bb_k.unwrap_or(d.bb_k),
        };
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

/// Data, indicator, model, optimizer and split settings.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunFlags {
    /// JSON config file; flags override its values
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// OHLCV CSV input
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub indicators: IndicatorFlags,
    /// LSTM hidden size H [default: 64]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_size: Option<usize>,
    /// Conv1D filter count F [default: 32]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_filters: Option<usize>,
    /// Conv1D kernel size K [default: 3]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_size: Option<usize>,
    /// Window length L [default: 60]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lookback: Option<usize>,
    /// Adam step size [default: 0.001]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    /// [default: 0.9]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    /// [default: 0.999]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    /// [default: 1e-8]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// [default: 100]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    /// [default: 64]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    /// Seeds weight init and shuffling [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Epochs without validation improvement before stopping; 0 disables [default: 10]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    /// Trailing share of the training windows held out for early stopping [default: 0.1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_fraction: Option<f64>,
    /// Leading share of windows used for training [default: 0.8]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub indicators: IndicatorConfig,
    /// Variant is filled in per command.
    pub spec: ModelSpec,
    pub train: TrainConfig,
    pub train_fraction: f64,
}

impl RunFlags {
    pub fn resolve(&self, variant: Variant) -> AppResult<RunConfig> {
        let data = self.data.clone().ok_or_else(|| AppError::Usage("missing --data (or `data` in the config file)".into()))?;
        let indicators = self.indicators.resolve()?;
        let s = ModelSpec::default();
        let spec = ModelSpec {
            variant,
            input_size: NUM_FEATURES,
            hidden_size: self.hidden_size.unwrap_or(s.hidden_size),
            num_filters: self.num_filters.unwrap_or(s.num_filters),
            kernel_size: self.kernel_size.unwrap_or(s.kernel_size),
            lookback: self.lookback.unwrap_or(s.lookback),
        };
        spec.validate().map_err(usage)?;
        let t = TrainConfig::default();
        let train = TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(t.learning_rate),
            beta1: self.beta1.unwrap_or(t.beta1),
            beta2: self.beta2.unwrap_or(t.beta2),
            epsilon: self.epsilon.unwrap_or(t.epsilon),
            epochs: self.epochs.unwrap_or(t.epochs),
            batch_size: self.batch_size.unwrap_or(t.batch_size),
            seed: self.seed.unwrap_or(t.seed),
            patience: self.patience.unwrap_or(t.patience),
            validation_fraction: self.validation_fraction.unwrap_or(t.validation_fraction),
        };
        train.validate().map_err(usage)?;
        let train_fraction = self.train_fraction.unwrap_or(DEFAULT_TRAIN_FRACTION);
        check_train_fraction(train_fraction)?;
        Ok(RunConfig { data, indicators, spec, train, train_fraction })
    }
}

pub fn check_train_fraction(f: f64) -> AppResult<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(AppError::Usage(format!("--train-fraction must lie in (0, 1), got {f}")))
    }
}

pub(crate) fn usage(e: fxcast_core::Error) -> AppError {
    AppError::Usage(e.to_string())
}

/// Reads a config file as a key map, rejecting keys no command understands.
pub fn read_config_file(path: &Path) -> AppResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| AppError::Usage(format!("config {}: invalid JSON: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(AppError::Usage(format!("config {}: expected a JSON object", path.display())));
    };
    if let Some(key) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(AppError::Usage(format!("config {}: unknown key `{key}`", path.display())));
    }
    Ok(map)
}

/// Lays the non-empty fields of `flags` over `file` and reads the result back.
pub fn overlay<T: Serialize + DeserializeOwned>(file: Map<String, Value>, flags: &T) -> AppResult<T> {
    let mut merged = file;
    let Value::Object(given) = serde_json::to_value(flags).map_err(|e| AppError::Usage(e.to_string()))? else {
        unreachable!("flag structs serialize to objects");
    };
    merged.extend(given.into_iter().filter(|(_, v)| !v.is_null()));
    serde_json::from_value(Value::Object(merged)).map_err(|e| AppError::Usage(format!("config: {e}")))
}
