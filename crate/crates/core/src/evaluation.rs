//! MSE, RMSE and R² in price units, test-split evaluation, and the
//! three-variant comparison table.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::dataset::{Scaler, SplitDataset, WindowSample};
use crate::error::{invalid, Error, Result};
use crate::model::{model_forward, ModelParams, ModelSpec, Prediction};
use crate::training::{train, TrainConfig, TrainReport};

fn check_pair(pred: &[f64], actual: &[f64], min_len: usize) -> Result<()> {
    if pred.len() != actual.len() || pred.len() < min_len {
        return Err(invalid(format!(
            "metric needs equal lengths ≥ {min_len}, got {} predictions and {} actuals",
            pred.len(),
            actual.len()
        )));
    }
    if pred.iter().chain(actual).any(|v| !v.is_finite()) {
        return Err(invalid("metric inputs must be finite"));
    }
    Ok(())
}

pub fn mse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual, 1)?;
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum::<f64>() / pred.len() as f64)
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    Ok(libm::sqrt(mse(pred, actual)?))
}

/// `1 − Σ(y − ŷ)² / Σ(y − ȳ)²` with `ȳ` the mean of `actual`.
pub fn r_square(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual, 2)?;
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let total: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if total == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let residual: f64 = pred.iter().zip(actual).map(|(p, a)| (a - p) * (a - p)).sum();
    Ok(1.0 - residual / total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub dataset: String,
    pub n: usize,
    pub mse: f64,
    pub rmse: f64,
    /// `None` when R² is undefined (fewer than two samples or constant actuals).
    pub r_square: Option<f64>,
}

impl EvalReport {
    pub fn from_predictions(model: &str, dataset: &str, predictions: &[Prediction]) -> Result<Self> {
        let pred: Vec<f64> = predictions.iter().map(|p| p.predicted).collect();
        let actual: Vec<f64> = predictions.iter().map(|p| p.actual).collect();
        let mse = mse(&pred, &actual)?;
        let r_square = match r_square(&pred, &actual) {
            Ok(r) => Some(r),
            Err(Error::DegenerateVariance) => None,
            Err(Error::InvalidArgument(_)) if pred.len() < 2 => None,
            Err(e) => return Err(e),
        };
        Ok(EvalReport {
            model: model.to_string(),
            dataset: dataset.to_string(),
            n: pred.len(),
            mse,
            rmse: libm::sqrt(mse),
            r_square,
        })
    }
}

/// Runs the model on already-scaled samples and maps predictions and targets
/// back to price units.
pub fn predict_samples(params: &ModelParams, samples: &[WindowSample], scaler: &Scaler) -> Result<Vec<Prediction>> {
    params.validate()?;
    samples
        .iter()
        .map(|s| {
            let (y, _) = model_forward(params, &s.inputs)?;
            Ok(Prediction {
                timestamp: s.timestamp,
                predicted: scaler.invert_target(y)?,
                actual: scaler.invert_target(s.target)?,
            })
        })
        .collect()
}

/// Price-unit metrics over the test partition.
pub fn evaluate(params: &ModelParams, data: &SplitDataset) -> Result<EvalReport> {
    if data.test.is_empty() {
        return Err(Error::InsufficientData { required: 1, actual: 0, what: "test samples" });
    }
    let predictions = predict_samples(params, &data.test, &data.scaler)?;
    EvalReport::from_predictions(params.spec.variant.as_str(), &data.label, &predictions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub spec: ModelSpec,
    pub report: EvalReport,
    pub training: TrainReport,
}

/// Trains every spec independently (seed `config.seed + index`) and evaluates
/// each on the shared test partition. Rows follow the order of `specs`.
pub fn compare(specs: &[ModelSpec], data: &SplitDataset, config: &TrainConfig) -> Result<Vec<ComparisonRow>> {
    compare_with(specs, data, config, |_, _| {})
}

/// Like [`compare`], calling `on_row` as each variant finishes.
pub fn compare_with<F: FnMut(usize, &ComparisonRow)>(
    specs: &[ModelSpec],
    data: &SplitDataset,
    config: &TrainConfig,
    mut on_row: F,
) -> Result<Vec<ComparisonRow>> {
    if specs.is_empty() {
        return Err(invalid("compare needs at least one model spec"));
    }
    let mut rows = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let label = |e: Error| Error::InvalidState(format!("variant {} (#{i}): {e}", spec.variant));
        let cfg = TrainConfig { seed: config.seed.wrapping_add(i as u64), ..*config };
        let (params, training) = train(spec, data, &cfg).map_err(label)?;
        let report = evaluate(&params, data).map_err(label)?;
        let row = ComparisonRow { spec: *spec, report, training };
        on_row(i, &row);
        rows.push(row);
    }
    Ok(rows)
}

/// Aligned text table with the columns MSE, RMSE, R-Square.
pub fn format_table(reports: &[EvalReport]) -> String {
    let width = reports.iter().map(|r| r.model.len()).max().unwrap_or(0).max("Model".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>12}  {:>12}  {:>10}  {:>6}", "Model", "MSE", "RMSE", "R-Square", "n");
    for r in reports {
        let r2 = r.r_square.map_or_else(|| String::from("n/a"), |v| format!("{v:.5}"));
        let _ = writeln!(out, "{:<width$}  {:>12.3e}  {:>12.5}  {:>10}  {:>6}", r.model, r.mse, r.rmse, r2, r.n);
    }
    out
}
