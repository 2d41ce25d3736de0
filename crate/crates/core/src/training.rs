//! Mini-batch Adam on scaled-space MSE with seeded shuffling and early stopping.

use alloc::format;
use alloc::vec::Vec;

use crate::dataset::{SplitDataset, WindowSample};
use crate::error::{invalid, shape, Error, Result};
use crate::model::{init_params, model_forward, sample_gradient, ModelParams, ModelSpec};
use crate::nn::Tensors;
use crate::rng::SplitMix64;

/// Offset added to the run seed for the epoch-shuffle stream.
pub const SHUFFLE_SEED_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    /// Trailing fraction of the training block held out for validation.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 100,
            batch_size: 64,
            seed: 0,
            patience: 10,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1), got {b}")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.epochs < 1 {
            return Err(invalid("epochs must be ≥ 1"));
        }
        if self.batch_size < 1 {
            return Err(invalid("batch_size must be ≥ 1"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(invalid(format!("validation_fraction must lie in [0, 1), got {}", self.validation_fraction)));
        }
        Ok(())
    }
}

/// First and second moment estimates with the layout of the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: ModelParams,
    pub second: ModelParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros = ModelParams::zeros(&params.spec);
        AdamState { first: zeros.clone(), second: zeros, step: 0 }
    }
}

/// One bias-corrected Adam update applied in place to every tensor.
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState, config: &TrainConfig) -> Result<()> {
    let layout = |p: &ModelParams| p.tensors().iter().map(|t| t.len()).collect::<Vec<_>>();
    let expected = layout(params);
    for (name, other) in [("gradients", grads), ("first moment", &state.first), ("second moment", &state.second)] {
        if layout(other) != expected {
            return Err(shape(format!("{name} do not match the parameter layout")));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - libm::pow(b1, t as f64);
    let c2 = 1.0 - libm::pow(b2, t as f64);
    let grads = grads.tensors();
    let mut firsts = state.first.tensors_mut();
    let mut seconds = state.second.tensors_mut();
    for (((theta, g), m), v) in params.tensors_mut().into_iter().zip(grads).zip(firsts.iter_mut()).zip(seconds.iter_mut()) {
        for i in 0..theta.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            theta[i] -= config.learning_rate * m_hat / (libm::sqrt(v_hat) + config.epsilon);
        }
    }
    Ok(())
}

/// `(1/N)·Σ(ŷ − y)²` and its gradient `2(ŷ − y)/N` per prediction.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(invalid(format!(
            "mse_loss needs equal non-zero lengths, got {} and {}",
            predictions.len(),
            targets.len()
        )));
    }
    let n = predictions.len() as f64;
    let loss = predictions.iter().zip(targets).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / n;
    let grads = predictions.iter().zip(targets).map(|(p, y)| 2.0 * (p - y) / n).collect();
    Ok((loss, grads))
}

/// Mean loss and mean gradient over `batch`, reduced serially in slice order.
pub fn batch_gradient(params: &ModelParams, batch: &[&WindowSample]) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    let mut total = ModelParams::zeros(&params.spec);
    let mut loss = 0.0;
    for sample in batch {
        let (l, g) = sample_gradient(params, &sample.inputs, sample.target)?;
        loss += l;
        total.add_assign(&g);
    }
    let n = batch.len() as f64;
    total.scale(1.0 / n);
    Ok((loss / n, total))
}

/// Scaled-space MSE of `params` over `samples`.
pub fn dataset_mse(params: &ModelParams, samples: &[WindowSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("no samples to score"));
    }
    let mut sum = 0.0;
    for s in samples {
        let (y, _) = model_forward(params, &s.inputs)?;
        sum += (y - s.target) * (y - s.target);
    }
    Ok(sum / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-sample squared error seen during each epoch (scaled space).
    pub train_losses: Vec<f64>,
    /// Validation MSE after each epoch; empty without a validation slice.
    pub val_losses: Vec<f64>,
    pub epochs_run: usize,
    pub stopped_early: bool,
    /// 1-based epoch whose parameters were returned, when validation picked them.
    pub best_epoch: Option<usize>,
    pub adam_steps: u64,
    /// Filled in by callers that have a clock.
    pub wall_time_secs: Option<f64>,
}

/// Per-epoch progress handed to a training observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

/// Trains a freshly initialized model (init seed = `config.seed`).
pub fn train(spec: &ModelSpec, data: &SplitDataset, config: &TrainConfig) -> Result<(ModelParams, TrainReport)> {
    train_with(spec, data, config, |_| {})
}

pub fn train_with<F: FnMut(&EpochLog)>(
    spec: &ModelSpec,
    data: &SplitDataset,
    config: &TrainConfig,
    observer: F,
) -> Result<(ModelParams, TrainReport)> {
    let params = init_params(spec, config.seed)?;
    train_from(params, &data.train, config, observer)
}

/// Trains `params` on time-ordered `samples`. The last `validation_fraction`
/// of them (at least one when the fraction is positive) is held out.
pub fn train_from<F: FnMut(&EpochLog)>(
    mut params: ModelParams,
    samples: &[WindowSample],
    config: &TrainConfig,
    mut observer: F,
) -> Result<(ModelParams, TrainReport)> {
    config.validate()?;
    params.validate()?;
    if samples.is_empty() {
        return Err(Error::InsufficientData { required: 1, actual: 0, what: "training samples" });
    }
    let n_val = if config.validation_fraction > 0.0 {
        (libm::floor(config.validation_fraction * samples.len() as f64) as usize).max(1)
    } else {
        0
    };
    if n_val >= samples.len() {
        return Err(invalid(format!(
            "validation fraction {} leaves no training samples out of {}",
            config.validation_fraction,
            samples.len()
        )));
    }
    let (fit, val) = samples.split_at(samples.len() - n_val);

    let mut adam = AdamState::new(&params);
    let mut shuffler = SplitMix64::new(config.seed.wrapping_add(SHUFFLE_SEED_OFFSET));
    let mut order: Vec<usize> = (0..fit.len()).collect();
    let mut report = TrainReport {
        train_losses: Vec::new(),
        val_losses: Vec::new(),
        epochs_run: 0,
        stopped_early: false,
        best_epoch: None,
        adam_steps: 0,
        wall_time_secs: None,
    };
    let mut best: Option<(f64, ModelParams)> = None;
    let mut stale = 0usize;

    for epoch in 1..=config.epochs {
        shuffler.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&WindowSample> = chunk.iter().map(|&i| &fit[i]).collect();
            let (loss, grads) = batch_gradient(&params, &batch).map_err(|e| match e {
                Error::NumericInstability(_) => Error::Divergence { epoch, batch: b + 1 },
                other => other,
            })?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence { epoch, batch: b + 1 });
            }
            epoch_loss += loss * batch.len() as f64;
            adam_step(&mut params, &grads, &mut adam, config)?;
            if !params.is_finite() {
                return Err(Error::Divergence { epoch, batch: b + 1 });
            }
        }
        let train_loss = epoch_loss / fit.len() as f64;
        report.train_losses.push(train_loss);
        report.epochs_run = epoch;

        let val_loss = if val.is_empty() {
            None
        } else {
            let v = dataset_mse(&params, val)?;
            if !v.is_finite() {
                return Err(Error::Divergence { epoch, batch: 0 });
            }
            report.val_losses.push(v);
            Some(v)
        };
        observer(&EpochLog { epoch, train_loss, val_loss });

        if let (Some(v), true) = (val_loss, config.patience > 0) {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, params.clone()));
                report.best_epoch = Some(epoch);
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    report.stopped_early = epoch < config.epochs;
                    break;
                }
            }
        }
    }
    report.adam_steps = adam.step;
    if let Some((_, p)) = best {
        params = p;
    }
    Ok((params, report))
}
