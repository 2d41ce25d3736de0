//! Min-max scaling fitted on training data only, lookback windows, the
//! chronological train/test split, and seeded synthetic price series.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::indicators::{Candle, FeatureMatrix, PriceSeries};
use crate::math::Matrix;
use crate::rng::SplitMix64;

/// Per-channel min-max scaler over `d` feature channels plus one target channel
/// (stored last).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scaler {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    fitted: bool,
}

impl Scaler {
    /// Builds a fitted scaler from explicit bounds (e.g. read from a checkpoint).
    pub fn from_bounds(mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self> {
        if mins.len() != maxs.len() || mins.len() < 2 {
            return Err(invalid(format!(
                "scaler needs matching min/max lists of length ≥ 2, got {} and {}",
                mins.len(),
                maxs.len()
            )));
        }
        for (i, (lo, hi)) in mins.iter().zip(&maxs).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || hi < lo {
                return Err(invalid(format!("scaler channel {i}: invalid bounds [{lo}, {hi}]")));
            }
        }
        Ok(Scaler { mins, maxs, fitted: true })
    }

    /// Maps every channel of width `d + 1` through the identity.
    pub fn identity(input_size: usize) -> Self {
        Scaler { mins: vec![0.0; input_size + 1], maxs: vec![1.0; input_size + 1], fitted: true }
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    /// Number of feature channels `d` (excludes the target channel).
    pub fn input_size(&self) -> usize {
        self.mins.len().saturating_sub(1)
    }

    pub fn target_channel(&self) -> usize {
        self.input_size()
    }

    /// `max − min` of the target channel.
    pub fn target_range(&self) -> Result<f64> {
        self.check()?;
        let c = self.target_channel();
        Ok(self.maxs[c] - self.mins[c])
    }

    fn check(&self) -> Result<()> {
        if !self.fitted {
            return Err(Error::InvalidState(String::from("scaler used before fitting")));
        }
        Ok(())
    }

    /// `(x − min) / (max − min)`; a constant channel maps to 0.5.
    pub fn apply(&self, channel: usize, x: f64) -> Result<f64> {
        self.check()?;
        let (lo, hi) = self.bounds(channel)?;
        Ok(if hi > lo { (x - lo) / (hi - lo) } else { 0.5 })
    }

    /// Inverse of [`Scaler::apply`]; a constant channel maps back to its value.
    pub fn invert(&self, channel: usize, y: f64) -> Result<f64> {
        self.check()?;
        let (lo, hi) = self.bounds(channel)?;
        Ok(if hi > lo { y * (hi - lo) + lo } else { lo })
    }

    fn bounds(&self, channel: usize) -> Result<(f64, f64)> {
        match (self.mins.get(channel), self.maxs.get(channel)) {
            (Some(&lo), Some(&hi)) => Ok((lo, hi)),
            _ => Err(Error::Shape(format!("scaler has {} channels, asked for {channel}", self.mins.len()))),
        }
    }

    pub fn apply_target(&self, y: f64) -> Result<f64> {
        self.apply(self.target_channel(), y)
    }

    pub fn invert_target(&self, y: f64) -> Result<f64> {
        self.invert(self.target_channel(), y)
    }

    /// Scales the `d` feature columns of a window.
    pub fn apply_matrix(&self, m: &Matrix) -> Result<Matrix> {
        self.check()?;
        if m.cols() != self.input_size() {
            return Err(Error::Shape(format!(
                "matrix has {} columns, scaler was fitted on {} features",
                m.cols(),
                self.input_size()
            )));
        }
        let mut out = m.clone();
        for t in 0..out.rows() {
            for (c, v) in out.row_mut(t).iter_mut().enumerate() {
                *v = self.apply(c, *v)?;
            }
        }
        Ok(out)
    }
}

/// Fits per-channel bounds on the rows of `train` (`N × (d+1)`, target last).
pub fn fit_scaler(train: &Matrix) -> Result<Scaler> {
    if train.rows() == 0 || train.cols() < 2 {
        return Err(invalid("fit_scaler needs at least one row of d ≥ 1 features plus a target"));
    }
    let mut mins = vec![f64::INFINITY; train.cols()];
    let mut maxs = vec![f64::NEG_INFINITY; train.cols()];
    for row in train.iter_rows() {
        for (c, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(invalid(format!("non-finite value in scaler channel {c}")));
            }
            mins[c] = mins[c].min(v);
            maxs[c] = maxs[c].max(v);
        }
    }
    Ok(Scaler { mins, maxs, fitted: true })
}

/// One supervised pair: an `L × d` window and the close of the bar after it.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub inputs: Matrix,
    pub target: f64,
    /// Timestamp of the target bar.
    pub timestamp: i64,
}

/// Sliding windows of `lookback` consecutive feature rows, unscaled.
/// Sample `j` covers rows `j..j+L` and targets `targets[j+L-1]`.
pub fn make_windows(features: &FeatureMatrix, lookback: usize) -> Result<Vec<WindowSample>> {
    if lookback < 1 {
        return Err(invalid("lookback must be ≥ 1"));
    }
    if features.len() < lookback {
        return Err(Error::InsufficientData { required: lookback, actual: features.len(), what: "windows (feature rows)" });
    }
    let d = features.width();
    let mut out = Vec::with_capacity(features.len() - lookback + 1);
    for j in 0..=features.len() - lookback {
        let rows = &features.rows[j..j + lookback];
        let inputs = Matrix::from_rows(rows)?;
        if inputs.cols() != d {
            return Err(Error::Shape(format!("feature row has width {}, expected {d}", inputs.cols())));
        }
        let last = j + lookback - 1;
        out.push(WindowSample { inputs, target: features.targets[last], timestamp: features.target_timestamps[last] });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<WindowSample>,
    pub test: Vec<WindowSample>,
    pub scaler: Scaler,
    pub lookback: usize,
    pub input_size: usize,
    pub train_fraction: f64,
    pub label: String,
}

/// Number of leading samples assigned to training.
pub fn train_count(n: usize, train_fraction: f64) -> usize {
    // The small offset keeps products like 0.29 · 100 = 28.999… from losing a sample.
    libm::floor(train_fraction * n as f64 + 1e-9) as usize
}

/// Splits time-ordered samples into a leading train block and a trailing test
/// block, fits the scaler on the train block only, and scales both.
///
/// With `fit = false` the identity scaler is used and samples are left as-is.
pub fn chronological_split(samples: &[WindowSample], train_fraction: f64, fit: bool) -> Result<SplitDataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    if samples.len() < 2 {
        return Err(Error::InsufficientData { required: 2, actual: samples.len(), what: "split (samples)" });
    }
    let n_train = train_count(samples.len(), train_fraction);
    if n_train == 0 || n_train == samples.len() {
        return Err(invalid(format!(
            "train fraction {train_fraction} leaves an empty partition for {} samples",
            samples.len()
        )));
    }
    if samples.windows(2).any(|w| w[1].timestamp <= w[0].timestamp) {
        return Err(invalid("samples must be in strictly increasing timestamp order"));
    }
    let (lookback, d) = (samples[0].inputs.rows(), samples[0].inputs.cols());
    if samples.iter().any(|s| s.inputs.rows() != lookback || s.inputs.cols() != d) {
        return Err(Error::Shape(format!("all windows must be {lookback}×{d}")));
    }

    let (train_raw, test_raw) = samples.split_at(n_train);
    let scaler = if fit {
        let mut rows = Matrix::zeros(train_raw.len() * lookback, d + 1);
        let mut r = 0;
        for s in train_raw {
            for row in s.inputs.iter_rows() {
                let dst = rows.row_mut(r);
                dst[..d].copy_from_slice(row);
                // Each sample's target rides along with its rows; every target
                // column entry is therefore a training target.
                dst[d] = s.target;
                r += 1;
            }
        }
        fit_scaler(&rows)?
    } else {
        Scaler::identity(d)
    };

    let scale = |s: &WindowSample| -> Result<WindowSample> {
        Ok(WindowSample { inputs: scaler.apply_matrix(&s.inputs)?, target: scaler.apply_target(s.target)?, timestamp: s.timestamp })
    };
    let train = train_raw.iter().map(scale).collect::<Result<Vec<_>>>()?;
    let test = test_raw.iter().map(scale).collect::<Result<Vec<_>>>()?;
    Ok(SplitDataset { train, test, scaler, lookback, input_size: d, train_fraction, label: String::from("dataset") })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Sine,
    RandomWalk,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::Sine => "sine",
            SynthKind::RandomWalk => "random_walk",
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(SynthKind::Sine),
            "random_walk" => Ok(SynthKind::RandomWalk),
            other => Err(invalid(format!("unknown synthetic kind `{other}` (expected sine or random_walk)"))),
        }
    }
}

/// First synthetic timestamp: 2020-01-01T00:00:00Z.
pub const SYNTH_START: i64 = 1_577_836_800;
pub const SYNTH_MIN_BARS: usize = 10;
const SINE_PERIOD: f64 = 48.0;

/// Seeded hourly OHLCV series.
///
/// * `sine`: `close_t = 1 + 0.05·sin(2πt/48) + noise·u_t`
/// * `random_walk`: `close_0 = 1`, `close_t = close_{t−1}·(1 + noise·u_t)`
///
/// `u_t`, `v_t` are uniform on `[−1, 1)` from one SplitMix64 stream; per bar
/// `u_t` is drawn first (not at `t = 0` for the random walk), then `v_t`.
/// `open_t = close_{t−1}` (`open_0 = close_0`), the wick is
/// `w_t = 0.5·noise·|v_t|·min(open_t, close_t)`, `high = max(open, close) + w`,
/// `low = min(open, close) − w`, and volume is 1.
pub fn gen_synthetic(kind: SynthKind, bars: usize, seed: u64, noise: f64) -> Result<PriceSeries> {
    if bars < SYNTH_MIN_BARS {
        return Err(invalid(format!("synthetic series needs at least {SYNTH_MIN_BARS} bars, got {bars}")));
    }
    if !(noise.is_finite() && (0.0..0.9).contains(&noise)) {
        return Err(invalid(format!("noise must lie in [0, 0.9), got {noise}")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut candles = Vec::with_capacity(bars);
    let mut prev_close = 1.0;
    for t in 0..bars {
        let close = match kind {
            SynthKind::Sine => {
                1.0 + 0.05 * libm::sin(2.0 * PI * t as f64 / SINE_PERIOD) + noise * rng.next_signed()
            }
            SynthKind::RandomWalk if t == 0 => 1.0,
            SynthKind::RandomWalk => prev_close * (1.0 + noise * rng.next_signed()),
        };
        let open = if t == 0 { close } else { prev_close };
        let wick = 0.5 * noise * rng.next_signed().abs() * open.min(close);
        candles.push(Candle {
            timestamp: SYNTH_START + 3600 * t as i64,
            open,
            high: open.max(close) + wick,
            low: open.min(close) - wick,
            close,
            volume: 1.0,
        });
        prev_close = close;
    }
    PriceSeries::new(candles)
}
