//! The hybrid LSTM ‖ Conv1D → attention → dense predictor and its two
//! single-trunk baselines.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::{make_windows, Scaler};
use crate::error::{invalid, Error, Result};
use crate::indicators::FeatureMatrix;
use crate::math::Matrix;
use crate::nn::{
    attention_backward, attention_forward, concat_channels, conv1d_backward, conv1d_forward, dense_backward,
    dense_forward, lstm_backward, lstm_forward, split_channels, AttentionCache, AttentionParams, Conv1dCache,
    Conv1dParams, DenseParams, LstmCache, LstmParams, LstmState, Tensors,
};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Hybrid,
    LstmOnly,
    CnnOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::CnnOnly, Variant::LstmOnly, Variant::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Hybrid => "hybrid",
            Variant::LstmOnly => "lstm_only",
            Variant::CnnOnly => "cnn_only",
        }
    }

    /// Row label used in comparison tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Hybrid => "CNN1D-LSTM-Attention",
            Variant::LstmOnly => "LSTM",
            Variant::CnnOnly => "CNN1D",
        }
    }

    pub fn has_lstm(self) -> bool {
        matches!(self, Variant::Hybrid | Variant::LstmOnly)
    }

    pub fn has_conv(self) -> bool {
        matches!(self, Variant::Hybrid | Variant::CnnOnly)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(Variant::Hybrid),
            "lstm_only" => Ok(Variant::LstmOnly),
            "cnn_only" => Ok(Variant::CnnOnly),
            other => Err(invalid(format!("unknown variant `{other}` (expected hybrid, lstm_only or cnn_only)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub variant: Variant,
    pub input_size: usize,
    pub hidden_size: usize,
    pub num_filters: usize,
    pub kernel_size: usize,
    pub lookback: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            variant: Variant::Hybrid,
            input_size: crate::indicators::NUM_FEATURES,
            hidden_size: 64,
            num_filters: 32,
            kernel_size: 3,
            lookback: 60,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_size < 1 || self.hidden_size < 1 || self.num_filters < 1 {
            return Err(invalid("input_size, hidden_size and num_filters must be ≥ 1"));
        }
        if self.lookback < 2 {
            return Err(invalid(format!("lookback must be ≥ 2, got {}", self.lookback)));
        }
        if self.kernel_size < 1 || self.kernel_size > self.lookback {
            return Err(invalid(format!(
                "kernel_size must lie in 1..=lookback ({}), got {}",
                self.lookback, self.kernel_size
            )));
        }
        Ok(())
    }

    /// Width `M` of the sequence seen by the attention head.
    pub fn context_width(&self) -> usize {
        match self.variant {
            Variant::Hybrid => self.hidden_size + self.num_filters,
            Variant::LstmOnly => self.hidden_size,
            Variant::CnnOnly => self.num_filters,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: ModelSpec,
    pub lstm: Option<LstmParams>,
    pub conv: Option<Conv1dParams>,
    pub attention: AttentionParams,
    pub dense: DenseParams,
}

impl ModelParams {
    /// All-zero parameters laid out for `spec`; also the gradient accumulator shape.
    pub fn zeros(spec: &ModelSpec) -> Self {
        let m = spec.context_width();
        ModelParams {
            spec: *spec,
            lstm: spec.variant.has_lstm().then(|| LstmParams::zeros(spec.hidden_size, spec.input_size)),
            conv: spec
                .variant
                .has_conv()
                .then(|| Conv1dParams::zeros(spec.num_filters, spec.input_size, spec.kernel_size)),
            attention: AttentionParams::zeros(m),
            dense: DenseParams::zeros(m),
        }
    }

    /// Checks that components and tensor shapes match `self.spec`.
    pub fn validate(&self) -> Result<()> {
        let spec = &self.spec;
        spec.validate()?;
        let state = |msg: &str| Error::InvalidState(format!("{msg} for variant {}", spec.variant));
        match (&self.lstm, spec.variant.has_lstm()) {
            (Some(l), true) => {
                l.validate()?;
                if l.hidden_size() != spec.hidden_size || l.input_size() != spec.input_size {
                    return Err(Error::Shape(format!(
                        "LSTM params are (H {}, d {}), spec says (H {}, d {})",
                        l.hidden_size(),
                        l.input_size(),
                        spec.hidden_size,
                        spec.input_size
                    )));
                }
            }
            (None, false) => {}
            (Some(_), false) => return Err(state("unexpected LSTM parameters")),
            (None, true) => return Err(state("missing LSTM parameters")),
        }
        match (&self.conv, spec.variant.has_conv()) {
            (Some(c), true) => {
                c.validate()?;
                if (c.num_filters, c.in_channels, c.kernel_size)
                    != (spec.num_filters, spec.input_size, spec.kernel_size)
                {
                    return Err(Error::Shape(format!(
                        "Conv1D params are F×d×K = {}×{}×{}, spec says {}×{}×{}",
                        c.num_filters, c.in_channels, c.kernel_size, spec.num_filters, spec.input_size, spec.kernel_size
                    )));
                }
            }
            (None, false) => {}
            (Some(_), false) => return Err(state("unexpected Conv1D parameters")),
            (None, true) => return Err(state("missing Conv1D parameters")),
        }
        let m = spec.context_width();
        if self.attention.width() != m || self.dense.width() != m {
            return Err(Error::Shape(format!(
                "W_a has length {} and W_d length {}, expected M = {m}",
                self.attention.width(),
                self.dense.width()
            )));
        }
        Ok(())
    }
}

impl Tensors for ModelParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        if let Some(l) = &self.lstm {
            out.extend(l.tensors());
        }
        if let Some(c) = &self.conv {
            out.extend(c.tensors());
        }
        out.extend(self.attention.tensors());
        out.extend(self.dense.tensors());
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        if let Some(l) = &mut self.lstm {
            out.extend(l.tensors_mut());
        }
        if let Some(c) = &mut self.conv {
            out.extend(c.tensors_mut());
        }
        out.extend(self.attention.tensors_mut());
        out.extend(self.dense.tensors_mut());
        out
    }
}

fn glorot_fill(rng: &mut SplitMix64, values: &mut [f64], fan_in: usize, fan_out: usize) {
    let r = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    for v in values {
        *v = r * rng.next_signed();
    }
}

/// Glorot-uniform weights and zero biases, drawn from one SplitMix64 stream
/// seeded with `seed`.
///
/// Draw order: `W_f, W_i, W_C, W_o` (fan_in `H+d`, fan_out `H`), then `W_c`
/// (fan_in `d·K`, fan_out `F·K`), then `W_a` and `W_d` (fan_in `M`, fan_out 1).
pub fn init_params(spec: &ModelSpec, seed: u64) -> Result<ModelParams> {
    spec.validate()?;
    let mut rng = SplitMix64::new(seed);
    let mut params = ModelParams::zeros(spec);
    let (h, d, k, f) = (spec.hidden_size, spec.input_size, spec.kernel_size, spec.num_filters);
    if let Some(l) = &mut params.lstm {
        for w in [&mut l.w_f, &mut l.w_i, &mut l.w_c, &mut l.w_o] {
            glorot_fill(&mut rng, w.as_mut_slice(), h + d, h);
        }
    }
    if let Some(c) = &mut params.conv {
        glorot_fill(&mut rng, &mut c.weights, d * k, f * k);
    }
    let m = spec.context_width();
    glorot_fill(&mut rng, &mut params.attention.weights, m, 1);
    glorot_fill(&mut rng, &mut params.dense.weights, m, 1);
    Ok(params)
}

/// Intermediates of one [`model_forward`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub variant: Variant,
    pub lstm: Option<LstmCache>,
    pub conv: Option<Conv1dCache>,
    pub attention: AttentionCache,
    pub context: Vec<f64>,
    pub prediction: f64,
}

/// Predicts the (scaled) next close from an `L × d` window.
pub fn model_forward(params: &ModelParams, window: &Matrix) -> Result<(f64, ForwardTrace)> {
    let spec = &params.spec;
    if window.rows() != spec.lookback || window.cols() != spec.input_size {
        return Err(Error::Shape(format!(
            "window is {}×{}, spec expects L×d = {}×{}",
            window.rows(),
            window.cols(),
            spec.lookback,
            spec.input_size
        )));
    }
    forward_any_length(params, window)
}

/// Forward pass without the lookback check; the layers accept any `T ≥ 1`.
pub(crate) fn forward_any_length(params: &ModelParams, window: &Matrix) -> Result<(f64, ForwardTrace)> {
    let lstm = match &params.lstm {
        Some(p) => Some(lstm_forward(p, window, &LstmState::zeros(p.hidden_size()))?),
        None => None,
    };
    let conv = match &params.conv {
        Some(p) => Some(conv1d_forward(p, window)?),
        None => None,
    };
    let z = match (&lstm, &conv) {
        (Some((h, _)), Some((y, _))) => concat_channels(h, y)?,
        (Some((h, _)), None) => h.clone(),
        (None, Some((y, _))) => y.clone(),
        (None, None) => return Err(Error::InvalidState(format!("variant {} has no trunk", params.spec.variant))),
    };
    let (context, attention) = attention_forward(&params.attention, &z)?;
    let prediction = dense_forward(&params.dense, &context)?;
    if !prediction.is_finite() {
        return Err(Error::NumericInstability(format!("non-finite prediction {prediction}")));
    }
    let trace = ForwardTrace {
        variant: params.spec.variant,
        lstm: lstm.map(|(_, c)| c),
        conv: conv.map(|(_, c)| c),
        attention,
        context,
        prediction,
    };
    Ok((prediction, trace))
}

/// Gradients of a scalar loss with respect to every parameter, given
/// `d_loss_d_pred = ∂L/∂prediction`. The result has the layout of `params`.
pub fn model_backward(params: &ModelParams, trace: &ForwardTrace, d_loss_d_pred: f64) -> Result<ModelParams> {
    let variant = params.spec.variant;
    if trace.variant != variant
        || trace.lstm.is_some() != variant.has_lstm()
        || trace.conv.is_some() != variant.has_conv()
    {
        return Err(Error::InvalidState(format!(
            "trace recorded for variant {} cannot be used with {} parameters",
            trace.variant, variant
        )));
    }
    let (dense, d_context) = dense_backward(&params.dense, &trace.context, d_loss_d_pred)?;
    let (attention, dz) = attention_backward(&params.attention, &trace.attention, &d_context)?;
    let (dh, dy) = match variant {
        Variant::Hybrid => {
            let (dh, dy) = split_channels(&dz, params.spec.hidden_size)?;
            (Some(dh), Some(dy))
        }
        Variant::LstmOnly => (Some(dz), None),
        Variant::CnnOnly => (None, Some(dz)),
    };
    let lstm = match (&params.lstm, &trace.lstm, dh) {
        (Some(p), Some(cache), Some(dh)) => Some(lstm_backward(p, cache, &dh)?.0),
        _ => None,
    };
    let conv = match (&params.conv, &trace.conv, dy) {
        (Some(p), Some(cache), Some(dy)) => Some(conv1d_backward(p, cache, &dy)?.0),
        _ => None,
    };
    Ok(ModelParams { spec: params.spec, lstm, conv, attention, dense })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Timestamp of the bar being predicted.
    pub timestamp: i64,
    pub predicted: f64,
    pub actual: f64,
}

/// Runs the model over every full lookback window of `features` and reports
/// predictions and actuals in price units.
pub fn predict_series(params: &ModelParams, features: &FeatureMatrix, scaler: &Scaler) -> Result<Vec<Prediction>> {
    params.validate()?;
    if features.width() != params.spec.input_size {
        return Err(Error::Shape(format!(
            "feature matrix has {} columns, model expects d = {}",
            features.width(),
            params.spec.input_size
        )));
    }
    let windows = make_windows(features, params.spec.lookback)?;
    let mut out = Vec::with_capacity(windows.len());
    for w in &windows {
        let scaled = scaler.apply_matrix(&w.inputs)?;
        let (y, _) = model_forward(params, &scaled)?;
        out.push(Prediction {
            timestamp: w.timestamp,
            predicted: scaler.invert_target(y)?,
            actual: w.target,
        });
    }
    Ok(out)
}

/// Squared-error value and gradient for one sample; shared by training and tests.
pub(crate) fn sample_gradient(params: &ModelParams, window: &Matrix, target: f64) -> Result<(f64, ModelParams)> {
    let (y, trace) = model_forward(params, window)?;
    let err = y - target;
    let grads = model_backward(params, &trace, 2.0 * err)?;
    Ok((err * err, grads))
}
