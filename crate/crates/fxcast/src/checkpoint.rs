//! Versioned JSON checkpoints.
//!
//! Every tensor is written as a nested array of decimals with 17 significant
//! digits, which round-trips `f64` exactly. LSTM gate matrices are `H` rows of
//! `H + d` columns; the Conv1D kernel is nested `F × d × K`.

use std::io;
use std::path::Path;

use fxcast_core::dataset::Scaler;
use fxcast_core::indicators::IndicatorConfig;
use fxcast_core::math::Matrix;
use fxcast_core::model::{ModelParams, ModelSpec, Variant};
use fxcast_core::nn::{AttentionParams, Conv1dParams, DenseParams, LstmParams};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub indicators: IndicatorConfig,
    pub scaler: Scaler,
    pub meta: Metadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: u64,
    pub epochs_trained: usize,
    pub train_fraction: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format_version: u32,
    spec: SpecFile,
    indicators: IndicatorFile,
    scaler: ScalerFile,
    params: ParamsFile,
    metadata: Metadata,
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    variant: String,
    input_size: usize,
    hidden_size: usize,
    num_filters: usize,
    kernel_size: usize,
    lookback: usize,
}

#[derive(Serialize, Deserialize)]
struct IndicatorFile {
    sma_n: usize,
    rsi_n: usize,
    bb_n: usize,
    bb_k: f64,
}

#[derive(Serialize, Deserialize)]
struct ScalerFile {
    min: Vec<f64>,
    max: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lstm: Option<LstmFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conv: Option<ConvFile>,
    attention: VectorHead,
    dense: VectorHead,
}

#[derive(Serialize, Deserialize)]
struct LstmFile {
    w_f: Vec<Vec<f64>>,
    w_i: Vec<Vec<f64>>,
    w_c: Vec<Vec<f64>>,
    w_o: Vec<Vec<f64>>,
    b_f: Vec<f64>,
    b_i: Vec<f64>,
    b_c: Vec<f64>,
    b_o: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConvFile {
    weights: Vec<Vec<Vec<f64>>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct VectorHead {
    weights: Vec<f64>,
    bias: f64,
}

/// serde_json formatter that writes every float as `{:.16e}`.
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

impl Checkpoint {
    pub fn to_json(&self) -> AppResult<String> {
        let p = &self.params;
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            spec: SpecFile {
                variant: p.spec.variant.as_str().to_string(),
                input_size: p.spec.input_size,
                hidden_size: p.spec.hidden_size,
                num_filters: p.spec.num_filters,
                kernel_size: p.spec.kernel_size,
                lookback: p.spec.lookback,
            },
            indicators: IndicatorFile {
                sma_n: self.indicators.sma_n,
                rsi_n: self.indicators.rsi_n,
                bb_n: self.indicators.bb_n,
                bb_k: self.indicators.bb_k,
            },
            scaler: ScalerFile { min: self.scaler.mins().to_vec(), max: self.scaler.maxs().to_vec() },
            params: ParamsFile {
                lstm: p.lstm.as_ref().map(|l| LstmFile {
                    w_f: l.w_f.to_rows(),
                    w_i: l.w_i.to_rows(),
                    w_c: l.w_c.to_rows(),
                    w_o: l.w_o.to_rows(),
                    b_f: l.b_f.clone(),
                    b_i: l.b_i.clone(),
                    b_c: l.b_c.clone(),
                    b_o: l.b_o.clone(),
                }),
                conv: p.conv.as_ref().map(|c| ConvFile {
                    weights: (0..c.num_filters)
                        .map(|f| {
                            (0..c.in_channels).map(|ch| (0..c.kernel_size).map(|k| c.weight(f, ch, k)).collect()).collect()
                        })
                        .collect(),
                    bias: c.bias.clone(),
                }),
                attention: VectorHead { weights: p.attention.weights.clone(), bias: p.attention.bias },
                dense: VectorHead { weights: p.dense.weights.clone(), bias: p.dense.bias },
            },
            metadata: self.meta,
        };
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits);
        file.serialize(&mut ser).map_err(|e| AppError::Usage(format!("cannot serialize checkpoint: {e}")))?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    pub fn from_json(text: &str, path: &Path) -> AppResult<Self> {
        let bad = |message: String| AppError::Checkpoint { path: path.into(), message };
        // Check the version before the schema, so a newer file reports its version.
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON: {e}")))?;
        match raw.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => return Err(bad(format!("unsupported format_version {v} (this build reads {FORMAT_VERSION})"))),
            None => return Err(bad("missing format_version".into())),
        }
        let file: CheckpointFile = serde_json::from_value(raw).map_err(|e| bad(e.to_string()))?;

        let variant: Variant = file.spec.variant.parse()?;
        let spec = ModelSpec {
            variant,
            input_size: file.spec.input_size,
            hidden_size: file.spec.hidden_size,
            num_filters: file.spec.num_filters,
            kernel_size: file.spec.kernel_size,
            lookback: file.spec.lookback,
        };
        spec.validate()?;
        let matrix = |rows: &Vec<Vec<f64>>, name: &str| {
            Matrix::from_rows(rows).map_err(|e| bad(format!("{name}: {e}")))
        };
        let lstm = match file.params.lstm {
            Some(l) => Some(LstmParams {
                w_f: matrix(&l.w_f, "lstm.w_f")?,
                w_i: matrix(&l.w_i, "lstm.w_i")?,
                w_c: matrix(&l.w_c, "lstm.w_c")?,
                w_o: matrix(&l.w_o, "lstm.w_o")?,
                b_f: l.b_f,
                b_i: l.b_i,
                b_c: l.b_c,
                b_o: l.b_o,
            }),
            None => None,
        };
        let conv = match file.params.conv {
            Some(c) => {
                let nf = c.weights.len();
                let d = c.weights.first().map_or(0, |f| f.len());
                let k = c.weights.first().and_then(|f| f.first()).map_or(0, |t| t.len());
                if c.weights.iter().any(|f| f.len() != d || f.iter().any(|t| t.len() != k)) {
                    return Err(bad("conv.weights is not a rectangular F × d × K array".into()));
                }
                Some(Conv1dParams {
                    weights: c.weights.into_iter().flatten().flatten().collect(),
                    bias: c.bias,
                    num_filters: nf,
                    in_channels: d,
                    kernel_size: k,
                })
            }
            None => None,
        };
        let params = ModelParams {
            spec,
            lstm,
            conv,
            attention: AttentionParams { weights: file.params.attention.weights, bias: file.params.attention.bias },
            dense: DenseParams { weights: file.params.dense.weights, bias: file.params.dense.bias },
        };
        params.validate().map_err(|e| bad(e.to_string()))?;
        let indicators = IndicatorConfig {
            sma_n: file.indicators.sma_n,
            rsi_n: file.indicators.rsi_n,
            bb_n: file.indicators.bb_n,
            bb_k: file.indicators.bb_k,
        };
        indicators.validate()?;
        let scaler = Scaler::from_bounds(file.scaler.min, file.scaler.max)?;
        if scaler.input_size() != spec.input_size {
            return Err(bad(format!(
                "scaler covers {} features but the model expects d = {}",
                scaler.input_size(),
                spec.input_size
            )));
        }
        Ok(Checkpoint { params, indicators, scaler, meta: file.metadata })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> AppResult<()> {
        let path = path.as_ref();
        let json = self.to_json()?;
        std::fs::write(path, json).map_err(|e| AppError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> AppResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text, path)
    }
}
