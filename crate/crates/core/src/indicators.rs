//! SMA, RSI and Bollinger Band features over a close-price series, and the
//! aligned feature matrix the network consumes.
//!
//! Each indicator returns one `Option<f64>` per input price; `None` marks the
//! warm-up entries where the window is not yet full.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// One OHLCV bar. `timestamp` is epoch seconds (UTC).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candle {
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Candle {
    pub fn validate(&self) -> Result<()> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(invalid("prices must be finite and strictly positive"));
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return Err(invalid("volume must be finite and non-negative"));
        }
        if self.low > self.open.min(self.close) {
            return Err(invalid(format!(
                "low {} exceeds min(open, close) {}",
                self.low,
                self.open.min(self.close)
            )));
        }
        if self.high < self.open.max(self.close) {
            return Err(invalid(format!(
                "high {} is below max(open, close) {}",
                self.high,
                self.open.max(self.close)
            )));
        }
        Ok(())
    }
}

/// Non-empty, strictly time-ordered sequence of validated candles.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    candles: Vec<Candle>,
}

impl PriceSeries {
    pub fn new(candles: Vec<Candle>) -> Result<Self> {
        if candles.is_empty() {
            return Err(invalid("price series must contain at least one candle"));
        }
        for (i, c) in candles.iter().enumerate() {
            c.validate().map_err(|e| invalid(format!("candle {i}: {e}")))?;
            if i > 0 && c.timestamp <= candles[i - 1].timestamp {
                return Err(invalid(format!(
                    "candle {i}: timestamp {} does not increase on {}",
                    c.timestamp,
                    candles[i - 1].timestamp
                )));
            }
        }
        Ok(PriceSeries { candles })
    }

    pub fn candles(&self) -> &[Candle] {
        &self.candles
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.close).collect()
    }

    pub fn into_candles(self) -> Vec<Candle> {
        self.candles
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorConfig {
    pub sma_n: usize,
    pub rsi_n: usize,
    pub bb_n: usize,
    pub bb_k: f64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig { sma_n: 20, rsi_n: 14, bb_n: 20, bb_k: 2.0 }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sma_n < 1 || self.rsi_n < 1 || self.bb_n < 1 {
            return Err(invalid("indicator windows sma_n, rsi_n, bb_n must be ≥ 1"));
        }
        if !self.bb_k.is_finite() || self.bb_k < 0.0 {
            return Err(invalid("bb_k must be finite and ≥ 0"));
        }
        Ok(())
    }

    /// Index of the first bar at which every indicator is defined.
    pub fn warm_up(&self) -> usize {
        (self.sma_n - 1).max(self.rsi_n).max(self.bb_n - 1)
    }

    /// Smallest series length accepted by [`build_feature_matrix`].
    pub fn min_series_len(&self) -> usize {
        self.sma_n.max(self.rsi_n + 1).max(self.bb_n) + 2
    }
}

pub const FEATURE_NAMES: [&str; 6] = ["close", "sma", "rsi", "bb_upper", "bb_middle", "bb_lower"];
pub const NUM_FEATURES: usize = FEATURE_NAMES.len();

/// Per-bar feature rows aligned with next-bar close targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// Timestamp of the bar each row was computed from.
    pub timestamps: Vec<i64>,
    pub rows: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
    /// Close of the bar after each row's bar.
    pub targets: Vec<f64>,
    /// Timestamp of the bar each target belongs to.
    pub target_timestamps: Vec<i64>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }
}

fn check_window(n: usize, len: usize) -> Result<()> {
    if n < 1 {
        return Err(invalid("window length must be ≥ 1"));
    }
    if len == 0 {
        return Err(invalid("price list is empty"));
    }
    Ok(())
}

/// Simple moving average over the trailing `n` prices.
pub fn sma(prices: &[f64], n: usize) -> Result<Vec<Option<f64>>> {
    check_window(n, prices.len())?;
    let mut out = vec![None; prices.len()];
    // Each window is summed directly; a running sum drifts by O(len·ε).
    for t in n - 1..prices.len() {
        let sum: f64 = prices[t + 1 - n..=t].iter().sum();
        out[t] = Some(sum / n as f64);
    }
    Ok(out)
}

/// RSI from simple means of the last `n` gains and losses.
///
/// A window with no losses is 100, a window with no movement at all is 50.
pub fn rsi(prices: &[f64], n: usize) -> Result<Vec<Option<f64>>> {
    check_window(n, prices.len())?;
    if prices.len() < n + 1 {
        return Err(Error::InsufficientData { required: n + 1, actual: prices.len(), what: "rsi" });
    }
    let mut out = vec![None; prices.len()];
    for t in n..prices.len() {
        let (mut gain, mut loss) = (0.0, 0.0);
        for i in t + 1 - n..=t {
            let delta = prices[i] - prices[i - 1];
            if delta > 0.0 {
                gain += delta;
            } else {
                loss -= delta;
            }
        }
        let avg_gain = gain / n as f64;
        let avg_loss = loss / n as f64;
        let value = if avg_loss == 0.0 {
            if avg_gain == 0.0 {
                50.0
            } else {
                100.0
            }
        } else {
            let rs = avg_gain / avg_loss;
            100.0 - 100.0 / (1.0 + rs)
        };
        out[t] = Some(value);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub upper: Vec<Option<f64>>,
    pub middle: Vec<Option<f64>>,
    pub lower: Vec<Option<f64>>,
}

/// Bollinger bands: SMA ± k·σ with σ the population standard deviation of the window.
pub fn bollinger(prices: &[f64], n: usize, k: f64) -> Result<Bands> {
    check_window(n, prices.len())?;
    if !k.is_finite() || k < 0.0 {
        return Err(invalid("band multiplier k must be finite and ≥ 0"));
    }
    let middle = sma(prices, n)?;
    let mut upper = vec![None; prices.len()];
    let mut lower = vec![None; prices.len()];
    for t in n - 1..prices.len() {
        let mean = middle[t].expect("sma defined past warm-up");
        let var = prices[t + 1 - n..=t].iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n as f64;
        let width = k * libm::sqrt(var);
        upper[t] = Some(mean + width);
        lower[t] = Some(mean - width);
    }
    Ok(Bands { upper, middle, lower })
}

/// Builds `[close, sma, rsi, bb_upper, bb_middle, bb_lower]` rows with the next
/// bar's close as target. Warm-up rows and the final bar are dropped.
pub fn build_feature_matrix(series: &PriceSeries, config: &IndicatorConfig) -> Result<FeatureMatrix> {
    config.validate()?;
    let required = config.min_series_len();
    if series.len() < required {
        return Err(Error::InsufficientData {
            required,
            actual: series.len(),
            what: "feature matrix (bars)",
        });
    }
    let closes = series.closes();
    let sma_v = sma(&closes, config.sma_n)?;
    let rsi_v = rsi(&closes, config.rsi_n)?;
    let bands = bollinger(&closes, config.bb_n, config.bb_k)?;

    let candles = series.candles();
    let start = config.warm_up();
    let count = closes.len() - 1 - start;
    let mut fm = FeatureMatrix {
        timestamps: Vec::with_capacity(count),
        rows: Vec::with_capacity(count),
        feature_names: FEATURE_NAMES.iter().map(|s| String::from(*s)).collect(),
        targets: Vec::with_capacity(count),
        target_timestamps: Vec::with_capacity(count),
    };
    for t in start..closes.len() - 1 {
        let row = [
            Some(closes[t]),
            sma_v[t],
            rsi_v[t],
            bands.upper[t],
            bands.middle[t],
            bands.lower[t],
        ];
        let row: Option<Vec<f64>> = row.into_iter().collect();
        let row = row.ok_or_else(|| Error::InvalidState(format!("indicator undefined at bar {t}")))?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericInstability(format!("non-finite feature at bar {t}")));
        }
        fm.timestamps.push(candles[t].timestamp);
        fm.rows.push(row);
        fm.targets.push(closes[t + 1]);
        fm.target_timestamps.push(candles[t + 1].timestamp);
    }
    Ok(fm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series_from(closes: &[f64]) -> PriceSeries {
        let candles = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| Candle {
                timestamp: 3600 * i as i64,
                open: c,
                high: c,
                low: c,
                close: c,
                volume: 1.0,
            })
            .collect();
        PriceSeries::new(candles).unwrap()
    }

    // Brute-force oracles: recompute every window from scratch.
    fn naive_mean(w: &[f64]) -> f64 {
        let mut s = 0.0;
        for x in w {
            s += x;
        }
        s / w.len() as f64
    }

    fn naive_rsi(w: &[f64]) -> f64 {
        let gains: Vec<f64> = w.windows(2).map(|p| (p[1] - p[0]).max(0.0)).collect();
        let losses: Vec<f64> = w.windows(2).map(|p| (p[0] - p[1]).max(0.0)).collect();
        let g = naive_mean(&gains);
        let l = naive_mean(&losses);
        if l == 0.0 && g == 0.0 {
            50.0
        } else if l == 0.0 {
            100.0
        } else {
            100.0 - 100.0 / (1.0 + g / l)
        }
    }

    #[test]
    fn sma_examples() {
        assert_eq!(sma(&[5.0, 5.0, 5.0, 5.0], 3).unwrap(), vec![None, None, Some(5.0), Some(5.0)]);
        assert_eq!(
            sma(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(),
            vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]
        );
        assert_eq!(sma(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), vec![None, Some(1.5), Some(2.5), Some(3.5)]);
        assert!(sma(&[1.0], 0).is_err());
        assert!(sma(&[], 2).is_err());
    }

    #[test]
    fn sma_longer_than_series_is_all_undefined() {
        assert_eq!(sma(&[1.0, 2.0], 3).unwrap(), vec![None, None]);
    }

    #[test]
    fn rsi_limit_cases() {
        let up = rsi(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap();
        assert_eq!(up, vec![None, None, None, Some(100.0), Some(100.0)]);
        let down = rsi(&[5.0, 4.0, 3.0, 2.0, 1.0], 3).unwrap();
        assert_eq!(down, vec![None, None, None, Some(0.0), Some(0.0)]);
        let alt = rsi(&[10.0, 11.0, 10.0, 11.0, 10.0], 4).unwrap();
        assert_eq!(alt[4], Some(50.0));
        let flat = rsi(&[2.0, 2.0, 2.0], 2).unwrap();
        assert_eq!(flat[2], Some(50.0));
    }

    #[test]
    fn rsi_needs_n_plus_one_prices() {
        assert!(matches!(rsi(&[1.0, 2.0, 3.0], 3), Err(Error::InsufficientData { required: 4, .. })));
    }

    #[test]
    fn bollinger_examples() {
        let b = bollinger(&[3.0, 3.0, 3.0, 3.0], 2, 2.0).unwrap();
        for t in 1..4 {
            assert_eq!(b.upper[t], Some(3.0));
            assert_eq!(b.middle[t], Some(3.0));
            assert_eq!(b.lower[t], Some(3.0));
        }
        let b = bollinger(&[1.0, 3.0], 2, 1.0).unwrap();
        assert_eq!((b.upper[1], b.middle[1], b.lower[1]), (Some(3.0), Some(2.0), Some(1.0)));
        let p = [1.0, 4.0, 2.0, 8.0, 5.0];
        let b = bollinger(&p, 3, 0.0).unwrap();
        assert_eq!(b.upper, sma(&p, 3).unwrap());
        assert_eq!(b.lower, b.middle);
        assert!(bollinger(&p, 3, -1.0).is_err());
        assert!(bollinger(&p, 0, 1.0).is_err());
    }

    #[test]
    fn feature_matrix_row_count_and_names() {
        let closes: Vec<f64> = (0..40).map(|i| 1.0 + 0.01 * ((i * 7 % 5) as f64)).collect();
        let cfg = IndicatorConfig { sma_n: 14, rsi_n: 14, bb_n: 14, bb_k: 2.0 };
        let fm = build_feature_matrix(&series_from(&closes), &cfg).unwrap();
        assert_eq!(fm.len(), 40 - 15);
        assert_eq!(fm.feature_names, FEATURE_NAMES.to_vec());
        assert_eq!(fm.timestamps[0], 14 * 3600);
        assert_eq!(fm.target_timestamps[0], 15 * 3600);
        assert_eq!(fm.targets[0], closes[15]);
        assert_eq!(fm.targets.last(), closes.last());
    }

    #[test]
    fn constant_series_features() {
        let fm = build_feature_matrix(&series_from(&[1.25; 30]), &IndicatorConfig::default()).unwrap();
        for row in &fm.rows {
            assert_eq!(row, &vec![1.25, 1.25, 50.0, 1.25, 1.25, 1.25]);
        }
    }

    #[test]
    fn feature_matrix_too_short_reports_minimum() {
        let cfg = IndicatorConfig::default();
        let err = build_feature_matrix(&series_from(&[1.0; 21]), &cfg).unwrap_err();
        assert_eq!(err, Error::InsufficientData { required: 22, actual: 21, what: "feature matrix (bars)" });
        assert_eq!(build_feature_matrix(&series_from(&[1.0; 22]), &cfg).unwrap().len(), 2);
    }

    #[test]
    fn price_series_rejects_bad_input() {
        let c = Candle { timestamp: 0, open: 1.0, high: 1.0, low: 1.0, close: 1.0, volume: 0.0 };
        assert!(PriceSeries::new(vec![]).is_err());
        assert!(PriceSeries::new(vec![c, c]).is_err());
        assert!(PriceSeries::new(vec![Candle { low: 1.1, ..c }]).is_err());
        assert!(PriceSeries::new(vec![Candle { high: 0.9, ..c }]).is_err());
        assert!(PriceSeries::new(vec![Candle { close: f64::NAN, ..c }]).is_err());
        assert!(PriceSeries::new(vec![Candle { close: -1.0, ..c }]).is_err());
    }

    proptest! {
        #[test]
        fn indicators_match_brute_force(
            prices in prop::collection::vec(0.5f64..2.0, 2..120),
            n in 1usize..30,
            k in 0.0f64..3.0,
        ) {
            let s = sma(&prices, n).unwrap();
            let b = bollinger(&prices, n, k).unwrap();
            for t in 0..prices.len() {
                if t + 1 < n {
                    prop_assert!(s[t].is_none() && b.upper[t].is_none());
                    continue;
                }
                let w = &prices[t + 1 - n..=t];
                let m = naive_mean(w);
                let sd = naive_mean(&w.iter().map(|p| (p - m).powi(2)).collect::<Vec<_>>()).sqrt();
                prop_assert!((s[t].unwrap() - m).abs() < 1e-9);
                prop_assert!((b.upper[t].unwrap() - (m + k * sd)).abs() < 1e-9);
                prop_assert!((b.lower[t].unwrap() - (m - k * sd)).abs() < 1e-9);
                prop_assert!(b.lower[t] <= b.middle[t] && b.middle[t] <= b.upper[t]);
            }
            if prices.len() > n {
                let r = rsi(&prices, n).unwrap();
                for t in n..prices.len() {
                    let v = r[t].unwrap();
                    prop_assert!((v - naive_rsi(&prices[t - n..=t])).abs() < 1e-9);
                    prop_assert!((0.0..=100.0).contains(&v));
                }
            }
        }

        #[test]
        fn shift_moves_averages_and_keeps_rsi(
            prices in prop::collection::vec(0.5f64..2.0, 25..60),
            c in 0.0f64..5.0,
        ) {
            let shifted: Vec<f64> = prices.iter().map(|p| p + c).collect();
            let (b0, b1) = (bollinger(&prices, 5, 2.0).unwrap(), bollinger(&shifted, 5, 2.0).unwrap());
            let (r0, r1) = (rsi(&prices, 5).unwrap(), rsi(&shifted, 5).unwrap());
            for t in 5..prices.len() {
                prop_assert!((b1.middle[t].unwrap() - b0.middle[t].unwrap() - c).abs() < 1e-9);
                prop_assert!((b1.upper[t].unwrap() - b0.upper[t].unwrap() - c).abs() < 1e-9);
                prop_assert!((b1.lower[t].unwrap() - b0.lower[t].unwrap() - c).abs() < 1e-9);
                prop_assert!((r1[t].unwrap() - r0[t].unwrap()).abs() < 1e-6);
            }
        }

        #[test]
        fn feature_rows_are_finite(prices in prop::collection::vec(0.5f64..2.0, 30..80)) {
            let fm = build_feature_matrix(&series_from(&prices), &IndicatorConfig::default()).unwrap();
            prop_assert_eq!(fm.len(), prices.len() - 20);
            prop_assert!(fm.rows.iter().flatten().all(|v| v.is_finite()));
            prop_assert_eq!(fm.targets.len(), fm.timestamps.len());
        }
    }
}
