//! CSV readers and writers.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use fxcast_core::evaluation::{ComparisonRow, EvalReport};
use fxcast_core::indicators::{Candle, FeatureMatrix, PriceSeries};
use fxcast_core::model::Prediction;
use fxcast_core::training::TrainReport;

use crate::error::{AppError, AppResult};

pub const OHLCV_HEADER: [&str; 6] = ["timestamp", "open", "high", "low", "close", "volume"];

/// Reads an OHLCV file. Row numbers in errors are 1-based file lines, the
/// header being row 1.
pub fn load_ohlc_csv(path: impl AsRef<Path>) -> AppResult<PriceSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_ohlc(file, path)
}

pub fn read_ohlc<R: Read>(reader: R, path: &Path) -> AppResult<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| AppError::Format { path: path.into(), message: e.to_string() })?.clone();
    if header.iter().ne(OHLCV_HEADER.iter().copied()) {
        return Err(AppError::Header {
            path: path.into(),
            expected: OHLCV_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut candles: Vec<Candle> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i as u64 + 2;
        let record = record.map_err(|e| AppError::Format { path: path.into(), message: format!("row {row}: {e}") })?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let parse_err = |c: usize| AppError::Parse {
            path: path.into(),
            row,
            column: OHLCV_HEADER[c].to_string(),
            value: field(c).to_string(),
        };
        let timestamp: i64 = field(0).parse().map_err(|_| parse_err(0))?;
        let mut vals = [0.0f64; 5];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = field(k + 1).parse().map_err(|_| parse_err(k + 1))?;
        }
        let candle = Candle { timestamp, open: vals[0], high: vals[1], low: vals[2], close: vals[3], volume: vals[4] };
        if let Some(prev) = candles.last() {
            if timestamp <= prev.timestamp {
                return Err(AppError::Ordering { path: path.into(), row, timestamp });
            }
        }
        candle
            .validate()
            .map_err(|e| AppError::Validation { path: path.into(), row, message: e.to_string() })?;
        candles.push(candle);
    }
    if candles.is_empty() {
        return Err(AppError::Format { path: path.into(), message: "no data rows".into() });
    }
    Ok(PriceSeries::new(candles)?)
}

/// Writes prices in shortest round-trip form, so a reload is exact.
pub fn write_ohlc_csv(series: &PriceSeries, path: impl AsRef<Path>) -> AppResult<()> {
    let path = path.as_ref();
    write_file(path, |w| {
        writeln!(w, "{}", OHLCV_HEADER.join(","))?;
        for c in series.candles() {
            writeln!(w, "{},{},{},{},{},{}", c.timestamp, c.open, c.high, c.low, c.close, c.volume)?;
        }
        Ok(())
    })
}

pub fn write_features_csv(features: &FeatureMatrix, path: impl AsRef<Path>) -> AppResult<()> {
    let path = path.as_ref();
    write_file(path, |w| {
        writeln!(w, "timestamp,{},target", features.feature_names.join(","))?;
        for ((ts, row), target) in features.timestamps.iter().zip(&features.rows).zip(&features.targets) {
            write!(w, "{ts}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{target}")?;
        }
        Ok(())
    })
}

/// `x` with 10 significant digits, in plain decimal where that is readable.
pub fn fmt_sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.9e}")
    }
}

/// Predicted-vs-actual CSV: `timestamp,actual,predicted`, rows sorted by time.
pub fn export_predictions_csv(rows: &[Prediction], path: impl AsRef<Path>) -> AppResult<()> {
    let path = path.as_ref();
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|p| p.timestamp);
    write_file(path, |w| {
        writeln!(w, "timestamp,actual,predicted")?;
        for p in &sorted {
            writeln!(w, "{},{},{}", p.timestamp, fmt_sig10(p.actual), fmt_sig10(p.predicted))?;
        }
        Ok(())
    })
}

pub fn load_predictions_csv(path: impl AsRef<Path>) -> AppResult<Vec<Prediction>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| AppError::Format { path: path.into(), message: e.to_string() })?;
    let header = rdr.headers().map_err(|e| AppError::Format { path: path.into(), message: e.to_string() })?.clone();
    if header.iter().ne(["timestamp", "actual", "predicted"]) {
        return Err(AppError::Header {
            path: path.into(),
            expected: "timestamp,actual,predicted".into(),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i as u64 + 2;
        let record = record.map_err(|e| AppError::Format { path: path.into(), message: format!("row {row}: {e}") })?;
        let cols = ["timestamp", "actual", "predicted"];
        let get = |c: usize| record.get(c).unwrap_or("");
        let err = |c: usize| AppError::Parse { path: path.into(), row, column: cols[c].into(), value: get(c).into() };
        out.push(Prediction {
            timestamp: get(0).parse().map_err(|_| err(0))?,
            actual: get(1).parse().map_err(|_| err(1))?,
            predicted: get(2).parse().map_err(|_| err(2))?,
        });
    }
    Ok(out)
}

/// `epoch,train_loss,val_loss`; `val_loss` is empty without a validation slice.
pub fn write_loss_history(report: &TrainReport, path: impl AsRef<Path>) -> AppResult<()> {
    let path = path.as_ref();
    write_file(path, |w| {
        writeln!(w, "epoch,train_loss,val_loss")?;
        for (i, train) in report.train_losses.iter().enumerate() {
            match report.val_losses.get(i) {
                Some(v) => writeln!(w, "{},{train:e},{v:e}", i + 1)?,
                None => writeln!(w, "{},{train:e},", i + 1)?,
            }
        }
        Ok(())
    })
}

/// `variant,mse,rmse,r_square,n` with full precision; `r_square` is empty when undefined.
pub fn write_reports_csv(reports: &[EvalReport], path: impl AsRef<Path>) -> AppResult<()> {
    let path = path.as_ref();
    write_file(path, |w| {
        writeln!(w, "variant,mse,rmse,r_square,n")?;
        for rep in reports {
            let r2 = rep.r_square.map(|v| format!("{v:e}")).unwrap_or_default();
            writeln!(w, "{},{:e},{:e},{r2},{}", rep.model, rep.mse, rep.rmse, rep.n)?;
        }
        Ok(())
    })
}

pub fn write_comparison_csv(rows: &[ComparisonRow], path: impl AsRef<Path>) -> AppResult<()> {
    let reports: Vec<EvalReport> = rows.iter().map(|r| r.report.clone()).collect();
    write_reports_csv(&reports, path)
}

pub(crate) fn write_file<F>(path: &Path, body: F) -> AppResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| AppError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> AppResult<PriceSeries> {
        read_ohlc(text.as_bytes(), Path::new("mem.csv"))
    }

    const HEAD: &str = "timestamp,open,high,low,close,volume\n";

    #[test]
    fn two_row_file() {
        let s = parse(&format!("{HEAD}0,1.0,1.2,0.9,1.1,10\n3600,1.1,1.3,1.0,1.2,5\n")).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.candles()[1].close, 1.2);
    }

    #[test]
    fn duplicated_timestamp_names_row_three() {
        let err = parse(&format!("{HEAD}0,1,1,1,1,1\n0,1,1,1,1,1\n")).unwrap_err();
        assert!(matches!(err, AppError::Ordering { row: 3, .. }), "{err}");
        assert!(err.to_string().contains("row 3"));
    }

    #[test]
    fn low_above_close_names_row_five() {
        let mut text = String::from(HEAD);
        for t in 0..3 {
            text.push_str(&format!("{},1,1,1,1,1\n", t * 3600));
        }
        text.push_str("10800,1.0,1.2,1.05,1.01,1\n");
        let err = parse(&text).unwrap_err();
        assert!(matches!(err, AppError::Validation { row: 5, .. }), "{err}");
    }

    #[test]
    fn header_and_parse_errors() {
        assert!(matches!(parse("time,open,high,low,close\n0,1,1,1,1\n"), Err(AppError::Header { .. })));
        assert!(matches!(parse(""), Err(AppError::Header { .. })));
        let err = parse(&format!("{HEAD}0,1,1,x,1,1\n")).unwrap_err();
        match err {
            AppError::Parse { row, column, .. } => assert_eq!((row, column.as_str()), (2, "low")),
            other => panic!("{other}"),
        }
        assert!(parse(HEAD).is_err());
        assert!(parse(&format!("{HEAD}0,1,1,1,1\n")).is_err());
    }

    #[test]
    fn sig10_formatting() {
        assert_eq!(fmt_sig10(1.23456789012345), "1.234567890");
        assert_eq!(fmt_sig10(0.00123456789012), "0.001234567890");
        assert_eq!(fmt_sig10(1234.5), "1234.500000");
        assert_eq!(fmt_sig10(0.0), "0");
        let x = 1.0e-9 * std::f64::consts::PI;
        assert!((fmt_sig10(x).parse::<f64>().unwrap() - x).abs() < 1e-18);
    }
}
