//! File formats and the command-line driver for `fxcast-core`.
//!
//! * OHLCV input CSV: `timestamp,open,high,low,close,volume`
//! * features, predictions, loss-history and comparison CSVs
//! * versioned JSON checkpoints and flat JSON run configs

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;

pub use error::{AppError, AppResult};
