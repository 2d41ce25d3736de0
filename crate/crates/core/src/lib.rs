//! Next-bar price forecasting from technical-indicator features.
//!
//! The crate is `no_std` (with `alloc`) and contains every numerical piece of
//! the pipeline: indicator features, the LSTM / causal Conv1D / attention /
//! dense layers with hand-derived backward passes, the hybrid and baseline
//! model variants, min-max scaling and windowing, Adam training, and
//! MSE / RMSE / R² evaluation. File formats and the command line live in the
//! `fxcast` crate.

#![allow(clippy::needless_range_loop)]
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod indicators;
pub mod math;
pub mod model;
pub mod nn;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
pub use math::Matrix;
