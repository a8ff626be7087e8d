//! Benchmarking toolkit for post-training data quantization and bit-depth
//! reduction around a from-scratch logistic-regression trainer.
//!
//! The pipeline is `split → scale → quantize → cast → timed fit → score`:
//! features are standardized, optionally quantized (quantile transform,
//! decimal rounding or uniform binning), downcast from 64-bit to 32-bit
//! float or integer storage, and a logistic-regression model is trained in
//! the resulting precision while its wall-clock fit time is measured. The
//! output is an accuracy/fit-time table over the technique × precision
//! grid, plus sweep data and a comparison chart.

pub mod bench;
pub mod error;
pub mod io;
pub mod matrix;
pub mod model;
pub mod report;
pub mod transforms;

pub use error::{Error, Result};
pub use matrix::{LabelVector, Matrix, Precision};
