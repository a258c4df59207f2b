//! Regression-based event detection for multivariate time series.
//!
//! Ground-truth events are turned into per-partition overlap labels, a
//! single-hidden-layer network learns to predict those labels from the raw
//! window values, and predicted events are recovered from the smoothed
//! prediction curve by peak picking. Matching against ground truth within a
//! time tolerance yields precision, recall and F1.
//!
//! All numeric types are generic over [`Scalar`] (`f32` or `f64`, defaulting
//! to `f64`). The overlap function also runs over exact rationals through
//! [`OverlapField`].

// `!(x > 0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod eval;
pub mod labeling;
pub mod model;
pub mod pipeline;
pub mod postprocess;
pub mod scalar;
pub mod series;
pub mod tune;
pub mod windowing;

pub use error::{Error, Result};
pub use scalar::{OverlapField, Scalar};

pub use datagen::{generate, Signature, SynthConfig};
pub use eval::{delta_stats, match_events, match_midpoints, peaks_to_events, MatchReport};
pub use labeling::{op_series, op_single, OpSeries};
pub use model::{gradient_check, parameter_count, train, Activation, Optimizer, Regressor, TrainConfig};
pub use pipeline::{Detection, PipelineConfig, PipelineOutput};
pub use postprocess::{find_peaks, gaussian_kernel, smooth, PeakList, SmoothingConfig};
pub use series::{
    adjust_events, labels_to_events, load_events, load_series, AdjustedEventSet, Event, EventSet,
    TimeSeries,
};
pub use tune::{tune, RadiusRule, TuneGrid, TuneParams, TuneResult};
pub use windowing::{build_windows, MinMaxScaler, WindowMatrix};

/// Exact rational used for overlap checks.
pub type Rational = num_rational::Ratio<i64>;

pub type TimeSeries64 = TimeSeries<f64>;
pub type TimeSeries32 = TimeSeries<f32>;
pub type EventSet64 = EventSet<f64>;
pub type EventSet32 = EventSet<f32>;
pub type AdjustedEventSet64 = AdjustedEventSet<f64>;
pub type AdjustedEventSet32 = AdjustedEventSet<f32>;
pub type OpSeries64 = OpSeries<f64>;
pub type OpSeries32 = OpSeries<f32>;
pub type WindowMatrix64 = WindowMatrix<f64>;
pub type WindowMatrix32 = WindowMatrix<f32>;
pub type Regressor64 = Regressor<f64>;
pub type Regressor32 = Regressor<f32>;
pub type MatchReport64 = MatchReport<f64>;
pub type MatchReport32 = MatchReport<f32>;
pub type TuneResult64 = TuneResult<f64>;
pub type TuneResult32 = TuneResult<f32>;
