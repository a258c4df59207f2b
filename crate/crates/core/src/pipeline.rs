//! End-to-end orchestration: label, train, tune, detect, evaluate.
//!
//! The series is split temporally at step `floor(train_fraction * N)`.
//! Windows that straddle the boundary are dropped. Tuning runs on the
//! trailing validation slice of the training windows; detection and scoring
//! run on the test windows.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::eval::{peaks_to_events, MatchReport};
use crate::labeling::{op_series, OpSeries};
use crate::model::{train, validation_split, Activation, LossHistory, Regressor, TrainConfig};
use crate::postprocess::{find_peaks, smooth, PeakList};
use crate::scalar::{OverlapField, Scalar};
use crate::series::{adjust_events, AdjustedEventSet, Event, Midpoints, TimeSeries};
use crate::tune::{evaluate, tune, TuneGrid, TuneParams, TuneResult};
use crate::windowing::{build_windows, MinMaxScaler, WindowMatrix};

/// Window index ranges of the temporal split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// Windows entirely before the boundary.
    pub train: Range<usize>,
    /// Leading part of `train` used for gradient steps.
    pub fit: Range<usize>,
    /// Trailing part of `train` held out for validation and tuning.
    pub validation: Range<usize>,
    /// Windows entirely at or after the boundary.
    pub test: Range<usize>,
}

impl Split {
    pub fn new(n_steps: usize, w: usize, train_fraction: f64, validation_fraction: f64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        if w > n_steps {
            return Err(Error::WindowTooLarge { w, n: n_steps });
        }
        let boundary = (train_fraction * n_steps as f64).floor() as usize;
        let n_windows = n_steps - w + 1;
        let train_end = (boundary + 1).saturating_sub(w);
        let test_start = boundary.min(n_windows);
        if train_end < 2 || test_start >= n_windows {
            return Err(Error::InvalidArgument(format!(
                "split at step {boundary} leaves too few windows of size {w} on one side"
            )));
        }
        let (fit, validation) = validation_split(train_end, validation_fraction);
        Ok(Self {
            train: 0..train_end,
            fit,
            validation,
            test: test_start..n_windows,
        })
    }
}

/// Events whose midpoints fall between the first and last partition
/// mid-times of `range`.
pub fn truth_in_range<T: Scalar>(
    truth: &AdjustedEventSet<T>,
    start_times: &[T],
    w_s: T,
    range: Range<usize>,
) -> AdjustedEventSet<T> {
    if range.is_empty() {
        return truth.within(T::one(), T::zero());
    }
    let half = w_s / T::lit(2.0);
    truth.within(start_times[range.start] + half, start_times[range.end - 1] + half)
}

/// How post-processing parameters are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Detection<T: Scalar = f64> {
    Fixed(TuneParams<T>),
    Tuned(TuneGrid<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig<T: Scalar = f64> {
    pub w: usize,
    pub hidden_units: usize,
    pub activation: Activation,
    pub train_fraction: f64,
    pub train: TrainConfig,
    pub detection: Detection<T>,
    /// Matching tolerance; `None` means `w_s`.
    pub tolerance: Option<T>,
    pub scale_inputs: bool,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            w: 2,
            hidden_units: 20,
            activation: Activation::Sigmoid,
            train_fraction: 0.7,
            train: TrainConfig::default(),
            detection: Detection::Tuned(TuneGrid::default()),
            tolerance: None,
            scale_inputs: true,
        }
    }
}

/// Labels, raw windows and split for one series.
#[derive(Debug, Clone)]
pub struct Prepared<T: Scalar = f64> {
    pub truth: AdjustedEventSet<T>,
    pub labels: OpSeries<T>,
    pub windows: WindowMatrix<T>,
    pub split: Split,
    pub w_s: T,
}

impl<T: Scalar + OverlapField> Prepared<T> {
    pub fn new(
        series: &TimeSeries<T>,
        events: &impl Midpoints<T>,
        w: usize,
        train_fraction: f64,
        validation_fraction: f64,
    ) -> Result<Self> {
        let w_s = series.partition_duration(w);
        let split = Split::new(series.n_steps(), w, train_fraction, validation_fraction)?;
        let truth = adjust_events(events, w_s)?;
        let labels = op_series(series, &truth, w)?;
        let windows = build_windows(series, w)?;
        Ok(Self {
            truth,
            labels,
            windows,
            split,
            w_s,
        })
    }
}

impl<T: Scalar> Prepared<T> {
    pub fn truth_for(&self, range: Range<usize>) -> AdjustedEventSet<T> {
        truth_in_range(&self.truth, self.windows.start_times(), self.w_s, range)
    }

    /// Windows of `range`, scaled by `scaler` when given.
    pub fn windows_for(&self, range: Range<usize>, scaler: Option<&MinMaxScaler<T>>) -> Result<WindowMatrix<T>> {
        let rows = self.windows.slice_rows(range);
        match scaler {
            Some(s) => rows.apply_scaler(s),
            None => Ok(rows),
        }
    }

    /// Window range the tuner should score: the validation slice, or the
    /// whole training region when the slice holds no ground-truth event.
    pub fn tuning_range(&self) -> Range<usize> {
        if self.truth_for(self.split.validation.clone()).is_empty() {
            self.split.train.clone()
        } else {
            self.split.validation.clone()
        }
    }
}

/// A trained model with the scaler fitted on its training windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained<T: Scalar = f64> {
    pub model: Regressor<T>,
    pub scaler: Option<MinMaxScaler<T>>,
    pub history: LossHistory<T>,
}

impl<T: Scalar> Trained<T> {
    pub fn predict(&self, prepared: &Prepared<T>, range: Range<usize>) -> Result<OpSeries<T>> {
        let rows = prepared.windows_for(range, self.scaler.as_ref())?;
        self.model.predict_series(&rows)
    }
}

pub fn train_on<T: Scalar>(prepared: &Prepared<T>, config: &PipelineConfig<T>) -> Result<Trained<T>> {
    let mut rows = prepared.windows.slice_rows(prepared.split.train.clone());
    let mut scaler = None;
    if config.scale_inputs {
        rows = rows.fit_scaler()?;
        scaler = rows.scaler().cloned();
    }
    let targets = prepared.labels.slice(prepared.split.train.clone());
    let model = Regressor::init(rows.width(), config.hidden_units, config.activation, config.train.seed)?;
    let (model, history) = train(model, &rows, &targets, &config.train)?;
    Ok(Trained { model, scaler, history })
}

/// Detection output on one region.
#[derive(Debug, Clone, PartialEq)]
pub struct Detected<T: Scalar = f64> {
    pub predicted: OpSeries<T>,
    pub smoothed: OpSeries<T>,
    pub peaks: PeakList<T>,
    pub events: Vec<Event<T>>,
}

pub fn detect<T: Scalar>(predicted: OpSeries<T>, params: &TuneParams<T>) -> Detected<T> {
    let smoothed = smooth(&predicted, &params.smoothing());
    let peaks = find_peaks(&smoothed, params.threshold);
    let events = peaks_to_events(&peaks, predicted.duration());
    Detected {
        predicted,
        smoothed,
        peaks,
        events,
    }
}

/// Everything one pipeline run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput<T: Scalar = f64> {
    pub trained: Trained<T>,
    pub tuning: Option<TuneResult<T>>,
    pub params: TuneParams<T>,
    pub test: Detected<T>,
    pub test_truth: AdjustedEventSet<T>,
    pub report: MatchReport<T>,
}

/// Chooses post-processing parameters on the tuning range.
pub fn choose_params<T: Scalar>(
    prepared: &Prepared<T>,
    trained: &Trained<T>,
    detection: &Detection<T>,
    tolerance: T,
) -> Result<(TuneParams<T>, Option<TuneResult<T>>)> {
    match detection {
        Detection::Fixed(p) => Ok((*p, None)),
        Detection::Tuned(grid) => {
            let range = prepared.tuning_range();
            let predicted = trained.predict(prepared, range.clone())?;
            let truth = prepared.truth_for(range);
            let result = tune(&predicted, &truth, grid, tolerance, prepared.w_s)?;
            Ok((result.best, Some(result)))
        }
    }
}

pub fn run<T: Scalar + OverlapField>(
    series: &TimeSeries<T>,
    events: &impl Midpoints<T>,
    config: &PipelineConfig<T>,
) -> Result<PipelineOutput<T>> {
    let prepared = Prepared::new(
        series,
        events,
        config.w,
        config.train_fraction,
        config.train.validation_fraction,
    )?;
    let tolerance = config.tolerance.unwrap_or(prepared.w_s);
    let trained = train_on(&prepared, config)?;
    let (params, tuning) = choose_params(&prepared, &trained, &config.detection, tolerance)?;
    let test_range = prepared.split.test.clone();
    let test = detect(trained.predict(&prepared, test_range.clone())?, &params);
    let test_truth = prepared.truth_for(test_range);
    let report = crate::eval::match_events(&test.events, &test_truth, tolerance);
    debug_assert_eq!(
        report.f1,
        evaluate(&test.predicted, &test_truth, &params, tolerance, prepared.w_s).f1
    );
    Ok(PipelineOutput {
        trained,
        tuning,
        params,
        test,
        test_truth,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_drops_straddling_windows() {
        let s = Split::new(100, 5, 0.7, 0.2).unwrap();
        // Boundary at step 70: training windows end at step 69.
        assert_eq!(s.train, 0..66);
        assert_eq!(s.test, 70..96);
        assert_eq!(s.validation, 53..66);
        assert_eq!(s.fit, 0..53);
        assert!(Split::new(10, 11, 0.7, 0.2).is_err());
        assert!(Split::new(10, 8, 0.7, 0.2).is_err());
        assert!(Split::new(10, 2, 1.0, 0.2).is_err());
    }

    #[test]
    fn truth_restricted_to_region() {
        let truth = AdjustedEventSet::from_midpoints(vec![5.0, 50.0, 90.0], 4.0).unwrap();
        let starts: Vec<f64> = (0..100).map(f64::from).collect();
        let sub = truth_in_range(&truth, &starts, 4.0, 40..80);
        assert_eq!(sub.midpoints(), &[50.0]);
        assert!(truth_in_range(&truth, &starts, 4.0, 3..3).is_empty());
    }
}
