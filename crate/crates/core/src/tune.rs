//! Exhaustive F1-maximizing search over smoothing width, kernel radius and
//! peak threshold.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{match_events, peaks_to_events, MatchReport};
use crate::labeling::OpSeries;
use crate::postprocess::{find_peaks, smooth, SmoothingConfig};
use crate::scalar::Scalar;
use crate::series::AdjustedEventSet;

/// How kernel radii are chosen for each sigma.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusRule {
    /// Every listed radius is paired with every sigma.
    Explicit(Vec<usize>),
    /// A single radius `ceil(3 * sigma)` per sigma.
    ThreeSigma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneGrid<T: Scalar = f64> {
    pub sigmas: Vec<T>,
    pub radii: RadiusRule,
    pub thresholds: Vec<T>,
}

impl<T: Scalar> Default for TuneGrid<T> {
    /// sigma in {8, 4, 2, 1, 0.5}, radius ceil(3 sigma), h in {0.1, ..., 0.9}.
    ///
    /// Sigmas run from wide to narrow, so among equally scored settings the
    /// first-in-order rule keeps the smoothest one.
    fn default() -> Self {
        Self {
            sigmas: [8.0, 4.0, 2.0, 1.0, 0.5].into_iter().map(T::lit).collect(),
            radii: RadiusRule::ThreeSigma,
            thresholds: (1..=9).map(|k| T::lit(f64::from(k) / 10.0)).collect(),
        }
    }
}

impl<T: Scalar> TuneGrid<T> {
    /// Single-point grid.
    pub fn fixed(params: TuneParams<T>) -> Self {
        Self {
            sigmas: vec![params.sigma],
            radii: RadiusRule::Explicit(vec![params.radius]),
            thresholds: vec![params.threshold],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.thresholds.is_empty() {
            return Err(Error::InvalidArgument("tuning grid lists must be nonempty".into()));
        }
        if self.sigmas.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::InvalidArgument("sigmas must be positive".into()));
        }
        if let RadiusRule::Explicit(radii) = &self.radii {
            if radii.is_empty() || radii.contains(&0) {
                return Err(Error::InvalidArgument("radii must be nonempty and at least 1".into()));
            }
        }
        Ok(())
    }

    /// `(sigma, radius)` pairs in iteration order.
    pub fn kernels(&self) -> Vec<(T, usize)> {
        self.sigmas
            .iter()
            .flat_map(|&s| match &self.radii {
                RadiusRule::Explicit(radii) => radii.iter().map(|&r| (s, r)).collect::<Vec<_>>(),
                RadiusRule::ThreeSigma => {
                    let r = (T::lit(3.0) * s).ceil().to_usize().unwrap_or(1).max(1);
                    vec![(s, r)]
                }
            })
            .collect()
    }

    /// Total number of combinations.
    pub fn len(&self) -> usize {
        self.kernels().len() * self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One post-processing setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneParams<T: Scalar = f64> {
    pub sigma: T,
    pub radius: usize,
    pub threshold: T,
}

impl<T: Scalar> TuneParams<T> {
    pub fn smoothing(&self) -> SmoothingConfig<T> {
        SmoothingConfig::new(self.sigma, self.radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneRow<T: Scalar = f64> {
    pub params: TuneParams<T>,
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult<T: Scalar = f64> {
    pub best: TuneParams<T>,
    pub best_f1: T,
    pub table: Vec<TuneRow<T>>,
}

impl<T: Scalar> TuneResult<T> {
    /// `sigma,radius,threshold,precision,recall,f1` rows in grid order.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sigma,radius,threshold,precision,recall,f1")?;
        for row in &self.table {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row.params.sigma, row.params.radius, row.params.threshold, row.precision, row.recall, row.f1
            )?;
        }
        Ok(())
    }

    /// `key=value` summary of the winning combination.
    pub fn write_best<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sigma={}", self.best.sigma)?;
        writeln!(w, "radius={}", self.best.radius)?;
        writeln!(w, "threshold={}", self.best.threshold)?;
        writeln!(w, "f1={}", self.best_f1)?;
        Ok(())
    }
}

/// Smooth, pick peaks, rebuild events and score them for one setting.
pub fn evaluate<T: Scalar>(
    predicted: &OpSeries<T>,
    truth: &AdjustedEventSet<T>,
    params: &TuneParams<T>,
    tolerance: T,
    w_s: T,
) -> MatchReport<T> {
    let smoothed = smooth(predicted, &params.smoothing());
    let peaks = find_peaks(&smoothed, params.threshold);
    match_events(&peaks_to_events(&peaks, w_s), truth, tolerance)
}

/// Scores every grid point; the best is the first in grid order (sigmas,
/// then radii, then thresholds) attaining the maximum F1.
pub fn tune<T: Scalar>(
    predicted: &OpSeries<T>,
    truth: &AdjustedEventSet<T>,
    grid: &TuneGrid<T>,
    tolerance: T,
    w_s: T,
) -> Result<TuneResult<T>> {
    grid.validate()?;
    if predicted.is_empty() {
        return Err(Error::InvalidArgument("cannot tune on an empty series".into()));
    }
    if !(tolerance > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let kernels = grid.kernels();
    let table: Vec<TuneRow<T>> = kernels
        .par_iter()
        .map(|&(sigma, radius)| {
            let smoothed = smooth(predicted, &SmoothingConfig::new(sigma, radius));
            grid.thresholds
                .iter()
                .map(|&threshold| {
                    let peaks = find_peaks(&smoothed, threshold);
                    let report = match_events(&peaks_to_events(&peaks, w_s), truth, tolerance);
                    TuneRow {
                        params: TuneParams { sigma, radius, threshold },
                        precision: report.precision,
                        recall: report.recall,
                        f1: report.f1,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let mut best = 0;
    for (k, row) in table.iter().enumerate() {
        if row.f1 > table[best].f1 {
            best = k;
        }
    }
    Ok(TuneResult {
        best: table[best].params,
        best_f1: table[best].f1,
        table,
    })
}
