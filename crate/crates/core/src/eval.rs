//! Event reconstruction and tolerance-based matching.

use std::cmp::Ordering;
use std::io::Write;

use crate::error::Result;
use crate::postprocess::PeakList;
use crate::scalar::Scalar;
use crate::series::{AdjustedEventSet, Event};

/// One interval of duration `w_s` centered on every peak. Overlaps are kept.
pub fn peaks_to_events<T: Scalar>(peaks: &PeakList<T>, w_s: T) -> Vec<Event<T>> {
    let half = w_s / T::lit(2.0);
    peaks
        .peaks
        .iter()
        .map(|p| Event::new(p.time - half, p.time + half))
        .collect()
}

/// A matched (predicted, truth) pair by midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair<T: Scalar = f64> {
    pub predicted: T,
    pub truth: T,
}

impl<T: Scalar> MatchedPair<T> {
    pub fn delta(&self) -> T {
        self.predicted - self.truth
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport<T: Scalar = f64> {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    /// Matched pairs ordered by truth midpoint.
    pub pairs: Vec<MatchedPair<T>>,
    /// `predicted - truth` for every matched pair, same order as `pairs`.
    pub deltas: Vec<T>,
    pub delta_mean: Option<T>,
    pub delta_std: Option<T>,
}

impl<T: Scalar> MatchReport<T> {
    fn from_counts(tp: usize, fp: usize, fn_: usize, mut pairs: Vec<MatchedPair<T>>) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                T::zero()
            } else {
                T::from_usize_lossy(num) / T::from_usize_lossy(den)
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > T::zero() {
            T::lit(2.0) * precision * recall / (precision + recall)
        } else {
            T::zero()
        };
        pairs.sort_by(|a, b| cmp(a.truth, b.truth));
        let deltas: Vec<T> = pairs.iter().map(MatchedPair::delta).collect();
        let (delta_mean, delta_std) = match delta_stats(&deltas) {
            Some((m, s)) => (Some(m), Some(s)),
            None => (None, None),
        };
        Self {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f1,
            pairs,
            deltas,
            delta_mean,
            delta_std,
        }
    }

    /// `key=value` lines.
    pub fn write_summary<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "true_positives={}", self.true_positives)?;
        writeln!(w, "false_positives={}", self.false_positives)?;
        writeln!(w, "false_negatives={}", self.false_negatives)?;
        writeln!(w, "precision={}", self.precision)?;
        writeln!(w, "recall={}", self.recall)?;
        writeln!(w, "f1={}", self.f1)?;
        let opt = |v: Option<T>| v.map_or_else(String::new, |x| x.to_string());
        writeln!(w, "delta_mean={}", opt(self.delta_mean))?;
        writeln!(w, "delta_std={}", opt(self.delta_std))?;
        Ok(())
    }

    /// `truth_mid,predicted_mid,delta` rows for histogramming.
    pub fn write_deltas<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "truth_mid,predicted_mid,delta")?;
        for p in &self.pairs {
            writeln!(w, "{},{},{}", p.truth, p.predicted, p.delta())?;
        }
        Ok(())
    }
}

fn cmp<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Greedy one-to-one matching of midpoints within `tolerance`.
///
/// Candidate pairs are accepted closest-first; ties go to the earlier truth
/// midpoint, then the earlier predicted midpoint.
pub fn match_midpoints<T: Scalar>(predicted: &[T], truth: &[T], tolerance: T) -> MatchReport<T> {
    let mut pred_sorted: Vec<(T, usize)> = predicted.iter().copied().zip(0..).collect();
    pred_sorted.sort_by(|a, b| cmp(a.0, b.0));

    let mut candidates: Vec<(T, usize, usize)> = Vec::new();
    for (ti, &t) in truth.iter().enumerate() {
        let lo = pred_sorted.partition_point(|&(p, _)| p < t - tolerance);
        for &(p, pi) in &pred_sorted[lo..] {
            if p > t + tolerance {
                break;
            }
            if (p - t).abs() <= tolerance {
                candidates.push(((p - t).abs(), ti, pi));
            }
        }
    }
    candidates.sort_by(|a, b| {
        cmp(a.0, b.0)
            .then_with(|| cmp(truth[a.1], truth[b.1]))
            .then_with(|| cmp(predicted[a.2], predicted[b.2]))
    });

    let mut truth_used = vec![false; truth.len()];
    let mut pred_used = vec![false; predicted.len()];
    let mut pairs = Vec::new();
    for (_, ti, pi) in candidates {
        if !truth_used[ti] && !pred_used[pi] {
            truth_used[ti] = true;
            pred_used[pi] = true;
            pairs.push(MatchedPair {
                predicted: predicted[pi],
                truth: truth[ti],
            });
        }
    }
    let tp = pairs.len();
    MatchReport::from_counts(tp, predicted.len() - tp, truth.len() - tp, pairs)
}

/// Matches predicted events against adjusted ground truth on midpoints.
pub fn match_events<T: Scalar>(
    predicted: &[Event<T>],
    truth: &AdjustedEventSet<T>,
    tolerance: T,
) -> MatchReport<T> {
    let pred: Vec<T> = predicted.iter().map(Event::midpoint).collect();
    match_midpoints(&pred, truth.midpoints(), tolerance)
}

/// Mean and population standard deviation; `None` when empty.
pub fn delta_stats<T: Scalar>(deltas: &[T]) -> Option<(T, T)> {
    if deltas.is_empty() {
        return None;
    }
    let n = T::from_usize_lossy(deltas.len());
    let mean = deltas.iter().copied().sum::<T>() / n;
    let var = deltas.iter().map(|&d| (d - mean) * (d - mean)).sum::<T>() / n;
    Some((mean, var.sqrt()))
}
