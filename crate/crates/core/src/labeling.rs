//! Overlap labels: the regression target attached to every partition.
//!
//! A partition `p_i` spans `[t_i, t_i + w_s]`. Its label against an adjusted
//! event `[tau1, tau1 + w_s]` is the Jaccard ratio of the two intervals,
//! gated to zero unless `|t_i - tau1| < w_s`. Over a whole event set the
//! label is the maximum across events.

use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{OverlapField, Scalar};
use crate::series::{AdjustedEventSet, Table, TimeSeries};

/// Overlap of the partition starting at `t_i` with the adjusted event
/// `[tau1, tau2]`, where `tau2 - tau1` must equal `w_s`.
pub fn op_single<F: OverlapField>(t_i: F, tau1: F, tau2: F, w_s: F) -> Result<F> {
    let magnitude = max_abs(max_abs(tau1, tau2), w_s);
    if !F::approx_eq(tau2 - tau1, w_s, magnitude) {
        return Err(Error::DurationMismatch {
            actual: to_f64_lossy(tau2 - tau1),
            expected: to_f64_lossy(w_s),
        });
    }
    if (t_i - tau1).abs() >= w_s {
        return Ok(F::zero());
    }
    let end = t_i + w_s;
    if t_i <= tau1 {
        // Intersection [tau1, t_i + w_s], union [t_i, tau2].
        Ok((end - tau1) / (tau2 - t_i))
    } else if t_i < tau2 {
        // Intersection [t_i, tau2], union [tau1, t_i + w_s].
        Ok((tau2 - t_i) / (end - tau1))
    } else {
        Ok(F::zero())
    }
}

fn max_abs<F: OverlapField>(a: F, b: F) -> F {
    let (a, b) = (a.abs(), b.abs());
    if a > b {
        a
    } else {
        b
    }
}

fn to_f64_lossy<F: OverlapField>(x: F) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Per-partition labels aligned with partition start times.
#[derive(Debug, Clone, PartialEq)]
pub struct OpSeries<T: Scalar = f64> {
    values: Vec<T>,
    start_times: Vec<T>,
    w: usize,
    duration: T,
}

impl<T: Scalar> OpSeries<T> {
    pub fn new(values: Vec<T>, start_times: Vec<T>, w: usize, duration: T) -> Result<Self> {
        if values.len() != start_times.len() {
            return Err(Error::DimensionMismatch {
                expected: start_times.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            values,
            start_times,
            w,
            duration,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn start_times(&self) -> &[T] {
        &self.start_times
    }

    /// Window size in steps.
    pub fn w(&self) -> usize {
        self.w
    }

    /// Partition duration `w_s`.
    pub fn duration(&self) -> T {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mid-time `t_k + w_s / 2` of partition `k`.
    pub fn mid_time(&self, k: usize) -> T {
        self.start_times[k] + self.duration / T::lit(2.0)
    }

    /// Same timestamps, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(values, self.start_times.clone(), self.w, self.duration)
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            values: self.values[range.clone()].to_vec(),
            start_times: self.start_times[range].to_vec(),
            w: self.w,
            duration: self.duration,
        }
    }

    /// Writes `partition_start_time,op` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["partition_start_time", "op"])?;
        for (t, v) in self.start_times.iter().zip(&self.values) {
            wtr.write_record([t.to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn read_csv<R: Read>(reader: R, w: usize, duration: T) -> Result<Self> {
        let table = Table::read(reader)?;
        Self::new(
            table.column("op")?,
            table.column("partition_start_time")?,
            w,
            duration,
        )
    }
}

/// Labels every partition of `w` steps against the adjusted events.
pub fn op_series<T: Scalar + OverlapField>(
    series: &TimeSeries<T>,
    events: &AdjustedEventSet<T>,
    w: usize,
) -> Result<OpSeries<T>> {
    let n = series.n_steps();
    if w > n {
        return Err(Error::WindowTooLarge { w, n });
    }
    if w < 2 {
        return Err(Error::InvalidArgument(format!("window size must be at least 2, got {w}")));
    }
    let w_s = series.partition_duration(w);
    if (events.duration() - w_s).abs() > T::rel_tol() * w_s {
        return Err(Error::DurationMismatch {
            actual: events.duration().to_f64().unwrap_or(f64::NAN),
            expected: w_s.to_f64().unwrap_or(f64::NAN),
        });
    }
    let starts: Vec<T> = events.events().iter().map(|e| e.start).collect();
    let count = n - w + 1;
    let mut values = Vec::with_capacity(count);
    let mut start_times = Vec::with_capacity(count);
    for i in 0..count {
        let t_i = series.time(i);
        // Only events with |t_i - tau1| < w_s can contribute.
        let first = starts.partition_point(|&s| s <= t_i - w_s);
        let mut best = T::zero();
        for (k, &s) in starts.iter().enumerate().skip(first) {
            if s >= t_i + w_s {
                break;
            }
            let e = events.event(k);
            let v = op_single(t_i, e.start, e.end, w_s)?;
            if v > best {
                best = v;
            }
        }
        values.push(best);
        start_times.push(t_i);
    }
    OpSeries::new(values, start_times, w, w_s)
}

/// Independent overlap oracles for tests.
#[cfg(any(test, feature = "oracle"))]
pub mod oracle {
    use crate::scalar::OverlapField;

    /// Jaccard ratio of `[t_i, t_i + w_s]` and `[tau1, tau2]` by interval
    /// arithmetic, zero unless `|t_i - tau1| < w_s`.
    pub fn op_oracle<F: OverlapField>(t_i: F, tau1: F, tau2: F, w_s: F) -> F {
        if (t_i - tau1).abs() >= w_s {
            return F::zero();
        }
        let (a0, a1) = (t_i, t_i + w_s);
        let lo = if a0 > tau1 { a0 } else { tau1 };
        let hi = if a1 < tau2 { a1 } else { tau2 };
        let inter = if hi > lo { hi - lo } else { F::zero() };
        let union = (a1 - a0) + (tau2 - tau1) - inter;
        inter / union
    }

    /// Jaccard ratio measured by counting grid cells of width `grid_step`
    /// (midpoint rule); converges to [`op_oracle`] as the grid shrinks.
    pub fn op_oracle_sampled(t_i: f64, tau1: f64, tau2: f64, w_s: f64, grid_step: f64) -> f64 {
        if (t_i - tau1).abs() >= w_s {
            return 0.0;
        }
        let lo = t_i.min(tau1);
        let hi = (t_i + w_s).max(tau2);
        let cells = ((hi - lo) / grid_step).ceil() as usize;
        let (mut inter, mut union) = (0usize, 0usize);
        for c in 0..cells {
            let x = lo + (c as f64 + 0.5) * grid_step;
            let in_p = x >= t_i && x <= t_i + w_s;
            let in_e = x >= tau1 && x <= tau2;
            inter += usize::from(in_p && in_e);
            union += usize::from(in_p || in_e);
        }
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::{op_oracle, op_oracle_sampled};
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn closed_form(t: f64, tau1: f64, w_s: f64) -> f64 {
        let d = (t - tau1).abs();
        if d >= w_s {
            0.0
        } else {
            (w_s - d) / (w_s + d)
        }
    }

    #[test]
    fn reference_points() {
        assert_eq!(op_single(10.0, 10.0, 14.0, 4.0).unwrap(), 1.0);
        assert!((op_single(12.0f64, 10.0, 14.0, 4.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(op_single(6.0, 10.0, 14.0, 4.0).unwrap(), 0.0);
        assert!((op_single(8.0f64, 10.0, 14.0, 4.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        // Open upper end of the second branch.
        assert_eq!(op_single(14.0, 10.0, 14.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn exact_in_rationals() {
        let r = |n: i64, d: i64| Ratio::new(n, d);
        let (tau1, tau2, w_s) = (r(7, 3), r(7, 3) + r(5, 2), r(5, 2));
        assert_eq!(op_single(tau1, tau1, tau2, w_s).unwrap(), r(1, 1));
        let mid = (tau1 + tau2) / r(2, 1);
        assert_eq!(op_single(mid, tau1, tau2, w_s).unwrap(), r(1, 3));
        assert_eq!(op_single(tau1 - w_s / r(2, 1), tau1, tau2, w_s).unwrap(), r(1, 3));
        assert_eq!(op_single(tau1 - w_s, tau1, tau2, w_s).unwrap(), r(0, 1));
        // Exact agreement with the oracle on a rational lattice.
        for k in -30..=30 {
            let t = tau1 + r(k, 12);
            assert_eq!(
                op_single(t, tau1, tau2, w_s).unwrap(),
                op_oracle(t, tau1, tau2, w_s)
            );
        }
    }

    #[test]
    fn duration_mismatch() {
        assert!(matches!(
            op_single(0.0, 0.0, 5.0, 4.0),
            Err(Error::DurationMismatch { .. })
        ));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(op_oracle(3.0, 3.0, 5.0, 2.0), 1.0);
        let v = op_oracle(10.0f64 - 0.9 * 4.0, 10.0, 14.0, 4.0);
        assert!((v - 0.1 / 1.9).abs() < 1e-12);
        assert_eq!(op_oracle(6.0, 10.0, 14.0, 4.0), 0.0);
        let sampled = op_oracle_sampled(8.0, 10.0, 14.0, 4.0, 4.0 / 4000.0);
        assert!((sampled - 1.0 / 3.0).abs() < 1e-3);
    }

    fn series(n: usize, s: f64) -> TimeSeries {
        TimeSeries::new(0.0, s, vec![0.0; n], vec!["x".into()]).unwrap()
    }

    #[test]
    fn op_series_examples() {
        let ts = series(20, 1.0);
        let empty = AdjustedEventSet::from_midpoints(vec![], 2.0).unwrap();
        let op = op_series(&ts, &empty, 3).unwrap();
        assert_eq!(op.len(), 18);
        assert!(op.values().iter().all(|&v| v == 0.0));

        // Event with tau1 = t_5 (zero-based index 5), w = 3, w_s = 2.
        let ev = AdjustedEventSet::from_midpoints(vec![6.0], 2.0).unwrap();
        let op = op_series(&ts, &ev, 3).unwrap();
        assert_eq!(op.values()[5], 1.0);
        let side = (2.0 - 1.0) / (2.0 + 1.0);
        assert!((op.values()[4] - side).abs() < 1e-15);
        assert!((op.values()[6] - side).abs() < 1e-15);

        assert!(matches!(
            op_series(&ts, &ev, 21),
            Err(Error::WindowTooLarge { w: 21, n: 20 })
        ));
    }

    #[test]
    fn two_tents() {
        let ts = series(60, 0.5);
        let w = 9;
        let w_s = 4.0;
        let ev = AdjustedEventSet::from_midpoints(vec![10.0, 18.0], w_s).unwrap();
        let op = op_series(&ts, &ev, w).unwrap();
        // Brute force over every partition and every event.
        for (k, &v) in op.values().iter().enumerate() {
            let t = op.start_times()[k];
            let expect = ev
                .events()
                .iter()
                .map(|e| closed_form(t, e.start, w_s))
                .fold(0.0, f64::max);
            assert!((v - expect).abs() < 1e-12);
        }
        let peaks: Vec<usize> = (0..op.len()).filter(|&k| op.values()[k] == 1.0).collect();
        assert_eq!(peaks.len(), 2);
        for &p in &peaks {
            for d in 1..8 {
                assert_eq!(op.values()[p - d], op.values()[p + d]);
            }
        }
    }

    #[test]
    fn csv_roundtrip() {
        let ts = series(10, 0.1);
        let ev = AdjustedEventSet::from_midpoints(vec![0.4], 0.2).unwrap();
        let op = op_series(&ts, &ev, 3).unwrap();
        let mut buf = Vec::new();
        op.write_csv(&mut buf).unwrap();
        let back = OpSeries::read_csv(buf.as_slice(), 3, op.duration()).unwrap();
        assert_eq!(back, op);
    }

    proptest! {
        #[test]
        fn in_unit_range(t in -100.0..100.0f64, tau1 in -100.0..100.0f64, w_s in 0.01..50.0f64) {
            let v = op_single(t, tau1, tau1 + w_s, w_s).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn symmetric(u_frac in 0.0..1.0f64, tau1 in -100.0..100.0f64, w_s in 0.01..50.0f64) {
            let u = u_frac * w_s;
            let a = op_single(tau1 + u, tau1, tau1 + w_s, w_s).unwrap();
            let b = op_single(tau1 - u, tau1, tau1 + w_s, w_s).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn matches_closed_form(t in -100.0..100.0f64, tau1 in -100.0..100.0f64, w_s in 0.01..50.0f64) {
            let v = op_single(t, tau1, tau1 + w_s, w_s).unwrap();
            prop_assert!((v - closed_form(t, tau1, w_s)).abs() < 1e-12);
        }

        #[test]
        fn strictly_decreasing(a in 0.0..1.0f64, b in 0.0..1.0f64, w_s in 0.5..50.0f64) {
            prop_assume!((a - b).abs() > 1e-6);
            let (near, far) = if a < b { (a, b) } else { (b, a) };
            let f = |d: f64| op_single(10.0 + d * w_s, 10.0, 10.0 + w_s, w_s).unwrap();
            prop_assert!(f(near) > f(far));
        }
    }
}
