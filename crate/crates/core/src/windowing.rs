//! Flattened partition vectors.
//!
//! Row `i` concatenates the feature vectors of steps `i..i + w`, time-major:
//! entry `m * f + k` holds feature `k` at step `i + m`.

use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{Table, TimeSeries};

/// Per-column affine map onto `[0, 1]` fitted from training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler<T: Scalar = f64> {
    mins: Vec<T>,
    maxs: Vec<T>,
}

impl<T: Scalar> MinMaxScaler<T> {
    pub fn new(mins: Vec<T>, maxs: Vec<T>) -> Result<Self> {
        if mins.len() != maxs.len() {
            return Err(Error::DimensionMismatch {
                expected: mins.len(),
                actual: maxs.len(),
            });
        }
        Ok(Self { mins, maxs })
    }

    pub fn width(&self) -> usize {
        self.mins.len()
    }

    pub fn mins(&self) -> &[T] {
        &self.mins
    }

    pub fn maxs(&self) -> &[T] {
        &self.maxs
    }

    /// Maps a row in place. Constant columns map to 0; values outside the
    /// fitted range are not clipped.
    pub fn transform(&self, row: &mut [T]) {
        for ((v, &lo), &hi) in row.iter_mut().zip(&self.mins).zip(&self.maxs) {
            let span = hi - lo;
            *v = if span > T::zero() {
                (*v - lo) / span
            } else {
                T::zero()
            };
        }
    }

    /// Inverse of [`transform`](Self::transform) on non-constant columns.
    pub fn inverse(&self, row: &mut [T]) {
        for ((v, &lo), &hi) in row.iter_mut().zip(&self.mins).zip(&self.maxs) {
            *v = lo + *v * (hi - lo);
        }
    }

    /// Writes `column,min,max` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["column", "min", "max"])?;
        for (j, (lo, hi)) in self.mins.iter().zip(&self.maxs).enumerate() {
            wtr.write_record([j.to_string(), lo.to_string(), hi.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let table = Table::read(reader)?;
        Self::new(table.column("min")?, table.column("max")?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(File::open(path)?)
    }
}

/// Materialized window rows with their partition start times.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatrix<T: Scalar = f64> {
    data: Vec<T>,
    n_rows: usize,
    width: usize,
    w: usize,
    start_times: Vec<T>,
    duration: T,
    scaler: Option<MinMaxScaler<T>>,
}

/// Builds one row per partition of `w` steps.
pub fn build_windows<T: Scalar>(series: &TimeSeries<T>, w: usize) -> Result<WindowMatrix<T>> {
    let n = series.n_steps();
    if w > n {
        return Err(Error::WindowTooLarge { w, n });
    }
    if w < 2 {
        return Err(Error::InvalidArgument(format!("window size must be at least 2, got {w}")));
    }
    let f = series.n_features();
    let width = w * f;
    let n_rows = n - w + 1;
    let values = series.values();
    let mut data = Vec::with_capacity(n_rows * width);
    for i in 0..n_rows {
        // Steps i..i+w are contiguous in the row-major series buffer.
        data.extend_from_slice(&values[i * f..(i + w) * f]);
    }
    Ok(WindowMatrix {
        data,
        n_rows,
        width,
        w,
        start_times: (0..n_rows).map(|i| series.time(i)).collect(),
        duration: series.partition_duration(w),
        scaler: None,
    })
}

impl<T: Scalar> WindowMatrix<T> {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    /// Row width `r = w * f`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    pub fn start_times(&self) -> &[T] {
        &self.start_times
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.width.max(1)).take(self.n_rows)
    }

    pub fn scaler(&self) -> Option<&MinMaxScaler<T>> {
        self.scaler.as_ref()
    }

    pub fn slice_rows(&self, range: Range<usize>) -> Self {
        Self {
            data: self.data[range.start * self.width..range.end * self.width].to_vec(),
            n_rows: range.len(),
            width: self.width,
            w: self.w,
            start_times: self.start_times[range].to_vec(),
            duration: self.duration,
            scaler: self.scaler.clone(),
        }
    }

    /// Fits a min-max scaler over all rows and applies it.
    pub fn fit_scaler(self) -> Result<Self> {
        if self.n_rows == 0 {
            return Err(Error::InvalidArgument("cannot fit a scaler on zero rows".into()));
        }
        let mut mins = self.row(0).to_vec();
        let mut maxs = mins.clone();
        for row in self.rows().skip(1) {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        let scaler = MinMaxScaler::new(mins, maxs)?;
        self.apply_scaler(&scaler)
    }

    /// Applies a previously fitted scaler to every row.
    pub fn apply_scaler(mut self, scaler: &MinMaxScaler<T>) -> Result<Self> {
        if scaler.width() != self.width {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                actual: scaler.width(),
            });
        }
        if self.width > 0 {
            for row in self.data.chunks_exact_mut(self.width) {
                scaler.transform(row);
            }
        }
        self.scaler = Some(scaler.clone());
        Ok(self)
    }
}
