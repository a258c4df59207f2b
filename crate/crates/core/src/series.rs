//! Time series and event data model, validation and CSV ingestion.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A uniformly sampled multivariate time series.
///
/// Values are stored row-major: step `i`, feature `k` lives at `i * f + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T: Scalar = f64> {
    start_time: T,
    spacing: T,
    n_steps: usize,
    values: Vec<T>,
    feature_names: Vec<String>,
}

impl<T: Scalar> TimeSeries<T> {
    /// Builds a series from row-major values, validating every invariant.
    pub fn new(
        start_time: T,
        spacing: T,
        values: Vec<T>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let f = feature_names.len();
        if f == 0 {
            return Err(Error::InvalidArgument("series needs at least one feature".into()));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() || !start_time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        if !values.len().is_multiple_of(f) {
            return Err(Error::DimensionMismatch {
                expected: f,
                actual: values.len() % f,
            });
        }
        let n_steps = values.len() / f;
        if n_steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "series needs at least 2 steps, got {n_steps}"
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: pos / f,
                column: feature_names[pos % f].clone(),
            });
        }
        Ok(Self {
            start_time,
            spacing,
            n_steps,
            values,
            feature_names,
        })
    }

    pub fn start_time(&self) -> T {
        self.start_time
    }

    /// Last timestamp.
    pub fn end_time(&self) -> T {
        self.time(self.n_steps - 1)
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Timestamp of step `i` (zero-based).
    #[inline]
    pub fn time(&self, i: usize) -> T {
        self.start_time + T::from_usize_lossy(i) * self.spacing
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Feature values at step `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        let f = self.n_features();
        &self.values[i * f..(i + 1) * f]
    }

    #[inline]
    pub fn value(&self, step: usize, feature: usize) -> T {
        self.values[step * self.n_features() + feature]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Temporal duration `(w - 1) * s` of a partition of `w` steps.
    pub fn partition_duration(&self, w: usize) -> T {
        partition_duration(w, self.spacing)
    }

    /// Writes the series as CSV with a leading `time` column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_string()];
        header.extend(self.feature_names.iter().cloned());
        wtr.write_record(&header)?;
        for i in 0..self.n_steps {
            let mut rec = vec![self.time(i).to_string()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }
}

/// `w_s = (w - 1) * s`.
pub fn partition_duration<T: Scalar>(w: usize, spacing: T) -> T {
    T::from_usize_lossy(w.saturating_sub(1)) * spacing
}

/// A closed interval `[start, end]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<T: Scalar = f64> {
    pub start: T,
    pub end: T,
}

impl<T: Scalar> Event<T> {
    pub fn new(start: T, end: T) -> Self {
        Self { start, end }
    }

    pub fn midpoint(&self) -> T {
        (self.start + self.end) / T::lit(2.0)
    }

    pub fn duration(&self) -> T {
        self.end - self.start
    }
}

/// Non-overlapping ground-truth events, sorted by start.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventSet<T: Scalar = f64> {
    events: Vec<Event<T>>,
}

impl<T: Scalar> EventSet<T> {
    pub fn new(mut events: Vec<Event<T>>) -> Result<Self> {
        for e in &events {
            if !e.start.is_finite() || !e.end.is_finite() {
                return Err(Error::InvalidArgument("event bounds must be finite".into()));
            }
            if e.end < e.start {
                return Err(Error::InvertedInterval {
                    start: e.start.to_f64().unwrap_or(f64::NAN),
                    end: e.end.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        events.sort_by(|a, b| a.start.partial_cmp(&b.start).expect("finite"));
        for pair in events.windows(2) {
            // A shared endpoint has zero length and is allowed.
            if pair[0].end > pair[1].start {
                return Err(overlap_error(&pair[0], &pair[1]));
            }
        }
        Ok(Self { events })
    }

    pub fn empty() -> Self {
        Self { events: Vec::new() }
    }

    pub fn events(&self) -> &[Event<T>] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn midpoints(&self) -> Vec<T> {
        self.events.iter().map(Event::midpoint).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_intervals(writer, &self.events)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }
}

fn overlap_error<T: Scalar>(a: &Event<T>, b: &Event<T>) -> Error {
    let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
    Error::OverlappingEvents(f(a.start), f(a.end), f(b.start), f(b.end))
}

/// Events re-centered on their source midpoints with a common duration `w_s`.
///
/// The set is stored as midpoints plus `w_s`; bounds are derived as
/// `mid -/+ w_s / 2`, which keeps re-adjustment exactly idempotent.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedEventSet<T: Scalar = f64> {
    midpoints: Vec<T>,
    duration: T,
}

impl<T: Scalar> AdjustedEventSet<T> {
    /// Builds the set from sorted-or-unsorted midpoints.
    pub fn from_midpoints(mut midpoints: Vec<T>, duration: T) -> Result<Self> {
        if !(duration > T::zero()) || !duration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "event duration must be positive, got {duration}"
            )));
        }
        if midpoints.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("event midpoints must be finite".into()));
        }
        midpoints.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let out = Self { midpoints, duration };
        for k in 1..out.midpoints.len() {
            if out.midpoints[k] - out.midpoints[k - 1] < duration {
                return Err(overlap_error(&out.event(k - 1), &out.event(k)));
            }
        }
        Ok(out)
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    /// Source midpoints, sorted.
    pub fn midpoints(&self) -> &[T] {
        &self.midpoints
    }

    pub fn len(&self) -> usize {
        self.midpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.midpoints.is_empty()
    }

    pub fn event(&self, k: usize) -> Event<T> {
        let half = self.duration / T::lit(2.0);
        let mid = self.midpoints[k];
        Event::new(mid - half, mid + half)
    }

    pub fn events(&self) -> Vec<Event<T>> {
        (0..self.len()).map(|k| self.event(k)).collect()
    }

    /// Subset whose midpoints fall inside `[lo, hi]`.
    pub fn within(&self, lo: T, hi: T) -> Self {
        Self {
            midpoints: self
                .midpoints
                .iter()
                .copied()
                .filter(|&m| m >= lo && m <= hi)
                .collect(),
            duration: self.duration,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_intervals(writer, &self.events())
    }
}

/// Anything that carries event midpoints.
pub trait Midpoints<T: Scalar> {
    fn event_midpoints(&self) -> Vec<T>;
}

impl<T: Scalar> Midpoints<T> for EventSet<T> {
    fn event_midpoints(&self) -> Vec<T> {
        self.midpoints()
    }
}

impl<T: Scalar> Midpoints<T> for AdjustedEventSet<T> {
    fn event_midpoints(&self) -> Vec<T> {
        self.midpoints.clone()
    }
}

/// Re-centers every event on its midpoint with duration `w_s`.
pub fn adjust_events<T: Scalar>(
    events: &impl Midpoints<T>,
    w_s: T,
) -> Result<AdjustedEventSet<T>> {
    AdjustedEventSet::from_midpoints(events.event_midpoints(), w_s)
}

/// Converts a per-step 0/1 label column into events of duration `w_s`
/// centered on each labeled timestamp.
pub fn labels_to_events<T: Scalar>(
    series: &TimeSeries<T>,
    labels: &[u8],
    w_s: T,
) -> Result<EventSet<T>> {
    if labels.len() != series.n_steps() {
        return Err(Error::DimensionMismatch {
            expected: series.n_steps(),
            actual: labels.len(),
        });
    }
    if !(w_s > T::zero()) {
        return Err(Error::InvalidArgument(format!("w_s must be positive, got {w_s}")));
    }
    let half = w_s / T::lit(2.0);
    let mut events = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        match label {
            0 => {}
            1 => {
                let c = series.time(i);
                events.push(Event::new(c - half, c + half));
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "label at row {i} must be 0 or 1, got {other}"
                )))
            }
        }
    }
    EventSet::new(events)
}

/// Column-oriented view of a headed CSV file.
#[derive(Debug, Clone)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(File::open(path)?)
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Parses a column, rejecting unparsable and non-finite cells.
    pub fn column<T: Scalar>(&self, name: &str) -> Result<Vec<T>> {
        let idx = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(row, rec)| {
                let cell = &rec[idx];
                let v: T = cell.parse().map_err(|_| {
                    Error::Parse(format!("row {row}, column `{name}`: cannot parse `{cell}`"))
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteValue {
                        row,
                        column: name.to_string(),
                    })
                }
            })
            .collect()
    }
}

/// Builds a validated series from a table.
///
/// An empty `feature_columns` selects every column except `time_column`
/// and the names in `exclude`.
pub fn series_from_table<T: Scalar>(
    table: &Table,
    time_column: &str,
    feature_columns: &[String],
    exclude: &[String],
) -> Result<TimeSeries<T>> {
    let times: Vec<T> = table.column(time_column)?;
    if times.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "series needs at least 2 rows, got {}",
            times.len()
        )));
    }
    let names: Vec<String> = if feature_columns.is_empty() {
        table
            .headers()
            .iter()
            .filter(|h| *h != time_column && !exclude.contains(h))
            .cloned()
            .collect()
    } else {
        feature_columns.to_vec()
    };
    let spacing = times[1] - times[0];
    if !(spacing > T::zero()) {
        return Err(Error::NonUniformSampling {
            row: 1,
            gap: spacing.to_f64().unwrap_or(f64::NAN),
            spacing: spacing.to_f64().unwrap_or(f64::NAN),
        });
    }
    for row in 2..times.len() {
        let gap = times[row] - times[row - 1];
        let magnitude = times[row].abs().max(times[row - 1].abs());
        let tol = T::rel_tol() * spacing + T::lit(4.0) * T::epsilon() * magnitude;
        if (gap - spacing).abs() > tol {
            return Err(Error::NonUniformSampling {
                row,
                gap: gap.to_f64().unwrap_or(f64::NAN),
                spacing: spacing.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let columns: Vec<Vec<T>> = names
        .iter()
        .map(|n| table.column(n))
        .collect::<Result<_>>()?;
    let n = times.len();
    let mut values = Vec::with_capacity(n * names.len());
    for i in 0..n {
        values.extend(columns.iter().map(|c| c[i]));
    }
    TimeSeries::new(times[0], spacing, values, names)
}

/// Loads a series CSV with a time column and the given feature columns.
pub fn load_series<T: Scalar>(
    path: impl AsRef<Path>,
    time_column: &str,
    feature_columns: &[String],
) -> Result<TimeSeries<T>> {
    series_from_table(&Table::open(path)?, time_column, feature_columns, &[])
}

/// Reads a 0/1 label column.
pub fn label_column(table: &Table, name: &str) -> Result<Vec<u8>> {
    let idx = table.column_index(name)?;
    table
        .rows
        .iter()
        .enumerate()
        .map(|(row, rec)| match rec[idx].parse::<f64>() {
            Ok(0.0) => Ok(0),
            Ok(1.0) => Ok(1),
            _ => Err(Error::Parse(format!(
                "row {row}, column `{name}`: expected 0 or 1, got `{}`",
                rec[idx]
            ))),
        })
        .collect()
}

/// Reads `start,end` rows without the disjointness check; predicted events
/// may overlap.
pub fn read_intervals<T: Scalar, R: Read>(reader: R) -> Result<Vec<Event<T>>> {
    let table = Table::read(reader)?;
    if table.n_rows() == 0 && table.headers().is_empty() {
        return Ok(Vec::new());
    }
    let starts: Vec<T> = table.column("start")?;
    let ends: Vec<T> = table.column("end")?;
    Ok(starts
        .into_iter()
        .zip(ends)
        .map(|(s, e)| Event::new(s, e))
        .collect())
}

pub fn load_intervals<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<Event<T>>> {
    read_intervals(File::open(path)?)
}

/// Loads and validates a ground-truth events file.
pub fn load_events<T: Scalar>(path: impl AsRef<Path>) -> Result<EventSet<T>> {
    EventSet::new(load_intervals(path)?)
}

pub fn write_intervals<T: Scalar, W: Write>(writer: W, events: &[Event<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["start", "end"])?;
    for e in events {
        wtr.write_record([e.start.to_string(), e.end.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        Table::read(text.as_bytes()).unwrap()
    }

    #[test]
    fn minimal_series() {
        let t = table("time,x\n0,1.5\n1,2.5\n2,3.5\n");
        let s: TimeSeries = series_from_table(&t, "time", &["x".into()], &[]).unwrap();
        assert_eq!(s.spacing(), 1.0);
        assert_eq!(s.n_steps(), 3);
        assert_eq!(s.n_features(), 1);
        assert_eq!(s.value(2, 0), 3.5);
    }

    #[test]
    fn non_uniform_sampling_rejected() {
        let t = table("time,x\n0,1\n1,2\n2.5,3\n");
        let err = series_from_table::<f64>(&t, "time", &["x".into()], &[]).unwrap_err();
        assert!(matches!(err, Error::NonUniformSampling { row: 2, .. }));
    }

    #[test]
    fn missing_column_and_non_finite() {
        let t = table("time,x\n0,1\n1,2\n");
        let err = series_from_table::<f64>(&t, "time", &["y".into()], &[]).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "y"));

        let t = table("time,x\n0,1\n1,inf\n");
        let err = series_from_table::<f64>(&t, "time", &["x".into()], &[]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { row: 1, .. }));
    }

    #[test]
    fn fraud_style_width() {
        // (w * f + 1) * Q + (Q + 1) = 1201 with w = 2, Q = 20 gives f = 29.
        assert_eq!((2 * 29 + 1) * 20 + 21, 1201);
        let mut text = String::from("time");
        for k in 1..=29 {
            text.push_str(&format!(",V{k}"));
        }
        text.push('\n');
        for i in 0..4 {
            text.push_str(&i.to_string());
            for k in 0..29 {
                text.push_str(&format!(",{}", k as f64 * 0.5));
            }
            text.push('\n');
        }
        let s: TimeSeries = series_from_table(&table(&text), "time", &[], &[]).unwrap();
        assert_eq!(s.n_features(), 29);
    }

    #[test]
    fn events_validation() {
        let ok = EventSet::new(vec![Event::new(30.0, 40.0), Event::new(10.0, 20.0)]).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.events()[0].start, 10.0);

        let err = EventSet::new(vec![Event::new(10.0, 20.0), Event::new(15.0, 25.0)]).unwrap_err();
        assert!(matches!(err, Error::OverlappingEvents(..)));

        let touching = EventSet::new(vec![Event::new(10.0, 20.0), Event::new(20.0, 25.0)]);
        assert!(touching.is_ok());

        let err = EventSet::new(vec![Event::new(20.0, 10.0)]).unwrap_err();
        assert!(matches!(err, Error::InvertedInterval { .. }));
    }

    #[test]
    fn empty_events_file() {
        let ev: Vec<Event> = read_intervals("start,end\n".as_bytes()).unwrap();
        assert!(ev.is_empty());
        let ev: Vec<Event> = read_intervals("".as_bytes()).unwrap();
        assert!(ev.is_empty());
    }

    #[test]
    fn labels_to_events_examples() {
        let s = TimeSeries::new(0.0, 1.0, vec![0.0; 4], vec!["x".into()]).unwrap();
        let ev = labels_to_events(&s, &[0, 1, 0, 0], 1.0).unwrap();
        assert_eq!(ev.events(), &[Event::new(0.5, 1.5)]);

        let ev = labels_to_events(&s, &[0, 0, 0, 0], 1.0).unwrap();
        assert!(ev.is_empty());

        // 1-labels at t = 5 and t = 5.5.
        let s = TimeSeries::new(0.0, 0.5, vec![0.0; 12], vec!["x".into()]).unwrap();
        let mut labels = vec![0u8; 12];
        labels[10] = 1;
        labels[11] = 1;
        let err = labels_to_events(&s, &labels, 1.0).unwrap_err();
        assert!(matches!(err, Error::OverlappingEvents(a, _, b, _) if a == 4.5 && b == 5.0));

        // Consecutive labels exactly w_s apart only touch.
        let s = TimeSeries::new(0.0, 1.0, vec![0.0; 4], vec!["x".into()]).unwrap();
        let ev = labels_to_events(&s, &[0, 1, 1, 0], 1.0).unwrap();
        assert_eq!(ev.midpoints(), vec![1.0, 2.0]);
        assert_eq!(adjust_events(&ev, 1.0).unwrap().midpoints(), &[1.0, 2.0]);
    }

    #[test]
    fn adjust_examples() {
        let ev = EventSet::new(vec![Event::new(10.0, 20.0)]).unwrap();
        let adj = adjust_events(&ev, 4.0).unwrap();
        assert_eq!(adj.event(0), Event::new(13.0, 17.0));

        let ev = EventSet::new(vec![Event::new(10.0, 10.0)]).unwrap();
        assert_eq!(adjust_events(&ev, 2.0).unwrap().event(0), Event::new(9.0, 11.0));

        let ev = EventSet::new(vec![Event::new(100.0, 100.0), Event::new(100.5, 100.5)]).unwrap();
        assert!(matches!(
            adjust_events(&ev, 2.0),
            Err(Error::OverlappingEvents(..))
        ));
    }

    #[test]
    fn adjust_is_idempotent() {
        let ev = EventSet::new(vec![Event::new(0.1, 0.7), Event::new(3.3, 9.9)]).unwrap();
        let once = adjust_events(&ev, 0.3).unwrap();
        let twice = adjust_events(&once, 0.3).unwrap();
        assert_eq!(once, twice);
    }
}
