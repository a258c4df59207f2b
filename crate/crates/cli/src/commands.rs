//! One function per subcommand. Each reads its inputs from disk, writes its
//! artifacts into the output directory and logs a short summary.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use evdetect::pipeline::{choose_params, detect, train_on, Detection, Prepared, Trained};
use evdetect::series::{label_column, load_intervals, series_from_table, write_intervals, Table};
use evdetect::{
    adjust_events, generate, labels_to_events, load_events, match_midpoints, op_series, EventSet,
    MatchReport, MinMaxScaler, Regressor, TimeSeries, TuneResult,
};
use serde::Serialize;

use crate::config::{RunConfig, SynthArgs, ECHO_FILE};
use crate::error::{CliError, Result};

/// Series and ground truth as configured.
pub struct Inputs {
    pub series: TimeSeries,
    pub events: EventSet,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let path = cfg.series_path()?;
    let table = Table::open(path).map_err(|e| open_error(path, e))?;
    let features = cfg.features.clone().unwrap_or_default();
    let exclude: Vec<String> = cfg.label_column.iter().cloned().collect();
    let series = series_from_table(&table, cfg.time_column(), &features, &exclude)?;
    let events = match (&cfg.events, &cfg.label_column) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "--events and --label-column are mutually exclusive".into(),
            ))
        }
        (Some(p), None) => load_events(p).map_err(|e| open_error(p, e))?,
        (None, Some(col)) => {
            let labels = label_column(&table, col)?;
            labels_to_events(&series, &labels, series.partition_duration(cfg.w()))?
        }
        (None, None) => EventSet::empty(),
    };
    Ok(Inputs { series, events })
}

/// Attaches the path to "file not found"-style failures.
fn open_error(path: &Path, e: evdetect::Error) -> CliError {
    match e {
        evdetect::Error::Io(source) => CliError::Open {
            path: path.to_path_buf(),
            source,
        },
        other => other.into(),
    }
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let inputs = load_inputs(cfg)?;
    let pc = cfg.pipeline_config()?;
    Ok(Prepared::new(
        &inputs.series,
        &inputs.events,
        pc.w,
        pc.train_fraction,
        pc.train.validation_fraction,
    )?)
}

/// Output directory, created on demand, with the effective config echoed.
fn out_dir<C: Serialize>(dir: PathBuf, config: &C) -> Result<PathBuf> {
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(ECHO_FILE), toml::to_string(config)?)?;
    Ok(dir)
}

fn write_file(
    path: &Path,
    log: &mut dyn Write,
    body: impl FnOnce(&mut BufWriter<File>) -> evdetect::Result<()>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    writeln!(log, "wrote {}", path.display())?;
    Ok(())
}

pub fn load_trained(cfg: &RunConfig) -> Result<Trained> {
    let model_path = cfg.model_path();
    let file = File::open(&model_path).map_err(|source| CliError::Open {
        path: model_path.clone(),
        source,
    })?;
    let model = Regressor::read_from(BufReader::new(file))?;
    let scaler = match cfg.scaler_path() {
        Some(p) => Some(MinMaxScaler::load(&p).map_err(|e| open_error(&p, e))?),
        None => None,
    };
    Ok(Trained {
        model,
        scaler,
        history: Default::default(),
    })
}

fn write_tuning(dir: &Path, result: &TuneResult, log: &mut dyn Write) -> Result<()> {
    write_file(&dir.join("tune.csv"), log, |w| result.write_table(w))?;
    write_file(&dir.join("tune_best.txt"), log, |w| result.write_best(w))?;
    writeln!(
        log,
        "best sigma={} radius={} threshold={} f1={}",
        result.best.sigma, result.best.radius, result.best.threshold, result.best_f1
    )?;
    Ok(())
}

fn write_report(dir: &Path, report: &MatchReport, log: &mut dyn Write) -> Result<()> {
    write_file(&dir.join("report.txt"), log, |w| report.write_summary(w))?;
    write_file(&dir.join("deltas.csv"), log, |w| report.write_deltas(w))?;
    writeln!(
        log,
        "precision={} recall={} f1={}",
        report.precision, report.recall, report.f1
    )?;
    Ok(())
}

/// Writes `op.csv`, the overlap labels of every partition.
pub fn cmd_label(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let w = cfg.w();
    let w_s = inputs.series.partition_duration(w);
    let adjusted = adjust_events(&inputs.events, w_s)?;
    let op = op_series(&inputs.series, &adjusted, w)?;
    let dir = out_dir(cfg.out_dir(), cfg)?;
    writeln!(log, "w_s={w_s}")?;
    write_file(&dir.join("op.csv"), log, |w| op.write_csv(w))
}

/// Writes `model.txt`, `scaler.csv` and `loss.csv`.
pub fn cmd_train(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let prepared = prepare(cfg)?;
    let trained = train_on(&prepared, &cfg.pipeline_config()?)?;
    let dir = out_dir(cfg.out_dir(), cfg)?;
    write_trained(&dir, &trained, log)
}

fn write_trained(dir: &Path, trained: &Trained, log: &mut dyn Write) -> Result<()> {
    write_file(&dir.join("model.txt"), log, |w| trained.model.write_to(w))?;
    if let Some(s) = &trained.scaler {
        write_file(&dir.join("scaler.csv"), log, |w| s.write_csv(w))?;
    }
    write_file(&dir.join("loss.csv"), log, |w| trained.history.write_csv(w))?;
    if let (Some(t), Some(v)) = (trained.history.train.last(), trained.history.validation.last()) {
        writeln!(log, "final train_mse={t} validation_mse={v}")?;
    }
    Ok(())
}

/// Grid search on the tuning region; writes `tune.csv` and `tune_best.txt`.
pub fn cmd_tune(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let prepared = prepare(cfg)?;
    let trained = load_trained(cfg)?;
    let grid = match cfg.detection()? {
        Detection::Fixed(p) => evdetect::TuneGrid::fixed(p),
        Detection::Tuned(g) => g,
    };
    let tolerance = cfg.tolerance()?.unwrap_or(prepared.w_s);
    let (_, result) = choose_params(&prepared, &trained, &Detection::Tuned(grid), tolerance)?;
    let dir = out_dir(cfg.out_dir(), cfg)?;
    write_tuning(&dir, &result.expect("tuned detection"), log)
}

/// Predicts on the test region and writes `prediction.csv`, `smoothed.csv`
/// and `predicted_events.csv`. Tunes first unless parameters are fixed.
pub fn cmd_detect(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let prepared = prepare(cfg)?;
    let trained = load_trained(cfg)?;
    let tolerance = cfg.tolerance()?.unwrap_or(prepared.w_s);
    let (params, tuning) = choose_params(&prepared, &trained, &cfg.detection()?, tolerance)?;
    let detected = detect(trained.predict(&prepared, prepared.split.test.clone())?, &params);
    let dir = out_dir(cfg.out_dir(), cfg)?;
    if let Some(result) = &tuning {
        write_tuning(&dir, result, log)?;
    }
    write_detected(&dir, &detected, log)
}

fn write_detected(dir: &Path, d: &evdetect::pipeline::Detected, log: &mut dyn Write) -> Result<()> {
    write_file(&dir.join("prediction.csv"), log, |w| d.predicted.write_csv(w))?;
    write_file(&dir.join("smoothed.csv"), log, |w| d.smoothed.write_csv(w))?;
    write_file(&dir.join("predicted_events.csv"), log, |w| write_intervals(w, &d.events))?;
    writeln!(log, "{} predicted events", d.events.len())?;
    Ok(())
}

/// Scores predicted events against ground truth; writes `report.txt` and
/// `deltas.csv`.
///
/// With `--series` the truth is restricted to the test region of the split
/// and the tolerance defaults to `w_s`. Without it, every event in
/// `--events` counts and `--tolerance` is required.
pub fn cmd_eval(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let predicted_path = cfg.predicted_path();
    let predicted = load_intervals::<f64>(&predicted_path).map_err(|e| open_error(&predicted_path, e))?;
    let pred: Vec<f64> = predicted.iter().map(|e| e.midpoint()).collect();
    let (truth, tolerance) = if cfg.series.is_some() {
        let prepared = prepare(cfg)?;
        let truth = prepared.truth_for(prepared.split.test.clone());
        (truth.midpoints().to_vec(), cfg.tolerance()?.unwrap_or(prepared.w_s))
    } else {
        let path = cfg
            .events
            .as_deref()
            .ok_or_else(|| CliError::Config("eval needs --events or --series".into()))?;
        let tolerance = cfg.tolerance()?.ok_or_else(|| {
            CliError::Config("eval without --series needs --tolerance".into())
        })?;
        (load_events::<f64>(path).map_err(|e| open_error(path, e))?.midpoints(), tolerance)
    };
    let report = match_midpoints(&pred, &truth, tolerance);
    let dir = out_dir(cfg.out_dir(), cfg)?;
    write_report(&dir, &report, log)
}

/// Writes `series.csv` and `events.csv`.
pub fn cmd_synth(args: &SynthArgs, log: &mut dyn Write) -> Result<()> {
    let (series, events) = generate::<f64>(&args.synth_config()?)?;
    let dir = out_dir(args.out_dir(), args)?;
    write_file(&dir.join("series.csv"), log, |w| series.write_csv(w))?;
    write_file(&dir.join("events.csv"), log, |w| events.write_csv(w))?;
    Ok(())
}

/// Label, train, tune, detect and evaluate in one run. Artifacts match
/// those of the individual commands given the same configuration.
pub fn cmd_pipeline(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let pc = cfg.pipeline_config()?;
    let prepared = Prepared::new(
        &inputs.series,
        &inputs.events,
        pc.w,
        pc.train_fraction,
        pc.train.validation_fraction,
    )?;
    let tolerance = pc.tolerance.unwrap_or(prepared.w_s);
    let trained = train_on(&prepared, &pc)?;
    let (params, tuning) = choose_params(&prepared, &trained, &pc.detection, tolerance)?;
    let detected = detect(trained.predict(&prepared, prepared.split.test.clone())?, &params);
    let test_truth = prepared.truth_for(prepared.split.test.clone());
    let pred: Vec<f64> = detected.events.iter().map(|e| e.midpoint()).collect();
    let report = match_midpoints(&pred, test_truth.midpoints(), tolerance);

    let dir = out_dir(cfg.out_dir(), cfg)?;
    writeln!(log, "w_s={}", prepared.w_s)?;
    write_file(&dir.join("op.csv"), log, |w| prepared.labels.write_csv(w))?;
    write_trained(&dir, &trained, log)?;
    if let Some(result) = &tuning {
        write_tuning(&dir, result, log)?;
    }
    write_detected(&dir, &detected, log)?;
    write_report(&dir, &report, log)
}
