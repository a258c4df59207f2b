//! Run configuration, accepted as flags and as a TOML file with the same
//! keys in snake_case. File values override flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use evdetect::model::Optimizer;
use evdetect::pipeline::PipelineConfig;
use evdetect::{Activation, Detection, RadiusRule, Signature, SynthConfig, TrainConfig, TuneGrid, TuneParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Name of the effective configuration written into the output directory.
pub const ECHO_FILE: &str = "run_config.toml";

const DEFAULT_OUT: &str = "evdetect-out";

macro_rules! overlay {
    ($dst:expr, $src:expr; $($field:ident),* $(,)?) => {
        $(if $src.$field.is_some() {
            $dst.$field = $src.$field;
        })*
    };
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Series CSV: a time column plus numeric feature columns.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Ground-truth events CSV with `start,end` columns.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// 0/1 column of the series file marking event time steps.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Time column of the series file [default: time].
    #[arg(long)]
    pub time_column: Option<String>,
    /// Feature columns [default: all except time and label].
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Window size in time steps [default: 2].
    #[arg(long)]
    pub w: Option<usize>,
    /// Hidden units [default: 20].
    #[arg(long)]
    pub hidden_units: Option<usize>,
    /// `sigmoid` or `tanh` [default: sigmoid].
    #[arg(long)]
    pub activation: Option<String>,
    /// Leading fraction of time steps used for training [default: 0.7].
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Trailing fraction of training windows held out [default: 0.2].
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// [default: 500]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// [default: 0.001]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// `adam` or `sgd` [default: adam].
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Fixed smoothing width; with --threshold disables tuning.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Fixed kernel radius [default: ceil(3 * sigma)].
    #[arg(long)]
    pub radius: Option<usize>,
    /// Fixed peak height threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Tuning grid sigmas, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    /// Tuning grid radii [default: ceil(3 * sigma) per sigma].
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<usize>>,
    /// Tuning grid thresholds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Matching tolerance in seconds [default: w_s].
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Seeds weight initialization and batch shuffling [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model file [default: OUT/model.txt].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Scaler file [default: scaler.csv next to the model, if present].
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// Predicted events CSV for `eval` [default: OUT/predicted_events.csv].
    #[arg(long)]
    pub predicted: Option<PathBuf>,
    /// Output directory [default: evdetect-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file whose values override the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|source| CliError::ConfigFile {
        path: path.to_path_buf(),
        source,
    })
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    /// Applies the `--config` file, if any, on top of the flags.
    pub fn resolve(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file: RunConfig = read_toml(&path)?;
        overlay!(self, file;
            series, events, label_column, time_column, features, w, hidden_units,
            activation, train_fraction, validation_fraction, epochs, batch_size,
            learning_rate, optimizer, sigma, radius, threshold, sigmas, radii,
            thresholds, tolerance, seed, model, scaler, predicted, out);
        Ok(self)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn series_path(&self) -> Result<&Path> {
        self.series
            .as_deref()
            .ok_or_else(|| invalid("--series is required"))
    }

    pub fn time_column(&self) -> &str {
        self.time_column.as_deref().unwrap_or("time")
    }

    pub fn w(&self) -> usize {
        self.w.unwrap_or(2)
    }

    pub fn model_path(&self) -> PathBuf {
        self.model
            .clone()
            .unwrap_or_else(|| self.out_dir().join("model.txt"))
    }

    /// Explicit scaler, else `scaler.csv` beside the model when it exists.
    pub fn scaler_path(&self) -> Option<PathBuf> {
        if let Some(p) = &self.scaler {
            return Some(p.clone());
        }
        let sibling = self.model_path().with_file_name("scaler.csv");
        sibling.exists().then_some(sibling)
    }

    pub fn predicted_path(&self) -> PathBuf {
        self.predicted
            .clone()
            .unwrap_or_else(|| self.out_dir().join("predicted_events.csv"))
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let optimizer = match &self.optimizer {
            Some(s) => s.parse::<Optimizer>()?,
            None => d.optimizer,
        };
        let cfg = TrainConfig {
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            seed: self.seed.unwrap_or(d.seed),
            validation_fraction: self.validation_fraction.unwrap_or(d.validation_fraction),
            optimizer,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fixed parameters when `sigma` and `threshold` are set, else the grid.
    pub fn detection(&self) -> Result<Detection> {
        match (self.sigma, self.threshold) {
            (Some(sigma), Some(threshold)) => {
                if sigma.is_nan() || sigma <= 0.0 {
                    return Err(invalid("--sigma must be positive"));
                }
                let radius = self
                    .radius
                    .unwrap_or_else(|| ((3.0 * sigma).ceil() as usize).max(1));
                if radius == 0 {
                    return Err(invalid("--radius must be at least 1"));
                }
                Ok(Detection::Fixed(TuneParams { sigma, radius, threshold }))
            }
            (None, None) if self.radius.is_none() => Ok(Detection::Tuned(self.grid()?)),
            _ => Err(invalid(
                "fixed detection needs both --sigma and --threshold (--radius is optional)",
            )),
        }
    }

    pub fn grid(&self) -> Result<TuneGrid> {
        let d = TuneGrid::default();
        let grid = TuneGrid {
            sigmas: self.sigmas.clone().unwrap_or(d.sigmas),
            radii: match &self.radii {
                Some(r) => RadiusRule::Explicit(r.clone()),
                None => RadiusRule::ThreeSigma,
            },
            thresholds: self.thresholds.clone().unwrap_or(d.thresholds),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn tolerance(&self) -> Result<Option<f64>> {
        match self.tolerance {
            Some(t) if t.is_nan() || t <= 0.0 => Err(invalid("--tolerance must be positive")),
            t => Ok(t),
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let w = self.w();
        if w < 2 {
            return Err(invalid("--w must be at least 2"));
        }
        let activation = match &self.activation {
            Some(s) => s.parse::<Activation>()?,
            None => Activation::Sigmoid,
        };
        let d = PipelineConfig::<f64>::default();
        Ok(PipelineConfig {
            w,
            hidden_units: self.hidden_units.unwrap_or(d.hidden_units),
            activation,
            train_fraction: self.train_fraction.unwrap_or(d.train_fraction),
            train: self.train_config()?,
            detection: self.detection()?,
            tolerance: self.tolerance()?,
            scale_inputs: true,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    /// [default: 5000]
    #[arg(long)]
    pub n_steps: Option<usize>,
    /// Seconds between steps [default: 1].
    #[arg(long)]
    pub spacing: Option<f64>,
    /// [default: 3]
    #[arg(long)]
    pub n_features: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub n_events: Option<usize>,
    /// `pulse`, `step-change` or `drift` [default: pulse].
    #[arg(long)]
    pub signature: Option<String>,
    /// [default: 1]
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Signature width in seconds [default: 20].
    #[arg(long)]
    pub event_width: Option<f64>,
    /// Gaussian noise standard deviation [default: 0].
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Minimum midpoint distance in seconds [default: 40].
    #[arg(long)]
    pub min_event_gap: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: evdetect-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file whose values override the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl SynthArgs {
    pub fn resolve(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file: SynthArgs = read_toml(&path)?;
        overlay!(self, file;
            n_steps, spacing, n_features, n_events, signature, amplitude,
            event_width, noise_std, min_event_gap, seed, out);
        Ok(self)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        let d = SynthConfig::default();
        let signature = match &self.signature {
            Some(s) => s.parse::<Signature>()?,
            None => d.signature,
        };
        Ok(SynthConfig {
            n_steps: self.n_steps.unwrap_or(d.n_steps),
            spacing: self.spacing.unwrap_or(d.spacing),
            n_features: self.n_features.unwrap_or(d.n_features),
            n_events: self.n_events.unwrap_or(d.n_events),
            signature,
            amplitude: self.amplitude.unwrap_or(d.amplitude),
            event_width: self.event_width.unwrap_or(d.event_width),
            noise_std: self.noise_std.unwrap_or(d.noise_std),
            min_event_gap: self.min_event_gap.unwrap_or(d.min_event_gap),
            seed: self.seed.unwrap_or(d.seed),
        })
    }
}
