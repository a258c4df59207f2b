//! Command-line front end for the `evdetect` pipeline.
//!
//! Every subcommand takes the same run configuration, given as flags or as a
//! TOML file via `--config`. The effective configuration is echoed into the
//! output directory as `run_config.toml`.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;

use clap::{Parser, Subcommand};

pub use config::{RunConfig, SynthArgs};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "evdetect", version, about = "Regression-based event detection for multivariate time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute overlap labels for every partition.
    Label(RunConfig),
    /// Train the regressor on the training region.
    Train(RunConfig),
    /// Grid-search smoothing and threshold on the tuning region.
    Tune(RunConfig),
    /// Predict, smooth and pick peaks on the test region.
    Detect(RunConfig),
    /// Match predicted events against ground truth.
    Eval(RunConfig),
    /// Generate a synthetic series with known events.
    Synth(SynthArgs),
    /// Run label, train, tune, detect and eval in one go.
    Pipeline(RunConfig),
}

/// Runs a parsed command line, logging progress to `log`.
pub fn run(cli: Cli, log: &mut dyn Write) -> Result<()> {
    use commands::*;
    match cli.command {
        Command::Label(c) => cmd_label(&c.resolve()?, log),
        Command::Train(c) => cmd_train(&c.resolve()?, log),
        Command::Tune(c) => cmd_tune(&c.resolve()?, log),
        Command::Detect(c) => cmd_detect(&c.resolve()?, log),
        Command::Eval(c) => cmd_eval(&c.resolve()?, log),
        Command::Synth(a) => cmd_synth(&a.resolve()?, log),
        Command::Pipeline(c) => cmd_pipeline(&c.resolve()?, log),
    }
}
