//! Runs the full pipeline on a generated noisy series and prints the test
//! report.
//!
//! cargo run --release --example synthetic -- [noise_std] [seed]

use evdetect::pipeline::{run, PipelineConfig};
use evdetect::{generate, SynthConfig, TrainConfig};

fn main() -> evdetect::Result<()> {
    let mut args = std::env::args().skip(1);
    let noise_std = args.next().map_or(Ok(0.3), |s| s.parse()).expect("noise_std");
    let seed = args.next().map_or(Ok(0), |s| s.parse()).expect("seed");

    let data = SynthConfig { noise_std, seed, ..SynthConfig::default() };
    let (series, events) = generate::<f64>(&data)?;
    let config = PipelineConfig {
        w: 21,
        train: TrainConfig { seed, ..TrainConfig::default() },
        ..PipelineConfig::default()
    };
    let out = run(&series, &events, &config)?;

    let p = out.params;
    println!("sigma={} radius={} threshold={}", p.sigma, p.radius, p.threshold);
    out.report.write_summary(std::io::stdout())?;
    for pair in &out.report.pairs {
        println!("truth {:>6} predicted {:>6}", pair.truth, pair.predicted);
    }
    Ok(())
}
