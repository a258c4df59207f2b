//! Synthetic series with injected event signatures and known midpoints.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{Event, EventSet, TimeSeries};

/// Shape added to every feature around an event midpoint, over a span of
/// `event_width` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Signature {
    /// Box-shaped mean shift.
    StepChange,
    /// Raised-cosine bump peaking at the midpoint.
    #[default]
    Pulse,
    /// Linear ramp from 0 to the amplitude, then back to baseline.
    Drift,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Signature::StepChange => "step-change",
            Signature::Pulse => "pulse",
            Signature::Drift => "drift",
        })
    }
}

impl FromStr for Signature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step-change" | "step" => Ok(Signature::StepChange),
            "pulse" => Ok(Signature::Pulse),
            "drift" => Ok(Signature::Drift),
            other => Err(Error::InvalidArgument(format!("unknown signature `{other}`"))),
        }
    }
}

impl Signature {
    /// Contribution at signed offset `u = t - mid` for a signature of width
    /// `width`.
    pub fn profile(self, u: f64, width: f64, amplitude: f64) -> f64 {
        let half = width / 2.0;
        match self {
            Signature::StepChange if u >= -half && u < half => amplitude,
            Signature::Pulse if u.abs() < half => {
                amplitude * 0.5 * (1.0 + (std::f64::consts::TAU * u / width).cos())
            }
            Signature::Drift if u >= -half && u <= half => amplitude * (u + half) / width,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_steps: usize,
    pub spacing: f64,
    pub n_features: usize,
    pub n_events: usize,
    pub signature: Signature,
    pub amplitude: f64,
    /// Temporal width of each signature, normally the partition duration.
    pub event_width: f64,
    pub noise_std: f64,
    /// Minimum distance between event midpoints; at least `2 * event_width`.
    pub min_event_gap: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_steps: 5000,
            spacing: 1.0,
            n_features: 3,
            n_events: 10,
            signature: Signature::Pulse,
            amplitude: 1.0,
            event_width: 20.0,
            noise_std: 0.0,
            min_event_gap: 40.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.n_steps < 2 || self.n_features == 0 {
            return bad("need at least 2 steps and 1 feature");
        }
        if !(self.spacing > 0.0) || !(self.event_width > 0.0) {
            return bad("spacing and event width must be positive");
        }
        if !(self.amplitude > 0.0) {
            return bad("amplitude must be positive");
        }
        if !(self.noise_std >= 0.0) {
            return bad("noise standard deviation must be non-negative");
        }
        if !(self.min_event_gap >= 2.0 * self.event_width) {
            return bad("minimum event gap must be at least twice the event width");
        }
        if self.n_events as f64 * self.min_event_gap >= self.n_steps as f64 * self.spacing {
            return Err(Error::InfeasiblePlacement {
                n_events: self.n_events,
                min_gap: self.min_event_gap,
            });
        }
        Ok(())
    }
}

/// Draws `n` sorted grid indices in `[lo, hi]` whose consecutive distance is
/// at least `gap`: sorted uniform draws on the reduced span, then spread out.
fn place_midpoints(rng: &mut ChaCha8Rng, n: usize, lo: usize, hi: usize, gap: usize) -> Option<Vec<usize>> {
    if n == 0 {
        return Some(Vec::new());
    }
    let span = hi.checked_sub(lo)?;
    let slack = span.checked_sub((n - 1) * gap)?;
    let mut draws: Vec<usize> = (0..n).map(|_| rng.random_range(0..=slack)).collect();
    draws.sort_unstable();
    Some(draws.into_iter().enumerate().map(|(k, d)| lo + d + k * gap).collect())
}

/// Generates a series and point events (zero duration) at the signature
/// midpoints. Midpoints sit on the sampling grid, at least one event width
/// away from either end.
pub fn generate<T: Scalar>(config: &SynthConfig) -> Result<(TimeSeries<T>, EventSet<T>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let s = config.spacing;
    let margin = (config.event_width / s).ceil() as usize;
    let gap = (config.min_event_gap / s).ceil() as usize;
    let infeasible = || Error::InfeasiblePlacement {
        n_events: config.n_events,
        min_gap: config.min_event_gap,
    };
    let hi = config
        .n_steps
        .checked_sub(1 + margin)
        .ok_or_else(infeasible)?;
    let mids = place_midpoints(&mut rng, config.n_events, margin, hi, gap).ok_or_else(infeasible)?;

    let f = config.n_features;
    let mut values = vec![0.0f64; config.n_steps * f];
    if config.noise_std > 0.0 {
        let normal = Normal::new(0.0, config.noise_std)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for v in &mut values {
            *v = normal.sample(&mut rng);
        }
    }
    let reach = (config.event_width / s).ceil() as usize + 1;
    for &m in &mids {
        let first = m.saturating_sub(reach);
        let last = (m + reach).min(config.n_steps - 1);
        for i in first..=last {
            let u = (i as f64 - m as f64) * s;
            let bump = config.signature.profile(u, config.event_width, config.amplitude);
            for k in 0..f {
                values[i * f + k] += bump;
            }
        }
    }

    let names = (0..f).map(|k| format!("x{k}")).collect();
    let series = TimeSeries::new(
        T::zero(),
        T::lit(s),
        values.into_iter().map(T::lit).collect(),
        names,
    )?;
    let events = mids
        .iter()
        .map(|&m| {
            let t = series.time(m);
            Event::new(t, t)
        })
        .collect();
    Ok((series, EventSet::new(events)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_single_pulse() {
        let cfg = SynthConfig {
            n_steps: 200,
            n_events: 1,
            n_features: 2,
            ..SynthConfig::default()
        };
        let (ts, ev) = generate::<f64>(&cfg).unwrap();
        assert_eq!(ev.len(), 1);
        let mid = ev.events()[0].start;
        assert_eq!(ev.events()[0].end, mid);
        let m = mid as usize;
        assert_eq!(ts.value(m, 0), 1.0);
        assert_eq!(ts.value(m, 1), 1.0);
        for i in 0..ts.n_steps() {
            let expect = Signature::Pulse.profile(i as f64 - mid, 20.0, 1.0);
            assert_eq!(ts.value(i, 0), expect);
            if (i as f64 - mid).abs() >= 10.0 {
                assert_eq!(ts.value(i, 1), 0.0);
            }
        }
    }

    #[test]
    fn deterministic_and_spaced() {
        let cfg = SynthConfig {
            noise_std: 0.3,
            seed: 17,
            ..SynthConfig::default()
        };
        let a = generate::<f64>(&cfg).unwrap();
        let b = generate::<f64>(&cfg).unwrap();
        assert_eq!(a, b);
        let mids = a.1.midpoints();
        assert_eq!(mids.len(), 10);
        for pair in mids.windows(2) {
            assert!(pair[1] - pair[0] >= cfg.min_event_gap);
        }
        assert!(mids[0] >= cfg.event_width);
        assert!(*mids.last().unwrap() <= (cfg.n_steps - 1) as f64 - cfg.event_width);
    }

    #[test]
    fn infeasible() {
        let cfg = SynthConfig {
            n_steps: 10_000,
            n_events: 20,
            event_width: 300.0,
            min_event_gap: 600.0,
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate::<f64>(&cfg),
            Err(Error::InfeasiblePlacement { n_events: 20, .. })
        ));
    }

    #[test]
    fn imbalance() {
        for seed in 0..5 {
            let cfg = SynthConfig { seed, ..SynthConfig::default() };
            let (ts, ev) = generate::<f64>(&cfg).unwrap();
            let mids = ev.midpoints();
            let near = (0..ts.n_steps())
                .filter(|&i| mids.iter().any(|m| (ts.time(i) - m).abs() < cfg.event_width))
                .count();
            let bound = 2.0 * cfg.n_events as f64 * cfg.event_width
                / (cfg.n_steps as f64 * cfg.spacing);
            assert!((near as f64 / ts.n_steps() as f64) < bound);
        }
    }

    #[test]
    fn signature_shapes() {
        assert_eq!(Signature::StepChange.profile(0.0, 4.0, 2.0), 2.0);
        assert_eq!(Signature::StepChange.profile(2.0, 4.0, 2.0), 0.0);
        assert_eq!(Signature::Drift.profile(0.0, 4.0, 2.0), 1.0);
        assert_eq!(Signature::Drift.profile(2.0, 4.0, 2.0), 2.0);
        assert_eq!(Signature::Pulse.profile(2.0, 4.0, 2.0), 0.0);
        assert_eq!("step-change".parse::<Signature>().unwrap(), Signature::StepChange);
        assert!("spike".parse::<Signature>().is_err());
    }
}
