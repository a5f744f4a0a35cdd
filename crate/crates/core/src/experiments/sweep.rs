//! Seeded Monte Carlo sweeps over measurement noise and sample rate.
//!
//! Trial `i` of every grid point uses the seed
//! `derive_seed(master, SeedStream::Trial, i)`, so grid points share their
//! random draws. Trials run in parallel; results are collected in
//! (parameter, trial) order and do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::NoiseModel;
use crate::experiments::episode::{run_episode, EpisodeSpec, Measurement, PolicyKind};
use crate::experiments::{derive_seed, success_criterion, SeedStream};
use crate::state::State;

/// Minimum success rate for a grid point to count as tolerated.
pub const SUCCESS_THRESHOLD: f64 = 0.9;
pub const MIN_TRIALS: usize = 20;
/// Physics rate kept fixed across the frequency sweep (4 sub-steps at 120 Hz).
pub const PHYSICS_RATE_HZ: f64 = 480.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Noise,
    Frequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub results: Vec<SweepResult>,
    /// `sigma_star` (largest tolerated σ) or `fs_min` (smallest tolerated f_s).
    pub threshold: Option<f64>,
}

impl SweepReport {
    pub fn threshold_key(&self) -> &'static str {
        match self.kind {
            SweepKind::Noise => "sigma_star",
            SweepKind::Frequency => "fs_min",
        }
    }

    pub fn to_json(&self) -> String {
        let mut map = serde_json::Map::new();
        map.insert("kind".into(), serde_json::to_value(self.kind).unwrap());
        map.insert("results".into(), serde_json::to_value(&self.results).unwrap());
        map.insert(self.threshold_key().into(), serde_json::to_value(self.threshold).unwrap());
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map)).unwrap();
        s.push('\n');
        s
    }

    /// Statistical monotonicity: between consecutive grid points the rate
    /// may move against the expected direction by at most two pooled
    /// binomial standard errors.
    pub fn is_statistically_monotone(&self) -> bool {
        let decreasing = self.kind == SweepKind::Noise;
        self.results.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            let against = if decreasing {
                b.success_rate - a.success_rate
            } else {
                a.success_rate - b.success_rate
            };
            let pooled = (a.successes + b.successes) as f64 / (a.trials + b.trials) as f64;
            let se = (pooled * (1.0 - pooled) * (1.0 / a.trials as f64 + 1.0 / b.trials as f64)).sqrt();
            against <= 2.0 * se + 1e-12
        })
    }
}

fn check_grid(values: &[f64], trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!("sweeps need at least {MIN_TRIALS} trials, got {trials}")));
    }
    if values.is_empty() || values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("sweep grid must be non-empty and strictly ascending".into()));
    }
    Ok(())
}

fn run_grid<F>(values: &[f64], trials: usize, threads: Option<usize>, make: F) -> Result<Vec<SweepResult>>
where
    F: Fn(f64, usize) -> Result<(EpisodeSpec, f64)> + Sync,
{
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|p| (0..trials).map(move |t| (p, t)))
        .collect();
    let work = || -> Result<Vec<bool>> {
        jobs.par_iter()
            .map(|&(p, t)| {
                let (spec, hold) = make(values[p], t)?;
                Ok(success_criterion(&run_episode(&spec)?, hold))
            })
            .collect()
    };
    let outcomes = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(values
        .iter()
        .enumerate()
        .map(|(p, &param)| {
            let successes = outcomes[p * trials..(p + 1) * trials].iter().filter(|&&ok| ok).count();
            SweepResult {
                param,
                trials,
                successes,
                success_rate: successes as f64 / trials as f64,
            }
        })
        .collect())
}

/// Hybrid swing-up and balance from `base.initial` with noisy angle
/// measurements of each σ (degrees).
pub fn noise_sweep(
    sigmas_deg: &[f64],
    trials: usize,
    base: &EpisodeSpec,
    smoothing: f64,
    master_seed: u64,
    hold: f64,
    threads: Option<usize>,
) -> Result<SweepReport> {
    check_grid(sigmas_deg, trials)?;
    let results = run_grid(sigmas_deg, trials, threads, |sigma, trial| {
        let seed = derive_seed(master_seed, SeedStream::Trial, trial as u64);
        let spec = EpisodeSpec {
            policy: PolicyKind::Hybrid,
            measurement: Measurement::Measured {
                noise: NoiseModel::new(sigma, seed)?,
                smoothing,
            },
            ..*base
        };
        Ok((spec, hold))
    })?;
    let threshold = results
        .iter()
        .rev()
        .find(|r| r.success_rate >= SUCCESS_THRESHOLD)
        .map(|r| r.param);
    Ok(SweepReport {
        kind: SweepKind::Noise,
        results,
        threshold,
    })
}

/// Initial condition for a balancing trial: |α₀| = `alpha0`, random sign,
/// θ₀ uniform in ±10°, both rates uniform in ±0.2 rad/s.
pub fn balance_initial_state(alpha0: f64, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SeedStream::InitialState, 1));
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let lim = 10f64.to_radians();
    State::new(
        rng.random_range(-lim..=lim),
        sign * alpha0,
        rng.random_range(-0.2..=0.2),
        rng.random_range(-0.2..=0.2),
    )
}

/// Noise-free LQR balancing from |α₀| = `alpha0` (radians) at each sample
/// rate. The physics step stays near 1/480 s at every rate.
#[allow(clippy::too_many_arguments)]
pub fn frequency_sweep(
    freqs_hz: &[f64],
    trials: usize,
    base: &EpisodeSpec,
    alpha0: f64,
    duration: f64,
    master_seed: u64,
    hold: f64,
    threads: Option<usize>,
) -> Result<SweepReport> {
    check_grid(freqs_hz, trials)?;
    let results = run_grid(freqs_hz, trials, threads, |f_s, trial| {
        let seed = derive_seed(master_seed, SeedStream::Trial, trial as u64);
        let spec = EpisodeSpec {
            policy: PolicyKind::Lqr,
            measurement: Measurement::Privileged,
            f_s,
            duration,
            substeps: (PHYSICS_RATE_HZ / f_s).ceil().max(1.0) as usize,
            initial: balance_initial_state(alpha0, seed),
            ..*base
        };
        Ok((spec, hold))
    })?;
    let threshold = results
        .iter()
        .find(|r| r.success_rate >= SUCCESS_THRESHOLD)
        .map(|r| r.param);
    Ok(SweepReport {
        kind: SweepKind::Frequency,
        results,
        threshold,
    })
}
