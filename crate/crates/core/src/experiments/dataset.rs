//! State-sample datasets recorded from the data-generation controllers,
//! with a 2-D occupancy histogram over (θ, α).
//!
//! * `unbiased`: every row of `datagen-swing` episodes.
//! * `biased`: a `balance_fraction` share of near-upright rows
//!   (|α| < 15°) kept from `datagen-balance` episodes, the rest taken
//!   unfiltered from `datagen-swing` episodes.
//!
//! Episode `i` of either stream starts from hanging rest perturbed with the
//! seed `derive_seed(master, SeedStream::Dataset, i)`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::episode::{fmt_sig9, jittered_initial, run_episode, EpisodeSpec, Measurement, PolicyKind};
use crate::experiments::{derive_seed, SeedStream};
use crate::state::State;

pub const NEAR_UPRIGHT_DEG: f64 = 15.0;
pub const DATASET_CSV_HEADER: &str = "t,theta,alpha,theta_dot,alpha_dot,u_sat";
/// Consecutive episodes allowed to contribute nothing before giving up.
const MAX_IDLE_EPISODES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetMode {
    Biased,
    Unbiased,
}

impl DatasetMode {
    pub fn name(self) -> &'static str {
        match self {
            DatasetMode::Biased => "biased",
            DatasetMode::Unbiased => "unbiased",
        }
    }
}

impl FromStr for DatasetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biased" => Ok(DatasetMode::Biased),
            "unbiased" => Ok(DatasetMode::Unbiased),
            other => Err(Error::InvalidArgument(format!(
                "unknown dataset mode '{other}' (expected biased or unbiased)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Time within the source episode.
    pub t: f64,
    /// Wrapped state.
    pub state: State,
    pub u_sat: f64,
}

/// Occupancy counts over (θ, α), both binned on (−180°, 180°].
/// `counts[i][j]` counts θ bin `i` and α bin `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateHistogram {
    pub bin_width_deg: f64,
    pub theta_edges_deg: Vec<f64>,
    pub alpha_edges_deg: Vec<f64>,
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

impl StateHistogram {
    pub fn new(bin_width_deg: f64) -> Result<Self> {
        let n = 360.0 / bin_width_deg;
        if !(bin_width_deg > 0.0) || (n - n.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "histogram bin width must divide 360°, got {bin_width_deg}"
            )));
        }
        let n = n.round() as usize;
        let edges: Vec<f64> = (0..=n).map(|i| -180.0 + i as f64 * bin_width_deg).collect();
        Ok(Self {
            bin_width_deg,
            theta_edges_deg: edges.clone(),
            alpha_edges_deg: edges,
            counts: vec![vec![0; n]; n],
            total: 0,
        })
    }

    fn bin(&self, angle: f64) -> usize {
        let n = self.counts.len();
        let i = ((angle.to_degrees() + 180.0) / self.bin_width_deg).floor();
        (i.max(0.0) as usize).min(n - 1)
    }

    pub fn add(&mut self, s: &State) {
        let w = s.wrapped();
        let (i, j) = (self.bin(w.theta), self.bin(w.alpha));
        self.counts[i][j] += 1;
        self.total += 1;
    }

    /// Counts summed over θ, per α bin.
    pub fn alpha_marginal(&self) -> Vec<u64> {
        let n = self.counts.len();
        (0..n).map(|j| self.counts.iter().map(|row| row[j]).sum()).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("histogram serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub mode: DatasetMode,
    pub samples: Vec<Sample>,
    pub histogram: StateHistogram,
    /// Episodes simulated to fill the dataset.
    pub episodes: usize,
}

impl Dataset {
    /// Share of samples with |α| below `deg` degrees.
    pub fn fraction_alpha_below(&self, deg: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let limit = deg.to_radians();
        let n = self.samples.iter().filter(|s| s.state.alpha.abs() < limit).count();
        n as f64 / self.samples.len() as f64
    }

    /// Sample counts per |α| band of `width` degrees, from 0° to 180°.
    pub fn abs_alpha_bands(&self, width: f64) -> Vec<usize> {
        let n = (180.0 / width).ceil() as usize;
        let mut bands = vec![0; n];
        for s in &self.samples {
            let i = (s.state.alpha.abs().to_degrees() / width) as usize;
            bands[i.min(n - 1)] += 1;
        }
        bands
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.samples.len() + 1));
        out.push_str(DATASET_CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let x = &s.state;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_sig9(s.t),
                fmt_sig9(x.theta),
                fmt_sig9(x.alpha),
                fmt_sig9(x.theta_dot),
                fmt_sig9(x.alpha_dot),
                fmt_sig9(s.u_sat)
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub mode: DatasetMode,
    pub target_count: usize,
    /// Template for every episode; policy, initial state and measurement
    /// are overridden.
    pub episode: EpisodeSpec,
    pub balance_fraction: f64,
    /// Radians.
    pub initial_jitter: f64,
    pub histogram_bin_deg: f64,
    pub seed: u64,
}

/// Pulls rows from successive seeded episodes of one policy.
struct EpisodeStream<'a> {
    spec: &'a DatasetSpec,
    policy: PolicyKind,
    next_index: u64,
    stride: u64,
    offset: u64,
    episodes: usize,
}

impl EpisodeStream<'_> {
    fn next_episode(&mut self) -> Result<Vec<Sample>> {
        let index = self.offset + self.stride * self.next_index;
        self.next_index += 1;
        self.episodes += 1;
        let seed = derive_seed(self.spec.seed, SeedStream::Dataset, index);
        let ep = EpisodeSpec {
            policy: self.policy,
            initial: jittered_initial(State::hanging(), self.spec.initial_jitter, seed),
            measurement: Measurement::Privileged,
            ..self.spec.episode
        };
        let log = run_episode(&ep)?;
        Ok(log
            .rows
            .iter()
            .map(|r| Sample {
                t: r.t,
                state: r.state,
                u_sat: r.u_sat,
            })
            .collect())
    }

    /// Appends up to `count` samples accepted by `keep`.
    fn fill(&mut self, out: &mut Vec<Sample>, count: usize, keep: impl Fn(&Sample) -> bool) -> Result<()> {
        let goal = out.len() + count;
        let mut idle = 0;
        while out.len() < goal {
            let before = out.len();
            for s in self.next_episode()? {
                if out.len() == goal {
                    break;
                }
                if keep(&s) {
                    out.push(s);
                }
            }
            idle = if out.len() == before { idle + 1 } else { 0 };
            if idle >= MAX_IDLE_EPISODES {
                return Err(Error::InvalidArgument(format!(
                    "{} episodes produced no usable samples",
                    MAX_IDLE_EPISODES
                )));
            }
        }
        Ok(())
    }
}

/// Collects exactly `target_count` samples.
pub fn collect_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    if spec.target_count > 10_000_000 {
        return Err(Error::InvalidArgument("target_count must be <= 1e7".into()));
    }
    if !(0.0..=1.0).contains(&spec.balance_fraction) {
        return Err(Error::InvalidArgument("balance_fraction must be in [0, 1]".into()));
    }
    let mut histogram = StateHistogram::new(spec.histogram_bin_deg)?;
    let stream = |policy, offset| EpisodeStream {
        spec,
        policy,
        next_index: 0,
        stride: 2,
        offset,
        episodes: 0,
    };
    let mut swing = stream(PolicyKind::DatagenSwing, 0);
    let mut balance = stream(PolicyKind::DatagenBalance, 1);

    let mut samples = Vec::with_capacity(spec.target_count);
    match spec.mode {
        DatasetMode::Unbiased => swing.fill(&mut samples, spec.target_count, |_| true)?,
        DatasetMode::Biased => {
            let near = (spec.balance_fraction * spec.target_count as f64).round() as usize;
            let limit = NEAR_UPRIGHT_DEG.to_radians();
            balance.fill(&mut samples, near, |s| s.state.alpha.abs() < limit)?;
            swing.fill(&mut samples, spec.target_count - near, |_| true)?;
        }
    }
    for s in &samples {
        histogram.add(&s.state);
    }
    Ok(Dataset {
        mode: spec.mode,
        samples,
        histogram,
        episodes: swing.episodes + balance.episodes,
    })
}
