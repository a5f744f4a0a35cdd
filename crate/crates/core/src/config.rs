//! Experiment configuration document.
//!
//! All defaults live in `data/default-config.json`, which is embedded into
//! the crate. Angles in the document are in degrees; they are converted to
//! radians when resolved into runtime controller settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control_design::{LinearModel, LqrDesign};
use crate::controllers::{HybridConfig, PidGains};
use crate::error::{Error, Result};
use crate::estimation::NoiseModel;
use crate::experiments::datagen::{BalanceExcitation, SwingReference};
use crate::experiments::dataset::{DatasetMode, DatasetSpec};
use crate::experiments::episode::{Controllers, EpisodeSpec, Measurement, PolicyKind};
use crate::linalg::{self, Mat4};
use crate::params::{ParamsFile, PendulumParams, DEFAULT_PARAMS_JSON};
use crate::state::State;

const DEFAULT_CONFIG_JSON: &str = include_str!("../data/default-config.json");
const BUNDLED_PARAMS_NAME: &str = "default-params.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Parameter file, relative to the config file's directory.
    pub params_file: PathBuf,
    pub design: DesignBlock,
    pub controller: ControllerBlock,
    pub datagen: DatagenBlock,
    pub noise: NoiseBlock,
    pub run: RunBlock,
    pub sweep: SweepBlock,
    pub dataset: DatasetBlock,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBlock {
    #[serde(rename = "A")]
    pub a: Mat4,
    #[serde(rename = "B")]
    pub b: [f64; 4],
    #[serde(rename = "Q")]
    pub q: Mat4,
    #[serde(rename = "R")]
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerBlock {
    pub u_max: f64,
    pub mu: f64,
    pub pid: PidGains,
    pub alpha_catch_deg: f64,
    pub alpha_release_deg: f64,
    pub omega_catch: f64,
    pub kick: KickBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KickBlock {
    /// Defaults to `u_max / 2` when absent.
    #[serde(default)]
    pub voltage: Option<f64>,
    pub rate_threshold: f64,
    pub angle_threshold_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatagenBlock {
    pub swing: SwingReferenceBlock,
    pub balance: BalanceExcitationBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwingReferenceBlock {
    pub amplitude_deg: f64,
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceExcitationBlock {
    pub oscillation_amplitude_v: f64,
    pub oscillation_frequency_hz: f64,
    pub reference_amplitude_deg: f64,
    pub reference_frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub sigma_deg: f64,
    pub smoothing: f64,
    /// Feed the policy from the noisy measurement path instead of the
    /// simulator state. Forced on when `sigma_deg > 0`.
    pub measured: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateBlock {
    pub theta_deg: f64,
    pub alpha_deg: f64,
    pub theta_dot: f64,
    pub alpha_dot: f64,
}

impl InitialStateBlock {
    pub fn to_state(&self) -> State {
        State::new(
            self.theta_deg.to_radians(),
            self.alpha_deg.to_radians(),
            self.theta_dot,
            self.alpha_dot,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub f_s: f64,
    pub duration: f64,
    pub seed: u64,
    pub physics_substeps: usize,
    pub initial_state: InitialStateBlock,
    /// Uniform jitter (±deg) added to both initial angles, drawn from the seed.
    pub initial_jitter_deg: f64,
    pub hold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub noise_sigmas_deg: Vec<f64>,
    pub frequencies_hz: Vec<f64>,
    pub trials: usize,
    /// Initial |α| of the frequency sweep's balancing episodes.
    pub balance_alpha0_deg: f64,
    pub balance_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetBlock {
    pub target_count: usize,
    pub episode_duration: f64,
    pub histogram_bin_deg: f64,
    /// Share of a biased dataset drawn from balance-excitation episodes.
    pub balance_fraction: f64,
    /// Sampling rate of the recorded data.
    pub f_s: f64,
    /// Uniform perturbation of the hanging start of each episode.
    pub initial_jitter_deg: f64,
}

/// A config together with the parameters it references.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub params: PendulumParams,
    pub params_provenance: String,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bundled() -> Self {
        Self::from_json(DEFAULT_CONFIG_JSON).expect("bundled default-config.json is valid")
    }

    pub fn bundled_json() -> &'static str {
        DEFAULT_CONFIG_JSON
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let r = &self.run;
        if !(10.0..=1000.0).contains(&r.f_s) {
            return bad(format!("run.f_s must be in [10, 1000] Hz, got {}", r.f_s));
        }
        if !(r.duration > 0.0 && r.duration <= 600.0) {
            return bad(format!("run.duration must be in (0, 600] s, got {}", r.duration));
        }
        if r.physics_substeps == 0 {
            return bad("run.physics_substeps must be >= 1".into());
        }
        if !(r.hold > 0.0) || !(r.initial_jitter_deg >= 0.0) {
            return bad("run.hold must be > 0 and run.initial_jitter_deg >= 0".into());
        }
        let c = &self.controller;
        if !(c.u_max > 0.0) || !(c.mu >= 0.0) {
            return bad("controller.u_max must be > 0 and controller.mu >= 0".into());
        }
        if !(c.alpha_catch_deg > 0.0 && c.alpha_release_deg > c.alpha_catch_deg) {
            return bad("controller thresholds must satisfy 0 < alpha_catch_deg < alpha_release_deg".into());
        }
        if !(self.noise.sigma_deg >= 0.0) || !(self.noise.smoothing > 0.0 && self.noise.smoothing <= 1.0) {
            return bad("noise.sigma_deg must be >= 0 and noise.smoothing in (0, 1]".into());
        }
        if !(self.design.r > 0.0) {
            return bad("design.R must be > 0".into());
        }
        let d = &self.dataset;
        if d.target_count > 10_000_000 || !(0.0..=1.0).contains(&d.balance_fraction) || !(d.histogram_bin_deg > 0.0) {
            return bad("dataset block out of range".into());
        }
        if (360.0 / d.histogram_bin_deg - (360.0 / d.histogram_bin_deg).round()).abs() > 1e-9 {
            return bad("dataset.histogram_bin_deg must divide 360".into());
        }
        if !(d.initial_jitter_deg >= 0.0) {
            return bad("dataset.initial_jitter_deg must be >= 0".into());
        }
        if !(10.0..=1000.0).contains(&d.f_s) || !(d.episode_duration > 0.0 && d.episode_duration <= 600.0) {
            return bad("dataset.f_s must be in [10, 1000] and episode_duration in (0, 600]".into());
        }
        let s = &self.sweep;
        if !(s.balance_duration > 0.0 && s.balance_duration <= 600.0) {
            return bad("sweep.balance_duration must be in (0, 600]".into());
        }
        Ok(())
    }

    pub fn linear_model(&self) -> LinearModel {
        LinearModel {
            a: self.design.a,
            b: self.design.b,
        }
    }

    pub fn design(&self) -> Result<LqrDesign> {
        let q = linalg::symmetrize(&self.design.q);
        LqrDesign::synthesize(&self.linear_model(), &q, self.design.r)
    }

    /// Runtime controller settings with the LQR gain from `design`.
    pub fn controllers(&self, k: [f64; 4]) -> Controllers {
        let c = &self.controller;
        Controllers {
            hybrid: HybridConfig {
                k,
                mu: c.mu,
                u_max: c.u_max,
                alpha_catch: c.alpha_catch_deg.to_radians(),
                alpha_release: c.alpha_release_deg.to_radians(),
                omega_catch: c.omega_catch,
                kick_voltage: c.kick.voltage.unwrap_or(c.u_max / 2.0),
                kick_rate: c.kick.rate_threshold,
                kick_angle: c.kick.angle_threshold_deg.to_radians(),
            },
            pid: c.pid,
            swing_reference: SwingReference {
                amplitude: self.datagen.swing.amplitude_deg.to_radians(),
                frequency_hz: self.datagen.swing.frequency_hz,
            },
            balance_excitation: BalanceExcitation {
                oscillation_amplitude: self.datagen.balance.oscillation_amplitude_v,
                oscillation_frequency_hz: self.datagen.balance.oscillation_frequency_hz,
                reference_amplitude: self.datagen.balance.reference_amplitude_deg.to_radians(),
                reference_frequency_hz: self.datagen.balance.reference_frequency_hz,
            },
        }
    }

    pub fn measurement(&self, seed: u64) -> Result<Measurement> {
        if self.noise.measured || self.noise.sigma_deg > 0.0 {
            Ok(Measurement::Measured {
                noise: NoiseModel::new(self.noise.sigma_deg, seed)?,
                smoothing: self.noise.smoothing,
            })
        } else {
            Ok(Measurement::Privileged)
        }
    }

    /// Episode described by the `run` block.
    pub fn episode_spec(&self, params: &PendulumParams, k: [f64; 4], policy: PolicyKind) -> Result<EpisodeSpec> {
        let initial = crate::experiments::episode::jittered_initial(
            self.run.initial_state.to_state(),
            self.run.initial_jitter_deg.to_radians(),
            self.run.seed,
        );
        Ok(EpisodeSpec {
            params: *params,
            controllers: self.controllers(k),
            policy,
            f_s: self.run.f_s,
            duration: self.run.duration,
            substeps: self.run.physics_substeps,
            initial,
            measurement: self.measurement(self.run.seed)?,
        })
    }
}

impl ExperimentConfig {
    /// Dataset collection described by the `dataset` block. The physics
    /// rate of the `run` block is kept.
    pub fn dataset_spec(&self, params: &PendulumParams, k: [f64; 4], mode: DatasetMode) -> Result<DatasetSpec> {
        let d = &self.dataset;
        let mut episode = self.episode_spec(params, k, PolicyKind::DatagenSwing)?;
        let physics_rate = self.run.f_s * self.run.physics_substeps as f64;
        episode.f_s = d.f_s;
        episode.duration = d.episode_duration;
        episode.substeps = ((physics_rate / d.f_s).ceil() as usize).max(1);
        Ok(DatasetSpec {
            mode,
            target_count: d.target_count,
            episode,
            balance_fraction: d.balance_fraction,
            initial_jitter: d.initial_jitter_deg.to_radians(),
            histogram_bin_deg: d.histogram_bin_deg,
            seed: self.run.seed,
        })
    }
}

impl LoadedConfig {
    /// The embedded default config with the embedded calibrated parameters.
    pub fn bundled() -> Self {
        let file = ParamsFile::from_json(DEFAULT_PARAMS_JSON).expect("bundled params are valid");
        Self {
            config: ExperimentConfig::bundled(),
            params: file.params,
            params_provenance: file.provenance,
        }
    }

    /// Reads a config file; `params_file` is resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config = ExperimentConfig::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let params_path = base.join(&config.params_file);
        if !params_path.exists() {
            return Err(Error::Config(format!(
                "params file {} does not exist",
                params_path.display()
            )));
        }
        let file = ParamsFile::load(&params_path)?;
        Ok(Self {
            config,
            params: file.params,
            params_provenance: file.provenance,
        })
    }

    pub fn bundled_params_name() -> &'static str {
        BUNDLED_PARAMS_NAME
    }
}
