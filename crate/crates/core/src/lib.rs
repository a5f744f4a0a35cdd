//! Furuta pendulum simulation, LQR design, baseline controllers and
//! closed-loop robustness experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod config;
pub mod control_design;
pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod linalg;
pub mod params;
pub mod state;

pub use config::{ExperimentConfig, LoadedConfig};
pub use control_design::{LinearModel, LqrDesign};
pub use controllers::{HybridConfig, HybridMode, PidGains};
pub use error::{Error, Result};
pub use estimation::{AngleEncoding, NoiseModel, VelocityFilterState};
pub use experiments::{
    collect_dataset, frequency_sweep, noise_sweep, reward, run_episode, success_criterion, Dataset, DatasetMode,
    EpisodeLog, EpisodeSpec, Measurement, PolicyKind, StateHistogram, SweepKind, SweepReport, SweepResult,
};
pub use params::{ParamsFile, PendulumParams};
pub use state::{wrap_angle, State, StateDerivative};
