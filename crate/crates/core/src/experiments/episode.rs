//! Closed-loop episode execution and the episode log.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controllers::{
    hybrid_command, lqr_control, next_mode, saturate, swing_up_with_kick, HybridConfig, HybridMode,
    HybridState, PidGains, PidState,
};
use crate::dynamics::integrate_held;
use crate::error::{Error, Result};
use crate::estimation::{corrupt_measurement, velocity_step, NoiseModel, VelocityFilterState};
use crate::experiments::datagen::{
    datagen_balance_command, datagen_swing_command, BalanceExcitation, SwingReference,
};
use crate::experiments::{derive_seed, reward, SeedStream};
use crate::params::PendulumParams;
use crate::state::{wrap_angle, State};

/// Every controller setting an episode may need, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controllers {
    pub hybrid: HybridConfig,
    pub pid: PidGains,
    pub swing_reference: SwingReference,
    pub balance_excitation: BalanceExcitation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Swing-up with LQR catch and hysteresis.
    Hybrid,
    /// LQR toward the upright equilibrium only.
    Lqr,
    /// Energy pumping only.
    Swing,
    /// Swing-up plus PID tracking of a sinusoidal arm reference.
    DatagenSwing,
    /// Hybrid switching whose balance mode is the excited LQR.
    DatagenBalance,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Hybrid,
        PolicyKind::Lqr,
        PolicyKind::Swing,
        PolicyKind::DatagenSwing,
        PolicyKind::DatagenBalance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Hybrid => "hybrid",
            PolicyKind::Lqr => "lqr",
            PolicyKind::Swing => "swing",
            PolicyKind::DatagenSwing => "datagen-swing",
            PolicyKind::DatagenBalance => "datagen-balance",
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy {s:?}")))
    }
}

/// Where the policy's state comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measurement {
    /// Simulator state, as from the joint encoders.
    Privileged,
    /// Noisy angles with filtered finite-difference velocities.
    Measured { noise: NoiseModel, smoothing: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSpec {
    pub params: PendulumParams,
    pub controllers: Controllers,
    pub policy: PolicyKind,
    pub f_s: f64,
    pub duration: f64,
    /// RK4 steps per control period.
    pub substeps: usize,
    pub initial: State,
    pub measurement: Measurement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRow {
    pub t: f64,
    /// Wrapped true state.
    pub state: State,
    pub theta_meas: Option<f64>,
    pub alpha_meas: Option<f64>,
    pub u_cmd: f64,
    pub u_sat: f64,
    pub reward: f64,
    pub mode: HybridMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub f_s: f64,
    pub rows: Vec<EpisodeRow>,
    /// Set when the integration blew up; rows up to that point are kept.
    pub failure: Option<String>,
}

pub const CSV_HEADER: &str = "t,theta,alpha,theta_dot,alpha_dot,theta_meas,alpha_meas,u_cmd,u_sat,reward,mode";

/// Formats `x` with 9 significant digits, shortest of fixed or exponent form.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed)
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

impl EpisodeLog {
    pub fn duration(&self) -> f64 {
        self.rows.len() as f64 / self.f_s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 120);
        out.push_str(CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(fmt_sig9).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt_sig9(r.t),
                fmt_sig9(r.state.theta),
                fmt_sig9(r.state.alpha),
                fmt_sig9(r.state.theta_dot),
                fmt_sig9(r.state.alpha_dot),
                opt(r.theta_meas),
                opt(r.alpha_meas),
                fmt_sig9(r.u_cmd),
                fmt_sig9(r.u_sat),
                fmt_sig9(r.reward),
                r.mode.as_str()
            );
        }
        out
    }
}

/// `state` with both angles shifted by independent uniform draws in
/// `[−jitter, jitter]` (radians). Zero jitter returns `state` unchanged.
pub fn jittered_initial(state: State, jitter: f64, seed: u64) -> State {
    if jitter <= 0.0 {
        return state;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SeedStream::InitialState, 0));
    let dt: f64 = rng.random_range(-jitter..=jitter);
    let da: f64 = rng.random_range(-jitter..=jitter);
    State::new(state.theta + dt, state.alpha + da, state.theta_dot, state.alpha_dot)
}

/// Per-episode controller memory.
struct PolicyRunner {
    kind: PolicyKind,
    hybrid: HybridState,
    pid: PidState,
}

impl PolicyRunner {
    fn new(kind: PolicyKind, ctx: &Controllers) -> Self {
        Self {
            kind,
            hybrid: HybridState::default(),
            pid: PidState::new(ctx.pid),
        }
    }

    /// Unsaturated command and the mode to log.
    fn command(&mut self, t: f64, s: &State, dt: f64, ctx: &Controllers, p: &PendulumParams) -> (f64, HybridMode) {
        match self.kind {
            PolicyKind::Hybrid => {
                let (u, next) = hybrid_command(s, &ctx.hybrid, self.hybrid, p);
                self.hybrid = next;
                (u, next.mode)
            }
            PolicyKind::Lqr => (lqr_control(&ctx.hybrid.k, s, &State::upright()), HybridMode::Balance),
            PolicyKind::Swing => {
                let (u, kicks) = swing_up_with_kick(s, &ctx.hybrid, self.hybrid.kicks, p);
                self.hybrid.kicks = kicks;
                (u, HybridMode::SwingUp)
            }
            PolicyKind::DatagenSwing => {
                let (u, pid) = datagen_swing_command(t, s, &self.pid, dt, ctx, p);
                self.pid = pid;
                (u, HybridMode::SwingUp)
            }
            PolicyKind::DatagenBalance => {
                let mode = next_mode(self.hybrid.mode, s, &ctx.hybrid);
                self.hybrid.mode = mode;
                match mode {
                    HybridMode::Balance => (datagen_balance_command(t, s, ctx), mode),
                    HybridMode::SwingUp => {
                        let (u, kicks) = swing_up_with_kick(s, &ctx.hybrid, self.hybrid.kicks, p);
                        self.hybrid.kicks = kicks;
                        (u, mode)
                    }
                }
            }
        }
    }
}

pub const MAX_ROWS: f64 = 1e7;

/// Runs one closed-loop episode. Each tick: measure (optionally corrupt and
/// filter), evaluate the policy, saturate, hold the input over the control
/// period, log. Integration blowups end the episode with a failure marker.
pub fn run_episode(spec: &EpisodeSpec) -> Result<EpisodeLog> {
    if !(spec.f_s > 0.0 && spec.f_s.is_finite()) || !(spec.duration > 0.0) {
        return Err(Error::InvalidArgument("f_s and duration must be positive".into()));
    }
    if spec.duration * spec.f_s > MAX_ROWS {
        return Err(Error::InvalidArgument(format!(
            "episode of {} rows exceeds the limit of 1e7",
            spec.duration * spec.f_s
        )));
    }
    if spec.substeps == 0 || !spec.initial.is_finite() {
        return Err(Error::InvalidArgument("substeps must be >= 1 and the initial state finite".into()));
    }
    spec.params.validate()?;

    let n_rows = (spec.duration * spec.f_s).round() as usize;
    let period = 1.0 / spec.f_s;
    let dt = period / spec.substeps as f64;
    let ctx = &spec.controllers;
    let u_max = ctx.hybrid.u_max;

    let mut runner = PolicyRunner::new(spec.policy, ctx);
    let mut filter = VelocityFilterState::default();
    let mut rng = match spec.measurement {
        Measurement::Measured { noise, .. } => Some(noise.rng()),
        Measurement::Privileged => None,
    };

    let mut rows = Vec::with_capacity(n_rows);
    let mut failure = None;
    let mut x = spec.initial;
    for k in 0..n_rows {
        let t = k as f64 / spec.f_s;
        let (observed, meas) = match (&spec.measurement, rng.as_mut()) {
            (Measurement::Measured { noise, smoothing }, Some(rng)) => {
                let (th, al) = corrupt_measurement(&x, noise, rng);
                let (next, v_theta, v_alpha) = velocity_step(&filter, th, al, period, *smoothing);
                filter = next;
                (State::new(th, al, v_theta, v_alpha), Some((wrap_angle(th), wrap_angle(al))))
            }
            _ => (x, None),
        };

        let (u_cmd, mode) = runner.command(t, &observed, period, ctx, &spec.params);
        let u_sat = saturate(u_cmd, u_max);
        let wrapped = x.wrapped();
        rows.push(EpisodeRow {
            t,
            state: wrapped,
            theta_meas: meas.map(|m| m.0),
            alpha_meas: meas.map(|m| m.1),
            u_cmd,
            u_sat,
            reward: reward(&wrapped),
            mode,
        });

        match integrate_held(&x, u_sat, dt, spec.substeps, &spec.params) {
            Ok(next) => x = next,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    Ok(EpisodeLog {
        f_s: spec.f_s,
        rows,
        failure,
    })
}
