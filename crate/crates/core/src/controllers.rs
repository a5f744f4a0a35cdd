//! Runtime control laws: energy-pumping swing-up, PID, LQR state feedback,
//! input saturation and the hybrid swing-up/balance switch.

use serde::{Deserialize, Serialize};

use crate::dynamics::{total_energy, upright_energy};
use crate::params::PendulumParams;
use crate::state::{wrap_angle, State};

/// Sign with `sgn(0) = 0`.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Energy-pumping law `μ (E₀ − E) sgn(α̇ cos α)`, unsaturated.
pub fn swing_up(s: &State, mu: f64, p: &PendulumParams) -> f64 {
    mu * (upright_energy(p) - total_energy(s, p)) * sgn(s.alpha_dot * s.alpha.cos())
}

pub fn saturate(u: f64, u_max: f64) -> f64 {
    u.clamp(-u_max, u_max)
}

/// `u = −K (x − x_ref)` with both angle differences wrapped into (−π, π].
pub fn lqr_control(k: &[f64; 4], x: &State, x_ref: &State) -> f64 {
    let e = [
        wrap_angle(x.theta - x_ref.theta),
        wrap_angle(x.alpha - x_ref.alpha),
        x.theta_dot - x_ref.theta_dot,
        x.alpha_dot - x_ref.alpha_dot,
    ];
    -k.iter().zip(e).map(|(k, e)| k * e).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
    /// Anti-windup bound on |∫e| (rad·s).
    pub integral_limit: f64,
}

/// PID with explicit state. The derivative acts on error differences and is
/// zero on the first sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    pub gains: PidGains,
    pub integral: f64,
    pub prev_error: f64,
    primed: bool,
}

impl PidState {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            prev_error: 0.0,
            primed: false,
        }
    }

    pub fn step(&self, error: f64, dt: f64) -> (f64, PidState) {
        pid_step(self, error, dt)
    }
}

pub fn pid_step(pid: &PidState, error: f64, dt: f64) -> (f64, PidState) {
    let g = pid.gains;
    let integral = (pid.integral + error * dt).clamp(-g.integral_limit, g.integral_limit);
    let derivative = if pid.primed { (error - pid.prev_error) / dt } else { 0.0 };
    let u = g.k_p * error + g.k_i * integral + g.k_d * derivative;
    (
        u,
        PidState {
            gains: g,
            integral,
            prev_error: error,
            primed: true,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HybridMode {
    SwingUp,
    Balance,
}

impl HybridMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HybridMode::SwingUp => "swing_up",
            HybridMode::Balance => "balance",
        }
    }
}

/// Gains and thresholds of the hybrid controller. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridConfig {
    pub k: [f64; 4],
    pub mu: f64,
    pub u_max: f64,
    pub alpha_catch: f64,
    pub alpha_release: f64,
    pub omega_catch: f64,
    pub kick_voltage: f64,
    /// Kick fires in swing-up when |α̇| is below this...
    pub kick_rate: f64,
    /// ...and |α| is above this (near hanging).
    pub kick_angle: f64,
}

/// Mutable part of the hybrid controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridState {
    pub mode: HybridMode,
    pub kicks: u32,
}

impl Default for HybridState {
    fn default() -> Self {
        Self {
            mode: HybridMode::SwingUp,
            kicks: 0,
        }
    }
}

/// Mode after observing `s`. Catch requires both a small angle and a small
/// pendulum rate; release only happens past the wider release angle.
pub fn next_mode(mode: HybridMode, s: &State, cfg: &HybridConfig) -> HybridMode {
    let alpha = wrap_angle(s.alpha).abs();
    match mode {
        HybridMode::SwingUp if alpha < cfg.alpha_catch && s.alpha_dot.abs() < cfg.omega_catch => {
            HybridMode::Balance
        }
        HybridMode::Balance if alpha > cfg.alpha_release => HybridMode::SwingUp,
        m => m,
    }
}

/// Swing-up command with the hanging-rest kick. Returns the unsaturated
/// command and the updated kick counter.
pub fn swing_up_with_kick(s: &State, cfg: &HybridConfig, kicks: u32, p: &PendulumParams) -> (f64, u32) {
    let deadlocked = s.alpha_dot.abs() < cfg.kick_rate && wrap_angle(s.alpha).abs() > cfg.kick_angle;
    if deadlocked {
        let sign = if kicks.is_multiple_of(2) { 1.0 } else { -1.0 };
        (sign * cfg.kick_voltage, kicks + 1)
    } else {
        (swing_up(s, cfg.mu, p), kicks)
    }
}

/// One hybrid update returning the unsaturated command.
pub fn hybrid_command(
    s: &State,
    cfg: &HybridConfig,
    state: HybridState,
    p: &PendulumParams,
) -> (f64, HybridState) {
    let mode = next_mode(state.mode, s, cfg);
    match mode {
        HybridMode::Balance => (lqr_control(&cfg.k, s, &State::upright()), HybridState { mode, ..state }),
        HybridMode::SwingUp => {
            let (u, kicks) = swing_up_with_kick(s, cfg, state.kicks, p);
            (u, HybridState { mode, kicks })
        }
    }
}

/// Hybrid policy output, saturated.
pub fn hybrid_policy(
    s: &State,
    cfg: &HybridConfig,
    state: HybridState,
    p: &PendulumParams,
) -> (f64, HybridState) {
    let (u, next) = hybrid_command(s, cfg, state, p);
    (saturate(u, cfg.u_max), next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_design::{default_weights, LinearModel, LqrDesign};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params() -> PendulumParams {
        PendulumParams::calibrated_default()
    }

    fn table_gains() -> PidGains {
        PidGains {
            k_p: 0.5,
            k_i: 0.5,
            k_d: 0.05,
            integral_limit: 10.0,
        }
    }

    fn hybrid_cfg() -> HybridConfig {
        let (q, r) = default_weights();
        let d = LqrDesign::synthesize(&LinearModel::quanser_qube(), &q, r).unwrap();
        HybridConfig {
            k: d.k,
            mu: 50.0,
            u_max: 10.0,
            alpha_catch: 15f64.to_radians(),
            alpha_release: 25f64.to_radians(),
            omega_catch: 5.0,
            kick_voltage: 5.0,
            kick_rate: 1e-3,
            kick_angle: 170f64.to_radians(),
        }
    }

    #[test]
    fn swing_up_examples() {
        let p = params();
        assert_eq!(swing_up(&State::upright(), 50.0, &p), 0.0);
        assert_eq!(swing_up(&State::hanging(), 50.0, &p), 0.0);
        // E = E0/2 at α = 1.2 rad (cos α > 0), remainder as kinetic energy.
        let e0 = upright_energy(&p);
        let alpha = 1.2f64;
        let alpha_dot = (2.0 * e0 * (0.5 - alpha.cos()) / p.j_p).sqrt();
        let s = State::new(0.0, alpha, 0.0, alpha_dot);
        assert!((total_energy(&s, &p) - 0.5 * e0).abs() < 1e-15);
        assert!(s.alpha_dot > 0.0 && s.alpha.cos() > 0.0);
        let u = swing_up(&s, 50.0, &p);
        assert!((u - 50.0 * e0 / 2.0).abs() < 1e-12, "{u}");
    }

    #[test]
    fn pid_examples() {
        let zero = PidState::new(table_gains());
        assert_eq!(zero.step(0.0, 1.0 / 120.0).0, 0.0);
        let p_only = PidState::new(PidGains {
            k_p: 1.0,
            k_i: 0.0,
            k_d: 0.0,
            integral_limit: 1.0,
        });
        assert_eq!(p_only.step(0.5, 0.01).0, 0.5);
    }

    #[test]
    fn pid_constant_error_matches_closed_form() {
        let g = table_gains();
        let dt = 1.0 / 120.0;
        let e = 0.1;
        let mut pid = PidState::new(g);
        for n in 1..=100 {
            let (u, next) = pid.step(e, dt);
            pid = next;
            let t = n as f64 * dt;
            let expected = g.k_p * e + g.k_i * e * t;
            assert!((u - expected).abs() < 1e-12, "step {n}: {u} vs {expected}");
        }
    }

    #[test]
    fn pid_integral_is_clamped() {
        let mut g = table_gains();
        g.integral_limit = 0.05;
        let mut pid = PidState::new(g);
        for _ in 0..1000 {
            pid = pid.step(1.0, 0.01).1;
        }
        assert_eq!(pid.integral, 0.05);
    }

    #[test]
    fn lqr_examples() {
        let k = [-3.0, 30.0, -1.5, 3.0];
        let x = State::new(0.3, -0.1, 0.2, 0.5);
        assert_eq!(lqr_control(&k, &x, &x), 0.0);
        assert_eq!(lqr_control(&k, &State::new(1.0, 0.0, 0.0, 0.0), &State::upright()), 3.0);
        let a = State::new(179f64.to_radians(), 0.0, 0.0, 0.0);
        let b = State::new(-179f64.to_radians(), 0.0, 0.0, 0.0);
        let u = lqr_control(&[1.0, 0.0, 0.0, 0.0], &a, &b);
        assert!((u - 2f64.to_radians()).abs() < 1e-12, "{u}");
    }

    #[test]
    fn saturate_examples() {
        assert_eq!(saturate(3.0, 10.0), 3.0);
        assert_eq!(saturate(28.0, 10.0), 10.0);
        assert_eq!(saturate(-28.0, 10.0), -10.0);
    }

    #[test]
    fn hybrid_examples() {
        let p = params();
        let cfg = hybrid_cfg();
        let (u, st) = hybrid_policy(&State::upright(), &cfg, HybridState::default(), &p);
        assert_eq!(st.mode, HybridMode::Balance);
        assert_eq!(u, 0.0);
        let (_, st) = hybrid_policy(&State::hanging(), &cfg, HybridState::default(), &p);
        assert_eq!(st.mode, HybridMode::SwingUp);
        let s = State::new(0.0, 12f64.to_radians(), 0.0, 0.5);
        let (_, st) = hybrid_policy(&s, &cfg, HybridState::default(), &p);
        assert_eq!(st.mode, HybridMode::Balance);
    }

    #[test]
    fn hybrid_hysteresis() {
        let p = params();
        let cfg = hybrid_cfg();
        let balancing = HybridState {
            mode: HybridMode::Balance,
            kicks: 0,
        };
        let s = State::new(0.0, 20f64.to_radians(), 0.0, 8.0);
        assert_eq!(hybrid_policy(&s, &cfg, balancing, &p).1.mode, HybridMode::Balance);
        let s = State::new(0.0, 26f64.to_radians(), 0.0, 0.0);
        assert_eq!(hybrid_policy(&s, &cfg, balancing, &p).1.mode, HybridMode::SwingUp);
        // Fast pendulum inside the catch angle is not caught.
        let s = State::new(0.0, 5f64.to_radians(), 0.0, 8.0);
        assert_eq!(hybrid_policy(&s, &cfg, HybridState::default(), &p).1.mode, HybridMode::SwingUp);
    }

    #[test]
    fn kick_breaks_hanging_deadlock_with_alternating_sign() {
        let p = params();
        let cfg = hybrid_cfg();
        let (u1, st) = hybrid_policy(&State::hanging(), &cfg, HybridState::default(), &p);
        let (u2, st) = hybrid_policy(&State::hanging(), &cfg, st, &p);
        assert_eq!(u1, 5.0);
        assert_eq!(u2, -5.0);
        assert_eq!(st.kicks, 2);
        let (u, _) = hybrid_policy(&State::new(0.0, PI, 0.0, 0.5), &cfg, HybridState::default(), &p);
        assert_ne!(u.abs(), 5.0);
    }

    proptest! {
        #[test]
        fn swing_up_is_odd_in_pendulum_rate(alpha in -PI..PI, rate in 0.001f64..30.0, mu in 1.0f64..1000.0) {
            let p = params();
            let a = swing_up(&State::new(0.0, alpha, 0.0, rate), mu, &p);
            let b = swing_up(&State::new(0.0, alpha, 0.0, -rate), mu, &p);
            prop_assert!((a + b).abs() < 1e-12);
        }

        #[test]
        fn saturate_is_idempotent_and_monotone(u in -100.0f64..100.0, v in -100.0f64..100.0, m in 0.1f64..50.0) {
            let s = saturate(u, m);
            prop_assert_eq!(saturate(s, m), s);
            prop_assert!(s.abs() <= m);
            if u <= v {
                prop_assert!(s <= saturate(v, m));
            }
        }

        #[test]
        fn lqr_is_linear_in_wrapped_error(
            e1 in -1.5f64..1.5, e2 in -1.5f64..1.5, r1 in -3.0f64..3.0, r2 in -3.0f64..3.0, c in -1.0f64..1.0,
        ) {
            let k = [-3.46, 37.6, -1.47, 3.37];
            let zero = State::upright();
            let x1 = State::new(e1, e2, r1, r2);
            let x2 = State::new(c * e1, c * e2, c * r1, c * r2);
            let u1 = lqr_control(&k, &x1, &zero);
            let u2 = lqr_control(&k, &x2, &zero);
            prop_assert!((u2 - c * u1).abs() < 1e-9);
        }
    }
}
