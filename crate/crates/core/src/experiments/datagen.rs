//! Data-generation controllers: swing-up with an arm reference tracked by a
//! PID, and LQR balancing perturbed by a slow arm reference and a fast input
//! oscillation. Table frequencies are in Hz, so every sinusoid is
//! `sin(2π f t)`.

use std::f64::consts::PI;

use crate::controllers::{lqr_control, saturate, swing_up, PidState};
use crate::experiments::episode::Controllers;
use crate::params::PendulumParams;
use crate::state::{wrap_angle, State};

/// Arm reference followed during swing-up data collection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingReference {
    /// rad
    pub amplitude: f64,
    pub frequency_hz: f64,
}

impl SwingReference {
    pub fn theta_ref(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency_hz * t).sin()
    }
}

/// Perturbations applied on top of the balancing LQR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceExcitation {
    /// V
    pub oscillation_amplitude: f64,
    pub oscillation_frequency_hz: f64,
    /// rad
    pub reference_amplitude: f64,
    pub reference_frequency_hz: f64,
}

impl BalanceExcitation {
    pub fn reference(&self, t: f64) -> State {
        let theta = self.reference_amplitude * (2.0 * PI * self.reference_frequency_hz * t).sin();
        State::new(theta, 0.0, 0.0, 0.0)
    }

    pub fn oscillation(&self, t: f64) -> f64 {
        self.oscillation_amplitude * (2.0 * PI * self.oscillation_frequency_hz * t).sin()
    }
}

/// Unsaturated swing-up plus arm tracking. The PID acts on the wrapped
/// tracking error `θ_ref − θ`, so a positive gain pulls the arm toward the
/// reference.
pub fn datagen_swing_command(
    t: f64,
    s: &State,
    pid: &PidState,
    dt: f64,
    ctx: &Controllers,
    p: &PendulumParams,
) -> (f64, PidState) {
    let error = wrap_angle(ctx.swing_reference.theta_ref(t) - s.theta);
    let (u_pid, pid) = pid.step(error, dt);
    (swing_up(s, ctx.hybrid.mu, p) + u_pid, pid)
}

pub fn datagen_swing(
    t: f64,
    s: &State,
    pid: &PidState,
    dt: f64,
    ctx: &Controllers,
    p: &PendulumParams,
) -> (f64, PidState) {
    let (u, pid) = datagen_swing_command(t, s, pid, dt, ctx, p);
    (saturate(u, ctx.hybrid.u_max), pid)
}

/// Unsaturated `−K (x − x_ref(t)) + u_osc(t)`.
pub fn datagen_balance_command(t: f64, s: &State, ctx: &Controllers) -> f64 {
    let e = &ctx.balance_excitation;
    lqr_control(&ctx.hybrid.k, s, &e.reference(t)) + e.oscillation(t)
}

pub fn datagen_balance(t: f64, s: &State, ctx: &Controllers) -> f64 {
    saturate(datagen_balance_command(t, s, ctx), ctx.hybrid.u_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LoadedConfig;

    fn ctx() -> (Controllers, PendulumParams) {
        let loaded = LoadedConfig::bundled();
        let d = loaded.config.design().unwrap();
        (loaded.config.controllers(d.k), loaded.params)
    }

    #[test]
    fn swing_reference_values() {
        let (c, _) = ctx();
        let r = c.swing_reference;
        assert_eq!(r.theta_ref(0.0), 0.0);
        assert!((r.theta_ref(5.0) - 60f64.to_radians()).abs() < 1e-12);
        assert!(r.theta_ref(10.0).abs() < 1e-12);
    }

    #[test]
    fn balance_excitation_values() {
        let (c, _) = ctx();
        assert_eq!(datagen_balance(0.0, &State::upright(), &c), 0.0);
        // Quarter period of the fast oscillation with x = x_ref.
        let t = 1.0 / (4.0 * 2.4);
        let x = c.balance_excitation.reference(t);
        assert!((datagen_balance_command(t, &x, &c) - 28.0).abs() < 1e-9);
        assert_eq!(datagen_balance(t, &x, &c), c.hybrid.u_max);
        // Slow reference peaks at 30° after a quarter of 1/0.03 s.
        let peak = c.balance_excitation.reference(1.0 / (4.0 * 0.03)).theta;
        assert!((peak - 30f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn swing_datagen_is_saturated_and_tracks() {
        let (c, p) = ctx();
        let pid = PidState::new(c.pid);
        // At t = 5 s the reference is +60°; an arm at 0 is pushed positive.
        let (u, next) = datagen_swing(5.0, &State::hanging(), &pid, 1.0 / 120.0, &c, &p);
        assert!(u > 0.0 && u <= c.hybrid.u_max);
        assert!(next.integral > 0.0);
        let fast = State::new(-3.0, 0.3, 0.0, 20.0);
        let (u, _) = datagen_swing(5.0, &fast, &pid, 1.0 / 120.0, &c, &p);
        assert!(u.abs() <= c.hybrid.u_max);
    }
}
