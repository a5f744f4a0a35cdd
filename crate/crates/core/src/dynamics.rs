//! Nonlinear Furuta pendulum model.
//!
//! Generalized coordinates are the arm angle θ and the pendulum angle α
//! (α = 0 upright). With `κ = m_p·L_a·l`, `J₀ = J_a + m_p·L_a²` and
//! `s = sin α`, `c = cos α`, the Lagrangian
//!
//! ```text
//! T = ½(J₀ + J_p s²)θ̇² − κ c θ̇ α̇ + ½ J_p α̇²
//! V = m_p g l c
//! ```
//!
//! with viscous damping on both joints and arm torque `τ = k_u·u` gives
//!
//! ```text
//! (J₀ + J_p s²) θ̈ − κ c α̈ + 2 J_p s c θ̇ α̇ + κ s α̇² = τ − b_a θ̇
//! −κ c θ̈ + J_p α̈ − J_p s c θ̇² − m_p g l s          = −b_p α̇
//! ```
//!
//! The sign of the coupling term follows the convention in which a positive
//! voltage accelerates both θ and α positively near the upright position.

use crate::control_design::LinearModel;
use crate::error::{Error, Result};
use crate::params::PendulumParams;
use crate::state::{State, StateDerivative};

pub fn dynamics_derivative(s: &State, u: f64, p: &PendulumParams) -> Result<StateDerivative> {
    let (sa, ca) = s.alpha.sin_cos();
    let kappa = p.m_p * p.l_a * p.l;
    let j0 = p.j_a + p.m_p * p.l_a * p.l_a;

    let m11 = j0 + p.j_p * sa * sa;
    let m12 = -kappa * ca;
    let m22 = p.j_p;
    let det = m11 * m22 - m12 * m12;
    if !(det > 0.0) {
        return Err(Error::InvalidParams(format!(
            "mass matrix determinant {det:e} is not positive"
        )));
    }

    let tau = p.k_u * u;
    let f_arm = tau
        - p.b_a * s.theta_dot
        - 2.0 * p.j_p * sa * ca * s.theta_dot * s.alpha_dot
        - kappa * sa * s.alpha_dot * s.alpha_dot;
    let f_pend =
        -p.b_p * s.alpha_dot + p.j_p * sa * ca * s.theta_dot * s.theta_dot + p.m_p * p.g * p.l * sa;

    Ok(StateDerivative {
        d_theta: s.theta_dot,
        d_alpha: s.alpha_dot,
        d_theta_dot: (m22 * f_arm - m12 * f_pend) / det,
        d_alpha_dot: (m11 * f_pend - m12 * f_arm) / det,
    })
}

fn advance(s: &State, d: &StateDerivative, h: f64) -> State {
    State::new(
        s.theta + h * d.d_theta,
        s.alpha + h * d.d_alpha,
        s.theta_dot + h * d.d_theta_dot,
        s.alpha_dot + h * d.d_alpha_dot,
    )
}

/// One classical RK4 step with `u` held constant over the step.
pub fn step(s: &State, u: f64, dt: f64, p: &PendulumParams) -> Result<State> {
    if !(dt > 0.0 && dt <= 0.05) {
        return Err(Error::InvalidArgument(format!("step size {dt} outside (0, 0.05]")));
    }
    if !u.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite input {u}")));
    }
    let k1 = dynamics_derivative(s, u, p)?;
    let k2 = dynamics_derivative(&advance(s, &k1, 0.5 * dt), u, p)?;
    let k3 = dynamics_derivative(&advance(s, &k2, 0.5 * dt), u, p)?;
    let k4 = dynamics_derivative(&advance(s, &k3, dt), u, p)?;
    let (a, b, c, d) = (k1.to_array(), k2.to_array(), k3.to_array(), k4.to_array());
    let x = s.to_array();
    let mut next = [0.0; 4];
    for i in 0..4 {
        next[i] = x[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
    }
    let next = State::from_array(next);
    if !next.is_finite() {
        return Err(Error::IntegrationBlowup { state: next });
    }
    Ok(next)
}

/// Holds `u` for `substeps` RK4 steps of `dt` each.
pub fn integrate_held(
    s: &State,
    u: f64,
    dt: f64,
    substeps: usize,
    p: &PendulumParams,
) -> Result<State> {
    let mut x = *s;
    for _ in 0..substeps {
        x = step(&x, u, dt, p)?;
    }
    Ok(x)
}

/// Pendulum-only energy with the potential zero at pivot height:
/// `½ J_p α̇² + m_p g l cos α`. This is the quantity the swing-up law
/// regulates.
pub fn total_energy(s: &State, p: &PendulumParams) -> f64 {
    0.5 * p.j_p * s.alpha_dot * s.alpha_dot + p.m_p * p.g * p.l * s.alpha.cos()
}

/// Potential energy of the upright pendulum, `m_p g l`.
pub fn upright_energy(p: &PendulumParams) -> f64 {
    p.m_p * p.g * p.l
}

/// Full mechanical energy of arm and pendulum (same potential reference).
/// Conserved when undamped and unforced.
pub fn mechanical_energy(s: &State, p: &PendulumParams) -> f64 {
    let (sa, ca) = s.alpha.sin_cos();
    let kappa = p.m_p * p.l_a * p.l;
    let j0 = p.j_a + p.m_p * p.l_a * p.l_a;
    let kinetic = 0.5 * (j0 + p.j_p * sa * sa) * s.theta_dot * s.theta_dot
        - kappa * ca * s.theta_dot * s.alpha_dot
        + 0.5 * p.j_p * s.alpha_dot * s.alpha_dot;
    kinetic + p.m_p * p.g * p.l * ca
}

/// Central-difference linearization of the acceleration rows around
/// `(x0, u0)`. The kinematic rows are filled in exactly.
pub fn linearize(p: &PendulumParams, x0: &State, u0: f64, h: f64) -> Result<LinearModel> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::InvalidArgument(format!("finite-difference step {h} outside [1e-7, 1e-3]")));
    }
    p.validate()?;
    let mut a = [[0.0; 4]; 4];
    a[0][2] = 1.0;
    a[1][3] = 1.0;
    let mut b = [0.0; 4];

    let base = x0.to_array();
    for j in 0..4 {
        let mut plus = base;
        let mut minus = base;
        plus[j] += h;
        minus[j] -= h;
        let fp = dynamics_derivative(&State::from_array(plus), u0, p)?;
        let fm = dynamics_derivative(&State::from_array(minus), u0, p)?;
        a[2][j] = (fp.d_theta_dot - fm.d_theta_dot) / (2.0 * h);
        a[3][j] = (fp.d_alpha_dot - fm.d_alpha_dot) / (2.0 * h);
    }
    let fp = dynamics_derivative(x0, u0 + h, p)?;
    let fm = dynamics_derivative(x0, u0 - h, p)?;
    b[2] = (fp.d_theta_dot - fm.d_theta_dot) / (2.0 * h);
    b[3] = (fp.d_alpha_dot - fm.d_alpha_dot) / (2.0 * h);

    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteLinearization(format!("A[{i}][{j}]")));
            }
        }
    }
    if let Some(i) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLinearization(format!("B[{i}]")));
    }
    Ok(LinearModel { a, b })
}
