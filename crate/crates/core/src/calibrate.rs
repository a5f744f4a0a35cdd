//! Fits the physical parameters of the nonlinear model so that its
//! numerical linearization at the upright equilibrium reproduces a target
//! linear model.
//!
//! `m_p`, `l` and `g` are held at their initial values (the linear model only
//! pins ratios such as `m_p·l·L_a / J_p`); the remaining six parameters are
//! fitted in log space by Levenberg–Marquardt on the relative errors of
//! `A[2][1]`, `A[3][1]`, `A[2][2]`, `A[3][3]`, `B[2]` and `B[3]`.

use crate::control_design::LinearModel;
use crate::dynamics::linearize;
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::params::PendulumParams;
use crate::state::State;

/// Finite-difference step used when linearizing during calibration.
pub const LINEARIZATION_STEP: f64 = 1e-5;

/// Matched entries: (label, row, column); column `None` selects `B`.
const ENTRIES: [(&str, usize, Option<usize>); 6] = [
    ("A[2][1]", 2, Some(1)),
    ("A[3][1]", 3, Some(1)),
    ("A[2][2]", 2, Some(2)),
    ("A[3][3]", 3, Some(3)),
    ("B[2]", 2, None),
    ("B[3]", 3, None),
];

/// Entries that must land within 5%.
pub const PRIMARY_ENTRIES: [&str; 4] = ["A[2][1]", "A[3][1]", "B[2]", "B[3]"];
pub const PRIMARY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub params: PendulumParams,
    pub iterations: usize,
    /// Sum of squared relative errors over all six matched entries.
    pub cost: f64,
    pub relative_errors: Vec<(String, f64)>,
}

fn entry(model: &LinearModel, row: usize, col: Option<usize>) -> f64 {
    match col {
        Some(c) => model.a[row][c],
        None => model.b[row],
    }
}

/// Signed relative error of every matched entry of `model` against `target`.
pub fn relative_errors(model: &LinearModel, target: &LinearModel) -> Vec<(String, f64)> {
    ENTRIES
        .iter()
        .map(|&(label, row, col)| {
            let want = entry(target, row, col);
            let got = entry(model, row, col);
            (label.to_string(), (got - want) / want.abs().max(1e-12))
        })
        .collect()
}

fn pack(p: &PendulumParams) -> [f64; 6] {
    [p.l_a, p.j_a, p.j_p, p.k_u, p.b_a, p.b_p].map(|v| v.max(1e-300).ln())
}

fn unpack(x: &[f64; 6], base: &PendulumParams) -> PendulumParams {
    PendulumParams {
        l_a: x[0].exp(),
        j_a: x[1].exp(),
        j_p: x[2].exp(),
        k_u: x[3].exp(),
        b_a: x[4].exp(),
        b_p: x[5].exp(),
        ..*base
    }
}

fn residuals(x: &[f64; 6], base: &PendulumParams, target: &LinearModel) -> Result<[f64; 6]> {
    residuals_of(&unpack(x, base), target)
}

fn residuals_of(p: &PendulumParams, target: &LinearModel) -> Result<[f64; 6]> {
    let model = linearize(p, &State::upright(), 0.0, LINEARIZATION_STEP)?;
    let mut r = [0.0; 6];
    for (ri, (_, e)) in r.iter_mut().zip(relative_errors(&model, target)) {
        *ri = e;
    }
    Ok(r)
}

fn cost(r: &[f64; 6]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

const MAX_ITERATIONS: usize = 300;
const COST_TOLERANCE: f64 = 1e-24;

pub fn calibrate_params(target: &LinearModel, initial: &PendulumParams) -> Result<Calibration> {
    initial.validate()?;
    if ENTRIES.iter().any(|&(_, r, c)| !entry(target, r, c).is_finite()) {
        return Err(Error::InvalidArgument("target model has non-finite entries".into()));
    }
    let mut x = pack(initial);
    let mut r = residuals_of(initial, target)?;
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;

    while c > COST_TOLERANCE && iterations < MAX_ITERATIONS {
        iterations += 1;
        // Forward-difference Jacobian in log space.
        let mut jac = [[0.0; 6]; 6];
        for j in 0..6 {
            let mut xp = x;
            let h = 1e-7;
            xp[j] += h;
            let rp = residuals(&xp, initial, target)?;
            for i in 0..6 {
                jac[i][j] = (rp[i] - r[i]) / h;
            }
        }
        let mut jtj = [[0.0; 6]; 6];
        let mut jtr = [0.0; 6];
        for a in 0..6 {
            for b in 0..6 {
                jtj[a][b] = (0..6).map(|i| jac[i][a] * jac[i][b]).sum();
            }
            jtr[a] = (0..6).map(|i| jac[i][a] * r[i]).sum();
        }

        let mut accepted = false;
        for _ in 0..30 {
            let mut m = Vec::with_capacity(36);
            for (a, row) in jtj.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    let damp = if a == b { lambda * v.max(1e-12) } else { 0.0 };
                    m.push(v + damp);
                }
            }
            let rhs = jtr.iter().map(|v| -v).collect();
            let Some(delta) = solve_dense(m, rhs, 6) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = x;
            for (t, d) in trial.iter_mut().zip(&delta) {
                *t += d.clamp(-2.0, 2.0);
            }
            if let Ok(rt) = residuals(&trial, initial, target) {
                let ct = cost(&rt);
                if ct < c {
                    x = trial;
                    r = rt;
                    c = ct;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }

    let params = unpack(&x, initial);
    let params = if iterations == 0 { *initial } else { params };
    let model = linearize(&params, &State::upright(), 0.0, LINEARIZATION_STEP)?;
    let relative_errors = relative_errors(&model, target);
    let primary_ok = relative_errors
        .iter()
        .filter(|(label, _)| PRIMARY_ENTRIES.contains(&label.as_str()))
        .all(|(_, e)| e.abs() <= PRIMARY_TOLERANCE);
    if !primary_ok {
        return Err(Error::CalibrationFailed { relative_errors });
    }
    Ok(Calibration {
        params,
        iterations,
        cost: c,
        relative_errors,
    })
}
