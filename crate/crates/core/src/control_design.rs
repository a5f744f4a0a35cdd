//! LQR synthesis for single-input linear models.
//!
//! The continuous algebraic Riccati equation
//! `AᵀP + PA − PBR⁻¹BᵀP + Q = 0` is solved by integrating the Riccati
//! differential equation from `P = Q` until it settles near the stabilizing
//! solution, then polishing with Newton–Kleinman iterations (each a
//! Lyapunov solve) until the algebraic residual reaches roundoff.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Mat4};

/// Continuous-time single-input linear model `ẋ = A x + B u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    #[serde(rename = "A")]
    pub a: Mat4,
    #[serde(rename = "B")]
    pub b: [f64; 4],
}

impl LinearModel {
    /// The vendor-supplied Qube Servo 2 model, verbatim. Includes the
    /// anomalous `A[3][2] = 1`.
    pub fn quanser_qube() -> Self {
        Self {
            a: [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 149.3, -0.01004, 0.0],
                [0.0, 261.6, 1.0, -0.0103],
            ],
            b: [0.0, 0.0, 49.73, 49.15],
        }
    }

    /// Checks the kinematic structure: rows 0 and 1 are `[0,0,1,0]`,
    /// `[0,0,0,1]` and the input does not enter them.
    pub fn validate(&self) -> Result<()> {
        if self.a.iter().flatten().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("linear model has non-finite entries".into()));
        }
        if self.a[0] != [0.0, 0.0, 1.0, 0.0] || self.a[1] != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidArgument("rows 0 and 1 of A must be kinematic identities".into()));
        }
        if self.b[0] != 0.0 || self.b[1] != 0.0 {
            return Err(Error::InvalidArgument("B[0] and B[1] must be zero".into()));
        }
        Ok(())
    }
}

/// Result of [`solve_care`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CareSolution<const N: usize> {
    pub p: Mat<N>,
    /// ‖AᵀP + PA − PBR⁻¹BᵀP + Q‖_F
    pub residual: f64,
    pub flow_steps: usize,
    pub newton_iterations: usize,
}

pub fn care_residual<const N: usize>(
    a: &Mat<N>,
    b: &[f64; N],
    q: &Mat<N>,
    r: f64,
    p: &Mat<N>,
) -> f64 {
    linalg::frobenius(&riccati_rhs(a, b, q, r, p))
}

fn riccati_rhs<const N: usize>(a: &Mat<N>, b: &[f64; N], q: &Mat<N>, r: f64, p: &Mat<N>) -> Mat<N> {
    let at_p = linalg::mul(&linalg::transpose(a), p);
    let pb = linalg::mat_vec(p, b);
    let mut out = linalg::add(&linalg::add(&at_p, &linalg::transpose(&at_p)), q);
    for i in 0..N {
        for j in 0..N {
            out[i][j] -= pb[i] * pb[j] / r;
        }
    }
    out
}

fn gain_from<const N: usize>(b: &[f64; N], r: f64, p: &Mat<N>) -> [f64; N] {
    let mut k = linalg::vec_mat(b, p);
    k.iter_mut().for_each(|v| *v /= r);
    k
}

fn closed_loop<const N: usize>(a: &Mat<N>, b: &[f64; N], k: &[f64; N]) -> Mat<N> {
    linalg::sub(a, &linalg::outer(b, k))
}

const FLOW_STEP_BUDGET: usize = 2_000_000;
const NEWTON_BUDGET: usize = 50;

/// Stabilizing solution of the continuous algebraic Riccati equation for a
/// single input (`B` a column, `R` a positive scalar).
pub fn solve_care<const N: usize>(
    a: &Mat<N>,
    b: &[f64; N],
    q: &Mat<N>,
    r: f64,
) -> Result<CareSolution<N>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("R must be positive, got {r}")));
    }
    if a.iter().flatten().chain(b).chain(q.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite entry in A, B or Q".into()));
    }
    if linalg::asymmetry(q) > 1e-12 * (1.0 + linalg::frobenius(q)) {
        return Err(Error::InvalidArgument("Q must be symmetric".into()));
    }

    // Riccati flow dP/dτ = AᵀP + PA − PBR⁻¹BᵀP + Q from P = Q. Its
    // linearization has modes λ_i + λ_j of the current closed loop, so the
    // step is tied to the closed-loop norm to keep RK4 stable.
    let mut p = *q;
    let mut flow_steps = 0;
    let a_norm = linalg::frobenius(a);
    loop {
        let f = riccati_rhs(a, b, q, r, &p);
        let f_norm = linalg::frobenius(&f);
        let k = gain_from(b, r, &p);
        let acl_norm = linalg::frobenius(&closed_loop(a, b, &k));
        let scale = 1.0 + linalg::frobenius(&p) * (a_norm + acl_norm);
        if f_norm < 1e-12 || f_norm < 1e-9 * scale || flow_steps >= FLOW_STEP_BUDGET {
            break;
        }
        let h = 0.25 / (1.0 + 2.0 * acl_norm + a_norm);
        let k1 = f;
        let k2 = riccati_rhs(a, b, q, r, &linalg::add(&p, &linalg::scale(&k1, 0.5 * h)));
        let k3 = riccati_rhs(a, b, q, r, &linalg::add(&p, &linalg::scale(&k2, 0.5 * h)));
        let k4 = riccati_rhs(a, b, q, r, &linalg::add(&p, &linalg::scale(&k3, h)));
        let incr = linalg::add(&linalg::add(&k1, &k4), &linalg::scale(&linalg::add(&k2, &k3), 2.0));
        p = linalg::symmetrize(&linalg::add(&p, &linalg::scale(&incr, h / 6.0)));
        flow_steps += 1;
        if p.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::RiccatiNonConvergence { residual: f64::INFINITY });
        }
    }

    // Newton–Kleinman: with K = R⁻¹BᵀP stabilizing, solve
    // A_kᵀ X + X A_k + Q + KᵀRK = 0 and repeat.
    let mut residual = care_residual(a, b, q, r, &p);
    let mut newton_iterations = 0;
    while newton_iterations < NEWTON_BUDGET {
        let k = gain_from(b, r, &p);
        let acl = closed_loop(a, b, &k);
        if !is_hurwitz(&acl)? {
            break;
        }
        let c = linalg::add(q, &linalg::scale(&linalg::outer(&k, &k), r));
        let Some(next) = linalg::solve_lyapunov(&acl, &c) else {
            break;
        };
        let next_residual = care_residual(a, b, q, r, &next);
        newton_iterations += 1;
        let improved = next_residual < residual;
        if improved {
            p = next;
            residual = next_residual;
        }
        if !improved || residual <= 1e-13 * (1.0 + linalg::frobenius(&p)) {
            break;
        }
    }

    if !(residual < 1e-8) {
        return Err(Error::RiccatiNonConvergence { residual });
    }
    let k = gain_from(b, r, &p);
    if !is_hurwitz(&closed_loop(a, b, &k))? {
        return Err(Error::NotStabilizing);
    }
    Ok(CareSolution {
        p,
        residual,
        flow_steps,
        newton_iterations,
    })
}

/// `K = R⁻¹BᵀP`.
pub fn lqr_gain<const N: usize>(a: &Mat<N>, b: &[f64; N], q: &Mat<N>, r: f64) -> Result<[f64; N]> {
    let sol = solve_care(a, b, q, r)?;
    Ok(gain_from(b, r, &sol.p))
}

/// True iff every eigenvalue has real part below −1e-9.
pub fn is_hurwitz<const N: usize>(m: &Mat<N>) -> Result<bool> {
    Ok(linalg::eigenvalues(m)?.iter().all(|z| z.re < -1e-9))
}

/// Complete LQR design for the four-state pendulum model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqrDesign {
    pub q: Mat4,
    pub r: f64,
    pub p: Mat4,
    pub k: [f64; 4],
    pub residual: f64,
    pub closed_loop_eigenvalues: [Complex64; 4],
}

impl LqrDesign {
    pub fn synthesize(model: &LinearModel, q: &Mat4, r: f64) -> Result<Self> {
        let sol = solve_care(&model.a, &model.b, q, r)?;
        let k = gain_from(&model.b, r, &sol.p);
        let eig = linalg::eigenvalues(&closed_loop(&model.a, &model.b, &k))?;
        let mut closed_loop_eigenvalues = [Complex64::new(0.0, 0.0); 4];
        closed_loop_eigenvalues.copy_from_slice(&eig);
        Ok(Self {
            q: *q,
            r,
            p: sol.p,
            k,
            residual: sol.residual,
            closed_loop_eigenvalues,
        })
    }

    pub fn closed_loop(&self, model: &LinearModel) -> Mat4 {
        closed_loop(&model.a, &model.b, &self.k)
    }

    pub fn is_stabilizing(&self) -> bool {
        self.closed_loop_eigenvalues.iter().all(|z| z.re < -1e-9)
    }
}

/// Weights used for the balancing controller: `Q = diag(12, 5, 1, 1)`, `R = 1`.
pub fn default_weights() -> (Mat4, f64) {
    (linalg::diag([12.0, 5.0, 1.0, 1.0]), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar_integrator() {
        let sol = solve_care(&[[0.0]], &[1.0], &[[1.0]], 1.0).unwrap();
        assert!((sol.p[0][0] - 1.0).abs() < 1e-10);
        assert!((lqr_gain(&[[0.0]], &[1.0], &[[1.0]], 1.0).unwrap()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scalar_stable_plant() {
        let sol = solve_care(&[[-1.0]], &[1.0], &[[1.0]], 1.0).unwrap();
        let expected = 2f64.sqrt() - 1.0;
        assert!((sol.p[0][0] - expected).abs() < 1e-10);
        let k = lqr_gain(&[[-1.0]], &[1.0], &[[1.0]], 1.0).unwrap();
        assert!((k[0] - 0.414214).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(solve_care(&[[0.0]], &[1.0], &[[1.0]], 0.0).is_err());
        assert!(solve_care(&[[0.0, 1.0], [0.0, 0.0]], &[0.0, 1.0], &[[1.0, 2.0], [0.0, 1.0]], 1.0).is_err());
    }

    #[test]
    fn unstabilizable_plant_fails() {
        // Unstable mode not reachable from the input.
        let a = [[1.0, 0.0], [0.0, -1.0]];
        let b = [0.0, 1.0];
        let q = linalg::identity::<2>();
        assert!(solve_care(&a, &b, &q, 1.0).is_err());
    }

    #[test]
    fn quanser_design_certificate() {
        let model = LinearModel::quanser_qube();
        let (q, r) = default_weights();
        let d = LqrDesign::synthesize(&model, &q, r).unwrap();
        assert!(d.residual < 1e-8);
        assert!(linalg::asymmetry(&d.p) < 1e-10);
        assert!(d.is_stabilizing());
        // Column 0 of A is zero, so the θ gain magnitude is √(q₁/r).
        assert!((d.k[0].abs() - 12f64.sqrt()).abs() < 1e-8, "K = {:?}", d.k);
        let eig = linalg::eigenvalues(&d.p).unwrap();
        assert!(eig.iter().all(|z| z.re > -1e-9));
    }

    #[test]
    fn hurwitz_examples() {
        assert!(is_hurwitz(&linalg::diag([-1.0, -2.0, -3.0, -4.0])).unwrap());
        assert!(!is_hurwitz(&linalg::diag([-1.0, -2.0, -3.0, 0.001])).unwrap());
        assert!(!is_hurwitz(&linalg::diag([-1.0, -2.0, -3.0, 0.0])).unwrap());
    }

    #[test]
    fn quanser_model_is_structurally_valid() {
        LinearModel::quanser_qube().validate().unwrap();
        let mut bad = LinearModel::quanser_qube();
        bad.b[0] = 1.0;
        assert!(bad.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn weight_scaling_leaves_gain_unchanged(c in 0.05f64..20.0) {
            let model = LinearModel::quanser_qube();
            let (q, r) = default_weights();
            let base = LqrDesign::synthesize(&model, &q, r).unwrap();
            let scaled = LqrDesign::synthesize(&model, &linalg::scale(&q, c), c * r).unwrap();
            for i in 0..4 {
                prop_assert!((scaled.k[i] - base.k[i]).abs() < 1e-10 * (1.0 + base.k[i].abs()));
                for j in 0..4 {
                    let want = c * base.p[i][j];
                    prop_assert!((scaled.p[i][j] - want).abs() < 1e-9 * (1.0 + want.abs()));
                }
            }
            prop_assert!(scaled.residual < 1e-8);
        }
    }
}
