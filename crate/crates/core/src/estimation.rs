//! Measurement path of the vision-style estimator: angle encoding, noisy
//! angle measurements and velocity recovery by finite differences followed
//! by a single-pole low-pass filter.
//!
//! Noise is drawn from [`rand_chacha::ChaCha8Rng`] seeded with a `u64`, and
//! normal variates come from [`rand_distr::StandardNormal`] (ziggurat), so a
//! given seed reproduces the same sequence bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{wrap_angle, State};

/// `[cos θ, sin θ, cos α, sin α]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleEncoding {
    pub c_theta: f64,
    pub s_theta: f64,
    pub c_alpha: f64,
    pub s_alpha: f64,
}

impl AngleEncoding {
    pub fn to_array(self) -> [f64; 4] {
        [self.c_theta, self.s_theta, self.c_alpha, self.s_alpha]
    }
}

pub fn encode_angles(theta: f64, alpha: f64) -> AngleEncoding {
    let (s_theta, c_theta) = theta.sin_cos();
    let (s_alpha, c_alpha) = alpha.sin_cos();
    AngleEncoding {
        c_theta,
        s_theta,
        c_alpha,
        s_alpha,
    }
}

const MIN_PAIR_NORM: f64 = 1e-6;

fn decode_pair(c: f64, s: f64) -> Result<f64> {
    let norm = c.hypot(s);
    if !(norm > MIN_PAIR_NORM) {
        return Err(Error::DegenerateEncoding { norm });
    }
    // atan2 returns [−π, π]; fold −π onto π.
    Ok(wrap_angle(s.atan2(c)))
}

/// Inverse of [`encode_angles`]; pairs need not be normalized.
pub fn decode_angles(e: &AngleEncoding) -> Result<(f64, f64)> {
    Ok((decode_pair(e.c_theta, e.s_theta)?, decode_pair(e.c_alpha, e.s_alpha)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityFilterState {
    pub prev_theta: f64,
    pub prev_alpha: f64,
    pub v_theta: f64,
    pub v_alpha: f64,
    pub initialized: bool,
}

/// Finite difference of wrapped positions followed by
/// `v ← v + a (raw − v)`. The first call only stores the positions.
pub fn velocity_step(
    f: &VelocityFilterState,
    theta: f64,
    alpha: f64,
    dt: f64,
    a: f64,
) -> (VelocityFilterState, f64, f64) {
    let theta = wrap_angle(theta);
    let alpha = wrap_angle(alpha);
    if !f.initialized {
        let next = VelocityFilterState {
            prev_theta: theta,
            prev_alpha: alpha,
            v_theta: 0.0,
            v_alpha: 0.0,
            initialized: true,
        };
        return (next, 0.0, 0.0);
    }
    let raw_theta = wrap_angle(theta - f.prev_theta) / dt;
    let raw_alpha = wrap_angle(alpha - f.prev_alpha) / dt;
    let v_theta = f.v_theta + a * (raw_theta - f.v_theta);
    let v_alpha = f.v_alpha + a * (raw_alpha - f.v_alpha);
    (
        VelocityFilterState {
            prev_theta: theta,
            prev_alpha: alpha,
            v_theta,
            v_alpha,
            initialized: true,
        },
        v_theta,
        v_alpha,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_deg: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(sigma_deg: f64, seed: u64) -> Result<Self> {
        if !(sigma_deg >= 0.0 && sigma_deg.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma_deg must be >= 0, got {sigma_deg}")));
        }
        Ok(Self { sigma_deg, seed })
    }

    /// Fresh generator for one episode.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Adds independent zero-mean Gaussian noise to both angles. Velocities are
/// left to the filter chain.
pub fn corrupt_measurement<R: Rng + ?Sized>(s: &State, n: &NoiseModel, rng: &mut R) -> (f64, f64) {
    let sigma = n.sigma_deg.to_radians();
    let z_theta: f64 = rng.sample(StandardNormal);
    let z_alpha: f64 = rng.sample(StandardNormal);
    (s.theta + sigma * z_theta, s.alpha + sigma * z_alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};
    use std::f64::consts::PI;

    #[test]
    fn encode_examples() {
        assert_eq!(encode_angles(0.0, 0.0).to_array(), [1.0, 0.0, 1.0, 0.0]);
        let e = encode_angles(PI / 2.0, PI).to_array();
        let want = [0.0, 1.0, -1.0, 0.0];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let a = encode_angles(179f64.to_radians(), 179f64.to_radians()).to_array();
        let b = encode_angles(-179f64.to_radians(), -179f64.to_radians()).to_array();
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 0.035);
        }
    }

    #[test]
    fn decode_examples() {
        let e = AngleEncoding {
            c_theta: 1.0,
            s_theta: 0.0,
            c_alpha: 1.0,
            s_alpha: 0.0,
        };
        assert_eq!(decode_angles(&e).unwrap(), (0.0, 0.0));
        let e = AngleEncoding {
            c_theta: 2.0,
            s_theta: 0.0,
            c_alpha: 0.0,
            s_alpha: -3.0,
        };
        assert_eq!(decode_angles(&e).unwrap(), (0.0, -PI / 2.0));
        let e = AngleEncoding {
            c_theta: 1e-8,
            s_theta: 0.0,
            c_alpha: 1.0,
            s_alpha: 0.0,
        };
        assert!(matches!(decode_angles(&e), Err(Error::DegenerateEncoding { .. })));
        // −π decodes to π.
        let (t, _) = decode_angles(&encode_angles(-PI, 0.0)).unwrap();
        assert_eq!(t, PI);
    }

    #[test]
    fn round_trip_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let theta: f64 = rng.random_range(-20.0..20.0);
            let alpha: f64 = rng.random_range(-20.0..20.0);
            let (t, a) = decode_angles(&encode_angles(theta, alpha)).unwrap();
            let dt = wrap_angle(t - wrap_angle(theta)).abs();
            let da = wrap_angle(a - wrap_angle(alpha)).abs();
            assert!(dt < 1e-12 && da < 1e-12);
        }
    }

    #[test]
    fn filter_examples() {
        let mut f = VelocityFilterState::default();
        for _ in 0..50 {
            let (next, vt, va) = velocity_step(&f, 0.4, -1.0, 0.01, 0.3);
            assert_eq!((vt, va), (0.0, 0.0));
            f = next;
        }
        let (f, v0, _) = velocity_step(&VelocityFilterState::default(), 0.0, 0.0, 0.1, 1.0);
        assert_eq!(v0, 0.0);
        let (_, v1, _) = velocity_step(&f, 0.1, 0.0, 0.1, 1.0);
        assert!((v1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_converges_geometrically() {
        // Raw differences are exactly 2 rad/s after the first sample, so the
        // filter error after n updates is 2·(1 − a)^n; 0.7^99 ≈ 4.6e-16.
        let dt = 1.0 / 120.0;
        let mut f = VelocityFilterState::default();
        let mut v = 0.0;
        for k in 0..=100 {
            let (next, vt, _) = velocity_step(&f, 2.0 * k as f64 * dt, 0.0, dt, 0.3);
            f = next;
            v = vt;
        }
        assert!((v - 2.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn filter_crosses_the_wrap_without_jump() {
        let dt = 1.0 / 120.0;
        let (f, _, _) = velocity_step(&VelocityFilterState::default(), 179f64.to_radians(), 0.0, dt, 1.0);
        let (_, v, _) = velocity_step(&f, -179f64.to_radians(), 0.0, dt, 1.0);
        assert!((v - 2f64.to_radians() / dt).abs() < 1e-9, "{v}");
    }

    #[test]
    fn zero_sigma_is_exact() {
        let n = NoiseModel::new(0.0, 3).unwrap();
        let mut rng = n.rng();
        let s = State::new(0.3, -2.0, 1.0, 1.0);
        assert_eq!(corrupt_measurement(&s, &n, &mut rng), (0.3, -2.0));
        assert!(NoiseModel::new(-1.0, 0).is_err());
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let n = NoiseModel::new(1.0, 11).unwrap();
        let mut rng = n.rng();
        let s = State::new(0.5, 0.2, 0.0, 0.0);
        let count = 100_000;
        let mut sum = 0.0;
        for _ in 0..count {
            sum += corrupt_measurement(&s, &n, &mut rng).1;
        }
        let mean = sum / count as f64;
        let bound = 4.0 * 1f64.to_radians() / (count as f64).sqrt();
        assert!((mean - 0.2).abs() < bound, "mean {mean}");
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let n = NoiseModel::new(2.0, 99).unwrap();
        let s = State::new(0.1, 0.2, 0.0, 0.0);
        let mut a = n.rng();
        let mut b = n.rng();
        for _ in 0..100 {
            let x = corrupt_measurement(&s, &n, &mut a);
            let y = corrupt_measurement(&s, &n, &mut b);
            assert_eq!(x.0.to_bits(), y.0.to_bits());
            assert_eq!(x.1.to_bits(), y.1.to_bits());
        }
    }

    #[test]
    fn finite_difference_noise_matches_variance_propagation() {
        // Var(Δ/dt) = 2σ²f_s² for independent samples: 1° at 120 Hz ≈ 2.962 rad/s.
        let f_s = 120.0;
        let n = NoiseModel::new(1.0, 5).unwrap();
        let mut rng = n.rng();
        let s = State::new(0.2, -0.4, 0.0, 0.0);
        let mut f = VelocityFilterState::default();
        let count = 100_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for k in 0..=count {
            let (th, al) = corrupt_measurement(&s, &n, &mut rng);
            let (next, _, v) = velocity_step(&f, th, al, 1.0 / f_s, 1.0);
            f = next;
            if k > 0 {
                sum += v;
                sum_sq += v * v;
            }
        }
        let mean = sum / count as f64;
        let std = (sum_sq / count as f64 - mean * mean).sqrt();
        let expected = 1f64.to_radians() * 2f64.sqrt() * f_s;
        assert!((std / expected - 1.0).abs() < 0.05, "std {std}, expected {expected}");
    }

    proptest! {
        #[test]
        fn encoding_is_lipschitz(x in -10.0f64..10.0, y in -10.0f64..10.0, eps in -0.5f64..0.5) {
            let a = encode_angles(x, y).to_array();
            let b = encode_angles(x + eps, y + eps).to_array();
            let dist = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            prop_assert!(dist <= 2.0 * eps.abs() + 1e-15);
        }

        #[test]
        fn filter_converges_monotonically(v0 in -50.0f64..50.0, a in 0.01f64..=1.0) {
            let dt = 0.01;
            let mut f = VelocityFilterState::default();
            let mut prev_gap = f64::INFINITY;
            // Positions advance by v0·dt each sample; stay well inside ±π per step.
            for k in 0..200 {
                let (next, vt, _) = velocity_step(&f, v0 * dt * k as f64, 0.0, dt, a);
                f = next;
                if k >= 1 {
                    let gap = (vt - v0).abs();
                    prop_assert!(gap <= prev_gap + 1e-9);
                    prop_assert!(vt.abs() <= v0.abs() + 1e-9);
                    prev_gap = gap;
                }
            }
        }
    }
}
