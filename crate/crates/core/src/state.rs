use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Maps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Furuta pendulum state. `alpha = 0` is the upright pendulum, `alpha = π`
/// hanging. Angles are carried unwrapped through the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub theta: f64,
    pub alpha: f64,
    pub theta_dot: f64,
    pub alpha_dot: f64,
}

impl State {
    pub const fn new(theta: f64, alpha: f64, theta_dot: f64, alpha_dot: f64) -> Self {
        Self {
            theta,
            alpha,
            theta_dot,
            alpha_dot,
        }
    }

    pub const fn upright() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub const fn hanging() -> Self {
        Self::new(0.0, PI, 0.0, 0.0)
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta, self.alpha, self.theta_dot, self.alpha_dot]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Both angles mapped into (−π, π]; velocities untouched.
    pub fn wrapped(&self) -> Self {
        Self::new(
            wrap_angle(self.theta),
            wrap_angle(self.alpha),
            self.theta_dot,
            self.alpha_dot,
        )
    }
}

/// Time derivative of a [`State`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub d_theta: f64,
    pub d_alpha: f64,
    pub d_theta_dot: f64,
    pub d_alpha_dot: f64,
}

impl StateDerivative {
    pub fn to_array(self) -> [f64; 4] {
        [self.d_theta, self.d_alpha, self.d_theta_dot, self.d_alpha_dot]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_boundaries() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn wrap_lands_in_half_open_interval(x in -100.0f64..100.0) {
            let w = wrap_angle(x);
            prop_assert!(w > -PI && w <= PI);
            let k = ((x - w) / (2.0 * PI)).round();
            prop_assert!((x - w - k * 2.0 * PI).abs() < 1e-12);
        }
    }
}
