use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the nonlinear Furuta model (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    /// Pendulum mass.
    pub m_p: f64,
    /// Pivot to pendulum center of mass.
    pub l: f64,
    /// Arm length (motor axis to pendulum pivot).
    #[serde(rename = "L_a")]
    pub l_a: f64,
    /// Arm inertia about the motor axis.
    #[serde(rename = "J_a")]
    pub j_a: f64,
    /// Pendulum inertia about its pivot.
    #[serde(rename = "J_p")]
    pub j_p: f64,
    pub b_a: f64,
    pub b_p: f64,
    /// Lumped voltage to torque gain.
    pub k_u: f64,
    pub g: f64,
}

/// The bundled calibrated parameter file.
pub const DEFAULT_PARAMS_JSON: &str = include_str!("../data/default-params.json");

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_p", self.m_p),
            ("l", self.l),
            ("L_a", self.l_a),
            ("J_a", self.j_a),
            ("J_p", self.j_p),
            ("k_u", self.k_u),
            ("g", self.g),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("b_a", self.b_a), ("b_p", self.b_p)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Calibrated defaults shipped with the crate.
    pub fn calibrated_default() -> Self {
        ParamsFile::from_json(DEFAULT_PARAMS_JSON)
            .expect("bundled default-params.json is valid")
            .params
    }

    pub fn undamped(mut self) -> Self {
        self.b_a = 0.0;
        self.b_p = 0.0;
        self
    }
}

/// On-disk parameter document: the parameter fields flattened at top level
/// plus a provenance note and, for calibrated files, per-entry errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    #[serde(flatten)]
    pub params: PendulumParams,
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_errors: Option<std::collections::BTreeMap<String, f64>>,
}

impl ParamsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParamsFile = serde_json::from_str(text)?;
        file.params.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read params file {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("params serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_defaults_load() {
        let p = PendulumParams::calibrated_default();
        p.validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_mass() {
        let mut p = PendulumParams::calibrated_default();
        p.m_p = 0.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        p.m_p = 0.024;
        p.b_a = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_keys_match_field_names() {
        let file = ParamsFile {
            params: PendulumParams::calibrated_default(),
            provenance: "test".into(),
            relative_errors: None,
        };
        let v: serde_json::Value = serde_json::from_str(&file.to_json()).unwrap();
        for key in ["m_p", "l", "L_a", "J_a", "J_p", "b_a", "b_p", "k_u", "g", "provenance"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(ParamsFile::from_json(&file.to_json()).unwrap(), file);
    }
}
