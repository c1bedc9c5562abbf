//! JSON scenario configuration.
//!
//! Scenarios are data: one config object selects the scenario and carries the
//! physical and numerical parameters. Unknown keys are rejected so typos
//! cannot be silently absorbed. Exactly one of `eta` / `gamma_b` may be
//! given where inertia is needed; the other is derived through the
//! mass-distribution correspondence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billiard::DomainSpec;
use crate::geometry::PlateSpec;
use crate::oracles;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

fn field_err(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    RollTrajectory,
    BilliardOrbit,
    EdgeConvergence,
    OracleCheck,
    FigureSinai,
    FigureDiscCaustics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// scalar spin for 3-dimensional surfaces (𝒮 = s·J at the start point)
    /// and for the billiard (𝒮 = s·(e₁∧e₂))
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_scalar: Option<f64>,
    /// full spin matrix rows; projected to the admissible tangential part
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_matrix: Option<Vec<Vec<f64>>>,
}

/// Incoming edge-crossing data in the plate frame (see the limit module for
/// the frame conventions; `u_perp` must be negative).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncomingSplit {
    pub u_bar: Vec<f64>,
    pub u_perp: f64,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plate: Option<PlateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_collisions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_crossing: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incoming: Option<IncomingSplit>,
    /// number of random incoming states for EdgeConvergence when `incoming`
    /// is not given
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_states: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// η resolved from whichever inertia field is present.
    pub fn resolved_eta(&self) -> Result<f64, ConfigError> {
        match (self.eta, self.gamma_b) {
            (Some(eta), None) => {
                if !(0.0..1.0).contains(&eta) {
                    return Err(field_err("eta", format!("must lie in [0, 1), got {eta}")));
                }
                Ok(eta)
            }
            (None, Some(gb)) => {
                if !(gb >= 0.0) {
                    return Err(field_err("gamma_b", format!("must be >= 0, got {gb}")));
                }
                Ok(oracles::gamma_correspondence(gb).0)
            }
            (None, None) => Err(field_err(
                "eta",
                "exactly one of `eta` / `gamma_b` is required",
            )),
            (Some(_), Some(_)) => Err(field_err(
                "eta",
                "give exactly one of `eta` / `gamma_b`, not both",
            )),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(h) = self.h {
            if !(h > 0.0) {
                return Err(field_err("h", format!("must be > 0, got {h}")));
            }
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0) {
                return Err(field_err("T", format!("must be > 0, got {t}")));
            }
        }
        if let Some(r) = self.r {
            if !(r > 0.0) {
                return Err(field_err("r", format!("must be > 0, got {r}")));
            }
        }
        if let Some(radii) = &self.radii {
            if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
                return Err(field_err("radii", "must be a non-empty list of positive radii"));
            }
        }
        if let Some(plate) = &self.plate {
            plate
                .validate()
                .map_err(|e| field_err("plate", e.to_string()))?;
        }
        match self.scenario {
            ScenarioKind::RollTrajectory => {
                self.require_plate()?;
                self.require("r", self.r.is_some())?;
                self.require("T", self.t_end.is_some())?;
                self.require("h", self.h.is_some())?;
                self.require("initial", self.initial.is_some())?;
                self.resolved_eta()?;
            }
            ScenarioKind::BilliardOrbit => {
                self.require("domain", self.domain.is_some())?;
                self.require("n_collisions", self.n_collisions.is_some())?;
                self.require("initial", self.initial.is_some())?;
                self.resolved_eta()?;
            }
            ScenarioKind::EdgeConvergence => {
                self.require_plate()?;
                self.require("radii", self.radii.is_some())?;
                self.resolved_eta()?;
                if let Some(inc) = &self.incoming {
                    if !(inc.u_perp < 0.0) {
                        return Err(field_err("incoming", "u_perp must be negative (into the edge)"));
                    }
                }
            }
            ScenarioKind::OracleCheck => {}
            ScenarioKind::FigureSinai => {
                if self.eta.is_some() || self.gamma_b.is_some() {
                    return Err(field_err(
                        "eta",
                        "figure_sinai runs the fixed pair eta = 0.05 / 0.62; drop eta and gamma_b",
                    ));
                }
                if let Some(plate) = &self.plate {
                    if !matches!(plate, PlateSpec::SinaiTorus { .. }) {
                        return Err(field_err("plate", "figure_sinai needs a sinai_torus plate"));
                    }
                }
            }
            ScenarioKind::FigureDiscCaustics => {
                if let Some(domain) = &self.domain {
                    if !matches!(domain, DomainSpec::Disc { .. }) {
                        return Err(field_err("domain", "figure_disc_caustics needs a disc domain"));
                    }
                }
            }
        }
        Ok(())
    }

    fn require(&self, field: &'static str, ok: bool) -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(field_err(field, "required for this scenario"))
        }
    }

    fn require_plate(&self) -> Result<(), ConfigError> {
        self.require("plate", self.plate.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"scenario":"oracle_check","bogus_key":1}"#;
        assert!(ScenarioConfig::from_json(text).is_err());
    }

    #[test]
    fn exactly_one_inertia_field() {
        let base = r#"{"scenario":"roll_trajectory",
            "plate":{"family":"disc","radius":1.0},"r":0.05,"T":1.0,"h":0.001,
            "initial":{"x":[0.0,0.0,0.05],"u":[1.0,0.0,0.0],"spin_scalar":0.2}"#;
        let neither = format!("{base}}}");
        assert!(ScenarioConfig::from_json(&neither).is_err());
        let both = format!("{base},\"eta\":0.3,\"gamma_b\":0.5}}");
        assert!(ScenarioConfig::from_json(&both).is_err());
        let one = format!("{base},\"eta\":0.3}}");
        let cfg = ScenarioConfig::from_json(&one).unwrap();
        assert_eq!(cfg.resolved_eta().unwrap(), 0.3);
        let gb = format!("{base},\"gamma_b\":0.6324555320336759}}");
        let cfg = ScenarioConfig::from_json(&gb).unwrap();
        let eta = cfg.resolved_eta().unwrap();
        assert!((eta - 0.3590170359713761).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_numerics() {
        let text = r#"{"scenario":"roll_trajectory",
            "plate":{"family":"disc","radius":1.0},"r":0.05,"T":1.0,"h":-0.001,
            "eta":0.3,
            "initial":{"x":[0.0,0.0,0.05],"u":[1.0,0.0,0.0]}}"#;
        let err = ScenarioConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("`h`"));
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{"scenario":"edge_convergence",
            "plate":{"family":"disc","radius":1.0},
            "radii":[0.1,0.03,0.01,0.003,0.001],
            "eta":0.358752,"seed":7,"n_states":3}"#;
        let cfg = ScenarioConfig::from_json(text).unwrap();
        let echoed = serde_json::to_string(&cfg).unwrap();
        let back = ScenarioConfig::from_json(&echoed).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), echoed);
    }
}
