//! Run configuration: one JSON document, every section optional.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::equilibria::{Branch, GridSpec};
use crate::error::{Error, Result};
use crate::full_system::{FullState, Params};
use crate::numerics::ode::IntegratorConfig;
use crate::potential::PotentialModel;

/// Serializable description of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Harmonic { gamma: f64 },
    Gravitational,
    /// `U'(r) = coefficient * r^exponent`.
    Custom { coefficient: f64, exponent: f64 },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Harmonic { gamma: 1.0 }
    }
}

impl PotentialSpec {
    pub fn build(&self) -> Result<PotentialModel> {
        match *self {
            PotentialSpec::Harmonic { gamma } => PotentialModel::harmonic(gamma),
            PotentialSpec::Gravitational => Ok(PotentialModel::gravitational()),
            PotentialSpec::Custom { coefficient, exponent } => {
                if !coefficient.is_finite() || !exponent.is_finite() {
                    return Err(Error::InvalidArgument(
                        "custom potential needs finite coefficient and exponent".into(),
                    ));
                }
                Ok(PotentialModel::power_law(coefficient, exponent))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    Reduced,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub mode: Mode,
    /// Random constrained start when absent.
    pub initial_state: Option<FullState>,
    pub integrator: IntegratorConfig,
    /// Project back onto the constraints after every accepted step.
    pub project: bool,
    /// Bounds on both particle distances for random starts.
    pub radius_range: [f64; 2],
    pub position_scale: f64,
    pub velocity_scale: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            mode: Mode::Both,
            initial_state: None,
            integrator: IntegratorConfig::default(),
            project: false,
            radius_range: [0.3, 3.0],
            position_scale: 1.0,
            velocity_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    pub points: usize,
    /// Test hook: perturb one structure-matrix entry so the suite must fail.
    pub corrupt_structure_matrix: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            points: 1000,
            corrupt_structure_matrix: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriaConfig {
    pub branch: Branch,
    pub grid: GridSpec,
    /// Worker threads for the scan; sequential when absent.
    pub threads: Option<usize>,
}

impl Default for EquilibriaConfig {
    fn default() -> Self {
        EquilibriaConfig {
            branch: Branch::RadialS5Zero,
            grid: GridSpec {
                start: 0.0,
                end: 10.0,
                points: 100,
                include_start: false,
            },
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarmonicConfig {
    pub sigma: f64,
    /// Taken from a harmonic potential when absent.
    pub gamma: Option<f64>,
}

impl Default for HarmonicConfig {
    fn default() -> Self {
        HarmonicConfig {
            sigma: 1.0,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: Params,
    pub potential: PotentialSpec,
    pub seed: u64,
    pub format: Format,
    pub simulate: SimulateConfig,
    pub check: CheckConfig,
    pub equilibria: EquilibriaConfig,
    pub harmonic: HarmonicConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Params::new(1.0, 1.0).expect("unit masses are valid"),
            potential: PotentialSpec::default(),
            seed: 0,
            format: Format::Csv,
            simulate: SimulateConfig::default(),
            check: CheckConfig::default(),
            equilibria: EquilibriaConfig::default(),
            harmonic: HarmonicConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        self.potential.build()?;
        self.simulate.integrator.validate()?;
        let [lo, hi] = self.simulate.radius_range;
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "radius_range must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        if !(self.simulate.position_scale >= 0.0 && self.simulate.velocity_scale >= 0.0) {
            return Err(Error::InvalidArgument("sampling scales must be non-negative".into()));
        }
        if self.check.points == 0 {
            return Err(Error::InvalidArgument("check.points must be positive".into()));
        }
        self.equilibria.grid.values()?;
        if self.equilibria.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be positive".into()));
        }
        if let Some(g) = self.harmonic.gamma {
            if !(g > 0.0) {
                return Err(Error::InvalidArgument(format!("gamma must be positive, got {g}")));
            }
        }
        if !self.harmonic.sigma.is_finite() {
            return Err(Error::InvalidArgument("sigma must be finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn round_trip_through_json() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"parms": {"m1": 1, "m2": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"simulate": {"mdoe": "full"}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"potential": {"kind": "harmonic", "gamma": 1, "x": 2}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"params": {"m1": -1, "m2": 1}}"#).is_err());
    }

    #[test]
    fn potential_specs() {
        let c = RunConfig::from_json(
            r#"{"potential": {"kind": "custom", "coefficient": 2.0, "exponent": -1.5},
                "equilibria": {"branch": "equal_distance", "grid": {"start": 0.1, "end": 1, "points": 4}}}"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.equilibria.branch, Branch::EqualDistanceS5Nonzero);
        let bad = RunConfig::from_json(r#"{"potential": {"kind": "harmonic", "gamma": -1}}"#).unwrap();
        assert!(bad.validate().is_err());
    }
}
