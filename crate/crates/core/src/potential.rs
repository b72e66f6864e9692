//! Central force laws.
//!
//! Every evaluator takes the *squared* distance from the centre. The
//! potential energy of a particle of mass `m` at position `x` is
//! `m * U(<x, x>)`, so `U'` and `U''` are derivatives with respect to the
//! squared radius, not the radius.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A squared distance `<x, x>` from the force centre.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SquaredRadius(pub f64);

impl SquaredRadius {
    /// Squared norm of a planar vector.
    pub fn of(x: [f64; 2]) -> Self {
        SquaredRadius(x[0] * x[0] + x[1] * x[1])
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for SquaredRadius {
    fn from(r: f64) -> Self {
        SquaredRadius(r)
    }
}

/// Declared monotonicity of `U'`. Needed by the equal-distance equilibrium
/// branch, which is only characterized for strictly monotone `U'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    StrictlyIncreasing,
    StrictlyDecreasing,
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied force law.
#[derive(Clone)]
pub struct CustomPotential {
    pub name: String,
    pub uprime: ScalarFn,
    pub udoubleprime: ScalarFn,
    pub energy: Option<ScalarFn>,
    pub domain_min: f64,
    /// Whether `domain_min` itself is admissible.
    pub domain_closed: bool,
    pub monotonicity: Option<Monotonicity>,
}

#[derive(Clone)]
pub enum PotentialKind {
    /// `U'(r) = gamma`, `U(r) = gamma r`.
    Harmonic { gamma: f64 },
    /// `U'(r) = 1/r`, `U(r) = ln r`.
    Gravitational2D,
    Custom(CustomPotential),
}

#[derive(Clone)]
pub struct PotentialModel {
    kind: PotentialKind,
}

impl fmt::Debug for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PotentialKind::Harmonic { gamma } => write!(f, "Harmonic(gamma={gamma})"),
            PotentialKind::Gravitational2D => write!(f, "Gravitational2D"),
            PotentialKind::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl PotentialModel {
    pub fn harmonic(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "harmonic gamma must be positive, got {gamma}"
            )));
        }
        Ok(PotentialModel {
            kind: PotentialKind::Harmonic { gamma },
        })
    }

    pub fn gravitational() -> Self {
        PotentialModel {
            kind: PotentialKind::Gravitational2D,
        }
    }

    pub fn custom(custom: CustomPotential) -> Self {
        PotentialModel {
            kind: PotentialKind::Custom(custom),
        }
    }

    /// Power law `U'(r) = coefficient * r^exponent` on `r > 0`
    /// (`r >= 0` when the exponent is a non-negative integer).
    pub fn power_law(coefficient: f64, exponent: f64) -> Self {
        let closed = exponent >= 0.0 && exponent.fract() == 0.0;
        let energy: ScalarFn = if (exponent + 1.0).abs() < f64::EPSILON {
            Arc::new(move |r: f64| coefficient * r.ln())
        } else {
            Arc::new(move |r: f64| coefficient * r.powf(exponent + 1.0) / (exponent + 1.0))
        };
        let monotonicity = if coefficient == 0.0 || exponent == 0.0 {
            None
        } else if coefficient * exponent > 0.0 {
            Some(Monotonicity::StrictlyIncreasing)
        } else {
            Some(Monotonicity::StrictlyDecreasing)
        };
        PotentialModel::custom(CustomPotential {
            name: format!("power_law({coefficient}, {exponent})"),
            uprime: Arc::new(move |r: f64| coefficient * r.powf(exponent)),
            udoubleprime: Arc::new(move |r: f64| {
                if exponent == 0.0 {
                    0.0
                } else {
                    coefficient * exponent * r.powf(exponent - 1.0)
                }
            }),
            energy: Some(energy),
            domain_min: 0.0,
            domain_closed: closed,
            monotonicity,
        })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// The harmonic constant, if this is the harmonic law.
    pub fn gamma(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Harmonic { gamma } => Some(gamma),
            _ => None,
        }
    }

    /// Smallest admissible squared radius.
    pub fn domain_min(&self) -> f64 {
        match &self.kind {
            PotentialKind::Harmonic { .. } => 0.0,
            PotentialKind::Gravitational2D => 0.0,
            PotentialKind::Custom(c) => c.domain_min,
        }
    }

    fn domain_closed(&self) -> bool {
        match &self.kind {
            PotentialKind::Harmonic { .. } => true,
            PotentialKind::Gravitational2D => false,
            PotentialKind::Custom(c) => c.domain_closed,
        }
    }

    pub fn in_domain(&self, r: SquaredRadius) -> bool {
        let r = r.0;
        if !r.is_finite() {
            return false;
        }
        if self.domain_closed() {
            r >= self.domain_min()
        } else {
            r > self.domain_min()
        }
    }

    fn check(&self, r: SquaredRadius) -> Result<f64> {
        if self.in_domain(r) {
            Ok(r.0)
        } else {
            let op = if self.domain_closed() { ">=" } else { ">" };
            Err(Error::Domain {
                r: r.0,
                bound: format!("{op} {}", self.domain_min()),
            })
        }
    }

    pub fn monotonicity(&self) -> Option<Monotonicity> {
        match &self.kind {
            PotentialKind::Harmonic { .. } => None,
            PotentialKind::Gravitational2D => Some(Monotonicity::StrictlyDecreasing),
            PotentialKind::Custom(c) => c.monotonicity,
        }
    }

    pub fn uprime(&self, r: SquaredRadius) -> Result<f64> {
        let r = self.check(r)?;
        Ok(match &self.kind {
            PotentialKind::Harmonic { gamma } => *gamma,
            PotentialKind::Gravitational2D => 1.0 / r,
            PotentialKind::Custom(c) => (c.uprime)(r),
        })
    }

    pub fn udoubleprime(&self, r: SquaredRadius) -> Result<f64> {
        let r = self.check(r)?;
        Ok(match &self.kind {
            PotentialKind::Harmonic { .. } => 0.0,
            PotentialKind::Gravitational2D => -1.0 / (r * r),
            PotentialKind::Custom(c) => (c.udoubleprime)(r),
        })
    }

    /// `U` itself. The additive constant is zero for the built-in laws.
    pub fn energy(&self, r: SquaredRadius) -> Result<f64> {
        let r = self.check(r)?;
        match &self.kind {
            PotentialKind::Harmonic { gamma } => Ok(gamma * r),
            PotentialKind::Gravitational2D => Ok(r.ln()),
            PotentialKind::Custom(c) => c
                .energy
                .as_ref()
                .map(|u| u(r))
                .ok_or(Error::MissingPotentialEnergy),
        }
    }

    pub fn has_energy(&self) -> bool {
        match &self.kind {
            PotentialKind::Custom(c) => c.energy.is_some(),
            _ => true,
        }
    }
}

/// `U'` at a squared radius.
pub fn eval_uprime(p: &PotentialModel, r: SquaredRadius) -> Result<f64> {
    p.uprime(r)
}

/// `U''` at a squared radius.
pub fn eval_udoubleprime(p: &PotentialModel, r: SquaredRadius) -> Result<f64> {
    p.udoubleprime(r)
}
