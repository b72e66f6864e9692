//! Relative equilibria of the reduced system and their linear stability.
//!
//! Three families are covered:
//! * radial (`s5 = 0`), parameterized by `s4`;
//! * equal distance (`s4 = -1/2`, `s5 != 0`) for strictly monotone `U'`,
//!   parameterized by `s5`;
//! * the equal-mass family `s4 = -1/2`, `s5 = 0` with `s3` arbitrary.
//!
//! At every equilibrium the characteristic polynomial of the Jacobian has
//! the form `t (t^4 + C1 t^2 + C2)`; stability is read off the roots of
//! `tau^2 + C1 tau + C2`.

use nalgebra::{DMatrix, DVector, Matrix5};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full_system::Params;
use crate::numerics::linalg::{characteristic_polynomial, eigenvalues, quadratic_roots};
use crate::numerics::newton::{newton_polish, NewtonOptions};
use crate::potential::{PotentialKind, PotentialModel, SquaredRadius};
use crate::reduced::{reduced_rhs, ReducedState};

/// Relative tolerance for deciding `m1 = m2`.
pub const EQUAL_MASS_TOLERANCE: f64 = 1e-12;
/// Half-width of the neighbourhoods excluded around poles of the
/// gravitational closed forms.
pub const POLE_EXCLUSION: f64 = 1e-6;
/// Largest Eq. residual accepted for an emitted record.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
const ROOT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(alias = "radial", alias = "A")]
    RadialS5Zero,
    #[serde(alias = "equal_distance", alias = "B")]
    EqualDistanceS5Nonzero,
    #[serde(alias = "equal_mass")]
    EqualMassSpecial,
}

impl Branch {
    /// Name of the scanned parameter.
    pub fn parameter(self) -> &'static str {
        match self {
            Branch::RadialS5Zero => "s4",
            Branch::EqualDistanceS5Nonzero => "s5",
            Branch::EqualMassSpecial => "s3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    LinearlyStable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub branch: Branch,
    pub s: ReducedState,
    pub s3_sign: i8,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    /// `C1^2 - 4 C2`.
    #[serde(rename = "D")]
    pub discriminant: f64,
    pub eigenvalues: Vec<Complex64>,
    pub verdict: Verdict,
    /// Max-norm of the reduced vector field at `s`.
    pub residual: f64,
}

/// Interval of the real line; `None` ends are infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: Option<f64>, hi: Option<f64>) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo: Some(lo),
            hi: Some(hi),
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = match self.lo {
            None => true,
            Some(a) if self.lo_closed => x >= a,
            Some(a) => x > a,
        };
        let below = match self.hi {
            None => true,
            Some(b) if self.hi_closed => x <= b,
            Some(b) => x < b,
        };
        above && below
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        let lo = self.lo.map_or("-inf".to_string(), |v| v.to_string());
        let hi = self.hi.map_or("inf".to_string(), |v| v.to_string());
        write!(f, "{l}{lo}, {hi}{r}")
    }
}

/// Analytic Jacobian of the reduced vector field, rows `f3..f7`, columns
/// `s3..s7`.
pub fn jacobian_reduced(s: &ReducedState, p: &Params, pot: &PotentialModel) -> Result<Matrix5<f64>> {
    let (r1, r2) = (s.r1(), s.r2());
    let a1 = pot.uprime(r1)?;
    let a2 = pot.uprime(r2)?;
    let b1 = pot.udoubleprime(r1)?;
    let b2 = pot.udoubleprime(r2)?;
    let (mu1, mu2) = (p.mu1(), p.mu2());
    let ReducedState { s3, s4, s5, s6, s7 } = *s;
    let q = 1.0 + s4;

    let mut j = Matrix5::zeros();
    j[(0, 1)] = -2.0 * s5 * (2.0 * b1 * q - 2.0 * b2 * s4);
    j[(0, 2)] = -2.0 * (a1 - a2) - 4.0 * s5 * s5 * (b1 - b2);

    j[(1, 0)] = s5;
    j[(1, 2)] = s3;
    j[(1, 3)] = 1.0;

    j[(2, 0)] = -s4;
    j[(2, 1)] = -s3;
    j[(2, 4)] = 1.0;

    j[(3, 0)] = 2.0 * mu1 * s3 + s7;
    j[(3, 1)] = -2.0 * mu1 * (2.0 * b1 * q * q + a1) - 2.0 * mu2 * (2.0 * b2 * s4 * s4 + a2);
    j[(3, 2)] = -4.0 * s5 * (mu1 * b1 * q + mu2 * b2 * s4);
    j[(3, 4)] = s3;

    j[(4, 0)] = -s6;
    j[(4, 1)] = -4.0 * b2 * s4 * s5;
    j[(4, 2)] = -2.0 * a2 - 4.0 * b2 * s5 * s5;
    j[(4, 3)] = -s3;
    Ok(j)
}

/// Stability from the coefficients of `tau^2 + C1 tau + C2`.
///
/// Roots are compared with zero at `1e-9 * max(1, |C1|, sqrt|C2|)`.
pub fn classify_stability(c1: f64, c2: f64) -> Verdict {
    let q = quadratic_roots(c1, c2);
    let tol = ROOT_TOLERANCE * 1f64.max(c1.abs()).max(c2.abs().sqrt());
    if !q.is_real() {
        // complex tau gives eigenvalues +-sqrt(tau) off the imaginary axis
        return Verdict::Unstable;
    }
    let (hi, lo) = (q.roots[0].re, q.roots[1].re);
    if hi > tol {
        Verdict::Unstable
    } else if hi < -tol && lo < -tol {
        Verdict::LinearlyStable
    } else {
        Verdict::Marginal
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `(C1, C2)` read off the characteristic polynomial of the Jacobian.
pub fn chi_hat_from_jacobian(jac: &Matrix5<f64>) -> (f64, f64) {
    let cp = characteristic_polynomial(jac);
    (cp[2], cp[4])
}

/// Assemble a record at `s`. `chi` overrides the characteristic-polynomial
/// coefficients with closed forms when they are known.
fn make_record(
    branch: Branch,
    s: ReducedState,
    p: &Params,
    pot: &PotentialModel,
    chi: Option<(f64, f64)>,
) -> Result<EquilibriumRecord> {
    let jac = jacobian_reduced(&s, p, pot)?;
    let (c1, c2) = chi.unwrap_or_else(|| chi_hat_from_jacobian(&jac));
    let residual = sup_norm(&reduced_rhs(&s, p, pot)?);
    Ok(EquilibriumRecord {
        branch,
        s,
        s3_sign: if s.s3 < 0.0 { -1 } else { 1 },
        c1,
        c2,
        discriminant: c1 * c1 - 4.0 * c2,
        eigenvalues: eigenvalues(&jac)?,
        verdict: classify_stability(c1, c2),
        residual,
    })
}

/// `+-sqrt(x)` with both signs, a single zero, or nothing for negative `x`.
/// `scale` sets the size below which `x` counts as zero.
fn signed_roots(x: f64, scale: f64) -> Vec<f64> {
    let eps = 1e-14 * scale.max(1.0);
    if x < -eps {
        vec![]
    } else if x <= eps {
        vec![0.0]
    } else {
        let r = x.sqrt();
        vec![r, -r]
    }
}

/// `s3^2` on the radial branch.
pub fn radial_s3_squared(s4: f64, p: &Params, pot: &PotentialModel) -> Result<f64> {
    let (m1, m2) = (p.m1(), p.m2());
    let den = m1 + p.total() * s4;
    if den.abs() <= 1e-12 * p.total() {
        return Err(Error::SingularDenominator(den));
    }
    let a1 = pot.uprime(SquaredRadius((1.0 + s4) * (1.0 + s4)))?;
    let a2 = pot.uprime(SquaredRadius(s4 * s4))?;
    Ok((2.0 * m1 * a1 * (1.0 + s4) + 2.0 * m2 * a2 * s4) / den)
}

/// Radial equilibria (`s5 = 0`) at a given `s4`.
pub fn equilibria_radial(s4: f64, p: &Params, pot: &PotentialModel) -> Result<Vec<EquilibriumRecord>> {
    let s3sq = radial_s3_squared(s4, p, pot)?;
    signed_roots(s3sq, s3sq.abs().max(1.0))
        .into_iter()
        .map(|s3| {
            let s = ReducedState::new(s3, s4, 0.0, 0.0, s3 * s4);
            make_record(Branch::RadialS5Zero, s, p, pot, None)
        })
        .collect()
}

/// Set of `s4` admitting radial equilibria under the gravitational law.
pub fn existence_intervals_gravitational(p: &Params) -> Vec<Interval> {
    let (m1, m2, m) = (p.m1(), p.m2(), p.total());
    let left = Interval::open(None, Some(-1.0));
    let right = Interval::open(Some(0.0), None);
    if p.equal_masses(EQUAL_MASS_TOLERANCE) {
        return vec![left, right];
    }
    let middle = if m1 > m2 {
        Interval {
            lo: Some(-m1 / m),
            hi: Some(-m2 / m),
            lo_closed: false,
            hi_closed: true,
        }
    } else {
        Interval {
            lo: Some(-m2 / m),
            hi: Some(-m1 / m),
            lo_closed: true,
            hi_closed: false,
        }
    };
    vec![left, middle, right]
}

/// Closed form of `s3^2` on the gravitational radial branch.
pub fn gravitational_radial_s3_squared(s4: f64, p: &Params) -> f64 {
    let (m1, m2, m) = (p.m1(), p.m2(), p.total());
    2.0 * (s4 * m + m2) / ((1.0 + s4) * s4 * (s4 * m + m1))
}

/// Coefficients `[a2, a1, a0]` of `D1(s4)` (highest first).
pub fn gravitational_d1_coefficients(p: &Params) -> [f64; 3] {
    let (m1, m2) = (p.m1(), p.m2());
    [
        9.0 * m1 * m1 + 14.0 * m1 * m2 + 9.0 * m2 * m2,
        6.0 * m1 * m1 + 14.0 * m1 * m2 + 12.0 * m2 * m2,
        m1 * m1 + 4.0 * m1 * m2 + 4.0 * m2 * m2,
    ]
}

/// `(C1, C2, D)` on the gravitational radial branch in closed form.
pub fn gravitational_radial_chi(s4: f64, p: &Params) -> (f64, f64, f64) {
    let (m1, m2, m) = (p.m1(), p.m2(), p.total());
    let x = s4;
    let n1 = 8.0 * m * m * x.powi(3)
        + (14.0 * m1 * m1 + 24.0 * m1 * m2 + 10.0 * m2 * m2) * x * x
        + (8.0 * m1 * m1 + 8.0 * m1 * m2 + 4.0 * m2 * m2) * x
        + 2.0 * m1 * m1;
    let (m1_2, m2_2, m1_3, m2_3) = (m1 * m1, m2 * m2, m1.powi(3), m2.powi(3));
    let n2 = 16.0 * m.powi(3) * x.powi(6)
        + (56.0 * m1_3 + 152.0 * m1_2 * m2 + 136.0 * m1 * m2_2 + 40.0 * m2_3) * x.powi(5)
        + (72.0 * m1_3 + 160.0 * m1_2 * m2 + 120.0 * m1 * m2_2 + 32.0 * m2_3) * x.powi(4)
        + (40.0 * m1_3 + 56.0 * m1_2 * m2 + 24.0 * m1 * m2_2 + 8.0 * m2_3) * x.powi(3)
        + (8.0 * m1_3 - 12.0 * m1_2 * m2 - 20.0 * m1 * m2_2) * x * x
        + (-16.0 * m1_2 * m2 - 8.0 * m1 * m2_2) * x
        - 4.0 * m1_2 * m2;
    let [d2, d1, d0] = gravitational_d1_coefficients(p);
    let dd1 = d2 * x * x + d1 * x + d0;
    let lin = x * m + m1;
    let q = 1.0 + x;
    let c1 = n1 / (x * x * m * q * q * lin);
    let c2 = n2 / (x.powi(4) * q.powi(4) * m * lin * lin);
    let d = 4.0 * dd1 / (x.powi(4) * q.powi(4) * m * m);
    (c1, c2, d)
}

fn require_monotone(pot: &PotentialModel) -> Result<()> {
    if pot.monotonicity().is_none() {
        return Err(Error::NotApplicable(format!(
            "{pot:?}: U' is not declared strictly monotone, so s4 = -1/2 is not forced"
        )));
    }
    Ok(())
}

/// `(C1, C2, D)` at equal-distance equilibria.
pub fn chi_hat_equal_distance(s5: f64, pot: &PotentialModel) -> Result<(f64, f64, f64)> {
    let r = SquaredRadius(0.25 + s5 * s5);
    let a = pot.uprime(r)?;
    let b = pot.udoubleprime(r)?;
    let s5sq = s5 * s5;
    let c1 = b * (8.0 * s5sq + 1.0) + 8.0 * a;
    let c2 = b * b * (16.0 * s5sq * s5sq + 4.0 * s5sq) + 32.0 * b * a * s5sq;
    let d = (b + 8.0 * a).powi(2);
    Ok((c1, c2, d))
}

/// Equilibria with `s5 != 0`; they all sit at `s4 = -1/2`.
pub fn equilibria_equal_distance(
    s5: f64,
    p: &Params,
    pot: &PotentialModel,
) -> Result<Vec<EquilibriumRecord>> {
    if s5 == 0.0 {
        return Err(Error::InvalidArgument("equal-distance branch needs s5 != 0".into()));
    }
    require_monotone(pot)?;
    let a = pot.uprime(SquaredRadius(0.25 + s5 * s5))?;
    let (c1, c2, _) = chi_hat_equal_distance(s5, pot)?;
    signed_roots(2.0 * a, a.abs())
        .into_iter()
        .map(|s3| {
            let s = ReducedState::new(s3, -0.5, s5, -s3 * s5, -0.5 * s3);
            make_record(Branch::EqualDistanceS5Nonzero, s, p, pot, Some((c1, c2)))
        })
        .collect()
}

/// `(C1, C2, D)` on the equal-mass family.
pub fn chi_hat_equal_mass(s3: f64, pot: &PotentialModel) -> Result<(f64, f64, f64)> {
    let r = SquaredRadius(0.25);
    let a = pot.uprime(r)?;
    let b = pot.udoubleprime(r)?;
    let s3sq = s3 * s3;
    let k = b + 4.0 * a;
    let c1 = 2.0 * s3sq + k;
    let c2 = s3sq * s3sq - s3sq * k + 2.0 * b * a + 4.0 * a * a;
    let d = 8.0 * s3sq * k + b * b;
    Ok((c1, c2, d))
}

/// Equal-mass equilibrium `(s3, -1/2, 0, 0, -s3/2)`.
pub fn equilibria_equal_mass(s3: f64, p: &Params, pot: &PotentialModel) -> Result<EquilibriumRecord> {
    if !p.equal_masses(EQUAL_MASS_TOLERANCE) {
        return Err(Error::NotApplicable(format!(
            "equal-mass family needs m1 = m2 (got {} and {})",
            p.m1(),
            p.m2()
        )));
    }
    let (c1, c2, _) = chi_hat_equal_mass(s3, pot)?;
    let s = ReducedState::new(s3, -0.5, 0.0, 0.0, -0.5 * s3);
    make_record(Branch::EqualMassSpecial, s, p, pot, Some((c1, c2)))
}

/// Coordinates (indices into `s3..s7`) refined by Newton on each branch.
fn free_coordinates(branch: Branch) -> &'static [usize] {
    match branch {
        Branch::RadialS5Zero => &[0, 3, 4],
        Branch::EqualDistanceS5Nonzero => &[0, 1, 3, 4],
        Branch::EqualMassSpecial => &[1, 2, 3, 4],
    }
}

/// Gauss-Newton on the reduced field over the branch's free coordinates.
pub fn polish(
    branch: Branch,
    s: &ReducedState,
    p: &Params,
    pot: &PotentialModel,
) -> Result<ReducedState> {
    let free = free_coordinates(branch);
    let base = s.to_array();
    let assemble = |x: &DVector<f64>| {
        let mut a = base;
        for (k, &i) in free.iter().enumerate() {
            a[i] = x[k];
        }
        ReducedState::from_array(&a)
    };
    let x0 = DVector::from_iterator(free.len(), free.iter().map(|&i| base[i]));
    let opts = NewtonOptions {
        residual_tol: 1e-13,
        ..NewtonOptions::default()
    };
    let out = newton_polish(
        |x| Ok(DVector::from_row_slice(&reduced_rhs(&assemble(x), p, pot)?)),
        |x| {
            let j = jacobian_reduced(&assemble(x), p, pot)?;
            Ok(DMatrix::from_fn(5, free.len(), |r, c| j[(r, free[c])]))
        },
        x0,
        &opts,
    )?;
    Ok(assemble(&out.x))
}

/// Equally spaced grid. With `include_start = false` the first point is
/// dropped, giving `(start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    #[serde(default)]
    pub include_start: bool,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::InvalidArgument(format!("bad grid {self:?}")));
        }
        let n = self.points;
        let h = self.end - self.start;
        Ok(if self.include_start {
            if n == 1 {
                vec![self.start]
            } else {
                (0..n).map(|k| self.start + h * k as f64 / (n - 1) as f64).collect()
            }
        } else {
            (1..=n).map(|k| self.start + h * k as f64 / n as f64).collect()
        })
    }
}

/// A grid point that produced no record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanDiagnostic {
    pub index: usize,
    pub parameter: f64,
    pub kind: String,
    pub message: String,
}

/// A sign change of `C2` between consecutive admissible grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignChange {
    pub left: f64,
    pub right: f64,
    pub from: f64,
    pub to: f64,
    pub verdict_from: Verdict,
    pub verdict_to: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchScan {
    pub branch: Branch,
    pub parameter: String,
    pub parameter_grid: Vec<f64>,
    pub admissible_intervals: Vec<Interval>,
    pub records: Vec<EquilibriumRecord>,
    pub diagnostics: Vec<ScanDiagnostic>,
    pub sign_changes: Vec<SignChange>,
}

enum PointResult {
    Records(Vec<EquilibriumRecord>),
    Skipped { kind: String, message: String },
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain { .. } => "domain",
        Error::SingularDenominator(_) => "singular_denominator",
        Error::NotApplicable(_) => "not_applicable",
        Error::ConvergenceFailure(_) => "convergence_failure",
        Error::InvalidArgument(_) => "invalid_argument",
        _ => "error",
    }
}

fn skipped(e: Error) -> PointResult {
    PointResult::Skipped {
        kind: error_kind(&e).into(),
        message: e.to_string(),
    }
}

fn gravitational_poles(p: &Params) -> [f64; 4] {
    [0.0, -1.0, -p.mu1(), -p.mu2()]
}

fn scan_point(branch: Branch, x: f64, p: &Params, pot: &PotentialModel) -> PointResult {
    let gravitational = matches!(pot.kind(), PotentialKind::Gravitational2D);
    if branch == Branch::RadialS5Zero {
        if (x + p.mu1()).abs() <= POLE_EXCLUSION && p.equal_masses(EQUAL_MASS_TOLERANCE) {
            return PointResult::Skipped {
                kind: "singular_denominator".into(),
                message: format!(
                    "{}; m1 = m2, rerouted: s4 = -1/2 carries the equal-mass family \
                     (s3 arbitrary), scan branch EqualMassSpecial over s3",
                    Error::SingularDenominator(p.m1() + p.total() * x)
                ),
            };
        }
        if gravitational {
            if let Some(pole) = gravitational_poles(p)
                .into_iter()
                .find(|c| (x - c).abs() <= POLE_EXCLUSION)
            {
                let err = if (pole + p.mu1()).abs() < f64::EPSILON {
                    Error::SingularDenominator(p.m1() + p.total() * x)
                } else {
                    Error::Domain {
                        r: x * x,
                        bound: format!("s4 at least {POLE_EXCLUSION:e} away from pole {pole}"),
                    }
                };
                return skipped(err);
            }
        }
    }
    let raw = match branch {
        Branch::RadialS5Zero => equilibria_radial(x, p, pot),
        Branch::EqualDistanceS5Nonzero => equilibria_equal_distance(x, p, pot),
        Branch::EqualMassSpecial => equilibria_equal_mass(x, p, pot).map(|r| vec![r]),
    };
    let raw = match raw {
        Ok(r) => r,
        Err(e) => return skipped(e),
    };
    let mut out = Vec::with_capacity(raw.len());
    for rec in raw {
        let rec = if rec.residual <= 1e-13 {
            rec
        } else {
            let refined = polish(branch, &rec.s, p, pot).and_then(|s| {
                let chi = match branch {
                    Branch::RadialS5Zero => None,
                    _ => Some((rec.c1, rec.c2)),
                };
                make_record(branch, s, p, pot, chi)
            });
            match refined {
                Ok(r) => r,
                Err(e) => return skipped(e),
            }
        };
        if rec.residual > RESIDUAL_TOLERANCE {
            return PointResult::Skipped {
                kind: "residual".into(),
                message: format!("residual {:e} above {RESIDUAL_TOLERANCE:e}", rec.residual),
            };
        }
        out.push(rec);
    }
    PointResult::Records(out)
}

/// Contiguous runs of admissible grid points, as closed intervals.
fn runs(grid: &[f64], admissible: &[bool]) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=grid.len() {
        let ok = i < grid.len() && admissible[i];
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                out.push(Interval::closed(grid[a], grid[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn admissible_intervals(
    branch: Branch,
    grid: &[f64],
    results: &[PointResult],
    p: &Params,
    pot: &PotentialModel,
) -> Vec<Interval> {
    match (branch, pot.kind()) {
        (Branch::RadialS5Zero, PotentialKind::Gravitational2D) => existence_intervals_gravitational(p),
        (Branch::RadialS5Zero, PotentialKind::Harmonic { .. }) => vec![
            Interval::open(None, Some(-p.mu1())),
            Interval::open(Some(-p.mu1()), None),
        ],
        (Branch::EqualDistanceS5Nonzero, PotentialKind::Gravitational2D) => vec![
            Interval::open(None, Some(0.0)),
            Interval::open(Some(0.0), None),
        ],
        (Branch::EqualMassSpecial, _) if p.equal_masses(EQUAL_MASS_TOLERANCE) => {
            vec![Interval::open(None, None)]
        }
        _ => {
            let ok: Vec<bool> = results
                .iter()
                .map(|r| matches!(r, PointResult::Records(v) if !v.is_empty()))
                .collect();
            runs(grid, &ok)
        }
    }
}

/// Sweep a branch over `grid`. With `threads = Some(n)` the grid is
/// evaluated on `n` worker threads; output order always follows the grid.
pub fn scan_branch(
    branch: Branch,
    grid: &[f64],
    p: &Params,
    pot: &PotentialModel,
    threads: Option<usize>,
) -> Result<BranchScan> {
    let eval = |x: &f64| scan_point(branch, *x, p, pot);
    let results: Vec<PointResult> = match threads {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| grid.par_iter().map(eval).collect()),
        _ => grid.iter().map(eval).collect(),
    };

    let admissible_intervals = admissible_intervals(branch, grid, &results, p, pot);
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    // (parameter, C2, verdict) of the first record at each grid point
    let mut leading: Vec<(f64, f64, Verdict)> = Vec::new();
    for (index, (x, res)) in grid.iter().zip(results).enumerate() {
        match res {
            PointResult::Records(recs) => {
                if let Some(r) = recs.first() {
                    leading.push((*x, r.c2, r.verdict));
                } else {
                    diagnostics.push(ScanDiagnostic {
                        index,
                        parameter: *x,
                        kind: "inadmissible".into(),
                        message: "existence condition fails (s3^2 < 0 or U' < 0)".into(),
                    });
                }
                records.extend(recs);
            }
            PointResult::Skipped { kind, message } => diagnostics.push(ScanDiagnostic {
                index,
                parameter: *x,
                kind,
                message,
            }),
        }
    }
    let sign_changes = leading
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| SignChange {
            left: w[0].0,
            right: w[1].0,
            from: w[0].1,
            to: w[1].1,
            verdict_from: w[0].2,
            verdict_to: w[1].2,
        })
        .collect();

    Ok(BranchScan {
        branch,
        parameter: branch.parameter().into(),
        parameter_grid: grid.to_vec(),
        admissible_intervals,
        records,
        diagnostics,
        sign_changes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::full_system::{dirac_rhs, lift_reduced};
    use crate::potential::PotentialModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grav() -> PotentialModel {
        PotentialModel::gravitational()
    }

    fn params(m1: f64, m2: f64) -> Params {
        Params::new(m1, m2).unwrap()
    }

    fn assert_zero_eigenvalue(r: &EquilibriumRecord) {
        let small = r.eigenvalues.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        assert!(small <= 1e-9, "smallest |lambda| = {small:e}");
    }

    #[test]
    fn radial_gravitational_example() {
        let recs = equilibria_radial(1.0, &params(1.0, 1.0), &grav()).unwrap();
        assert_eq!(recs.len(), 2);
        let s3: Vec<f64> = recs.iter().map(|r| r.s.s3).collect();
        assert!((s3[0] - 1.0).abs() < 1e-15 && (s3[1] + 1.0).abs() < 1e-15);
        for r in &recs {
            assert!((r.s.s7 - r.s.s3).abs() < 1e-15);
            assert!(r.residual <= 1e-12);
            assert_eq!(r.s3_sign as f64, r.s.s3.signum());
            assert_zero_eigenvalue(r);
        }
        assert!((gravitational_radial_s3_squared(1.0, &params(1.0, 1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radial_inadmissible_and_singular() {
        let p = params(1.0, 1.0);
        assert!(equilibria_radial(-0.25, &p, &grav()).unwrap().is_empty());
        assert!(matches!(
            equilibria_radial(-0.5, &p, &grav()),
            Err(Error::SingularDenominator(_))
        ));
        assert!(matches!(equilibria_radial(0.0, &p, &grav()), Err(Error::Domain { .. })));
    }

    #[test]
    fn radial_harmonic_has_s3_squared_2gamma() {
        let p = params(2.0, 0.7);
        let pot = PotentialModel::harmonic(1.7).unwrap();
        for s4 in [-3.0, -0.2, 0.0, 0.4, 5.0] {
            let s3sq = radial_s3_squared(s4, &p, &pot).unwrap();
            assert!((s3sq - 3.4).abs() < 1e-13, "s4={s4}");
        }
    }

    #[test]
    fn radial_formula_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let p = params(rng.random_range(0.1..5.0), rng.random_range(0.1..5.0));
            let s4: f64 = rng.random_range(-4.0..4.0);
            let Ok(general) = radial_s3_squared(s4, &p, &grav()) else { continue };
            let closed = gravitational_radial_s3_squared(s4, &p);
            assert!((general - closed).abs() <= 1e-10 * closed.abs().max(1.0));
        }
    }

    #[test]
    fn existence_interval_examples() {
        let iv = existence_intervals_gravitational(&params(2.0, 1.0));
        assert_eq!(iv.len(), 3);
        assert_eq!(iv[1].lo, Some(-2.0 / 3.0));
        assert_eq!(iv[1].hi, Some(-1.0 / 3.0));
        assert!(!iv[1].lo_closed && iv[1].hi_closed);
        let iv = existence_intervals_gravitational(&params(1.0, 1.0));
        assert_eq!(iv.len(), 2);
        assert_eq!(iv[0].to_string(), "(-inf, -1)");
        assert_eq!(iv[1].to_string(), "(0, inf)");
        let iv = existence_intervals_gravitational(&params(1.0, 2.0));
        assert!(iv[1].lo_closed && !iv[1].hi_closed);
        assert_eq!(iv[1].lo, Some(-2.0 / 3.0));
    }

    #[test]
    fn existence_intervals_match_sign_scan() {
        for (m1, m2) in [(2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.3, 4.0)] {
            let p = params(m1, m2);
            let iv = existence_intervals_gravitational(&p);
            for k in 0..10_000 {
                let s4 = -4.0 + 8.0 * (k as f64 + 0.5) / 10_000.0;
                let Ok(s3sq) = radial_s3_squared(s4, &p, &grav()) else { continue };
                let inside = iv.iter().any(|i| i.contains(s4));
                assert_eq!(inside, s3sq >= 0.0, "m=({m1},{m2}) s4={s4} s3^2={s3sq}");
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for pot in [grav(), PotentialModel::harmonic(0.8).unwrap(), PotentialModel::power_law(1.5, 1.5)] {
            for _ in 0..100 {
                let p = params(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
                let s = ReducedState::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(0.5..2.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                );
                let j = jacobian_reduced(&s, &p, &pot).unwrap();
                for c in 0..5 {
                    let h = 1e-6;
                    let mut a = s.to_array();
                    a[c] += h;
                    let fp = reduced_rhs(&ReducedState::from_array(&a), &p, &pot).unwrap();
                    a[c] -= 2.0 * h;
                    let fm = reduced_rhs(&ReducedState::from_array(&a), &p, &pot).unwrap();
                    for r in 0..5 {
                        let fd = (fp[r] - fm[r]) / (2.0 * h);
                        assert!((fd - j[(r, c)]).abs() <= 1e-6, "{pot:?} ({r},{c})");
                    }
                }
            }
        }
    }

    #[test]
    fn radial_chi_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut checked = 0;
        while checked < 100 {
            let p = params(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
            let s4: f64 = rng.random_range(-3.0..3.0);
            if gravitational_poles(&p).iter().any(|c| (s4 - c).abs() < 0.05) {
                continue;
            }
            let recs = equilibria_radial(s4, &p, &grav()).unwrap();
            let (c1, c2, d) = gravitational_radial_chi(s4, &p);
            for r in &recs {
                let scale = c1.abs().max(c2.abs().sqrt()).max(1.0);
                assert!((r.c1 - c1).abs() <= 1e-9 * scale, "C1 {} vs {c1}", r.c1);
                assert!((r.c2 - c2).abs() <= 1e-9 * scale * scale, "C2 {} vs {c2}", r.c2);
                assert!((r.discriminant - d).abs() <= 1e-8 * scale * scale);
                assert!(d >= 0.0);
                assert_zero_eigenvalue(r);
                checked += 1;
            }
        }
    }

    #[test]
    fn d1_discriminant() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..50 {
            let p = params(rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
            let [a, b, c] = gravitational_d1_coefficients(&p);
            let disc = b * b - 4.0 * a * c;
            let expect = -32.0 * p.total().powi(2) * p.m1() * p.m2();
            assert!((disc - expect).abs() <= 1e-10 * expect.abs());
        }
    }

    #[test]
    fn c2_sign_change_at_half_depends_on_mass_ratio() {
        // across s4 = -1/2 inside (-m1/(m1+m2), -m2/(m1+m2)]
        let sign = |ratio: f64, s4: f64| gravitational_radial_chi(s4, &params(ratio, 1.0)).1.signum();
        let h = 1e-3;
        assert_eq!((sign(2.0, -0.5 - h), sign(2.0, -0.5 + h)), (1.0, -1.0));
        assert_eq!((sign(7.0, -0.5 - h), sign(7.0, -0.5 + h)), (-1.0, 1.0));
        let c2 = gravitational_radial_chi(-0.5, &params(2.0, 1.0)).1;
        assert!(c2.abs() < 1e-12);
    }

    #[test]
    fn equal_distance_example() {
        let recs = equilibria_equal_distance(0.5, &params(1.0, 1.0), &grav()).unwrap();
        assert_eq!(recs.len(), 2);
        let r = &recs[0];
        assert_eq!(r.s.to_array(), [2.0, -0.5, 0.5, -1.0, -1.0]);
        assert_eq!(recs[1].s.to_array(), [-2.0, -0.5, 0.5, 1.0, 1.0]);
        let (c1, c2, d) = chi_hat_equal_distance(0.5, &grav()).unwrap();
        assert!((c1 - 4.0).abs() < 1e-13);
        assert!((c2 + 32.0).abs() < 1e-12);
        assert!((d - 144.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Unstable);
        assert_zero_eigenvalue(r);
    }

    #[test]
    fn equal_distance_needs_monotone_law() {
        let p = params(1.0, 2.0);
        let err = equilibria_equal_distance(0.3, &p, &PotentialModel::harmonic(1.0).unwrap());
        assert!(matches!(err, Err(Error::NotApplicable(_))));
        // repelling law: U' < 0, no equilibria
        let repel = PotentialModel::power_law(-1.0, -1.0);
        assert!(equilibria_equal_distance(0.3, &p, &repel).unwrap().is_empty());
    }

    #[test]
    fn equal_distance_charpoly() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let stiff = PotentialModel::power_law(1.0, 2.0);
        for _ in 0..50 {
            let p = params(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
            let s5 = rng.random_range(0.05..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            for pot in [grav(), stiff.clone()] {
                for r in equilibria_equal_distance(s5, &p, &pot).unwrap() {
                    assert_eq!(r.s.s4, -0.5);
                    assert!(r.residual <= 1e-12);
                    let jac = jacobian_reduced(&r.s, &p, &pot).unwrap();
                    let cp = characteristic_polynomial(&jac);
                    let want = [1.0, 0.0, r.c1, 0.0, r.c2, 0.0];
                    for (a, b) in cp.iter().zip(want) {
                        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{cp:?} vs {want:?}");
                    }
                    let (_, _, d) = chi_hat_equal_distance(s5, &pot).unwrap();
                    assert!(d >= 0.0);
                    assert!((d - r.discriminant).abs() <= 1e-9 * d.max(1.0));
                    let expected = if matches!(pot.kind(), PotentialKind::Gravitational2D) {
                        Verdict::Unstable
                    } else {
                        Verdict::LinearlyStable
                    };
                    assert_eq!(r.verdict, expected);
                }
            }
        }
    }

    #[test]
    fn equal_mass_examples() {
        let p = params(1.0, 1.0);
        let r = equilibria_equal_mass(3.0, &p, &grav()).unwrap();
        assert!((r.c1 - 18.0).abs() < 1e-12 && (r.c2 - 17.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::LinearlyStable);
        let q = quadratic_roots(r.c1, r.c2);
        assert!((q.roots[0].re + 1.0).abs() < 1e-12 && (q.roots[1].re + 17.0).abs() < 1e-12);
        let r = equilibria_equal_mass(2.0, &p, &grav()).unwrap();
        assert!((r.c2 + 48.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Unstable);
        for k in 0..20 {
            let s3 = -4.0 + 0.43 * k as f64;
            let r = equilibria_equal_mass(s3, &p, &grav()).unwrap();
            let s3sq = s3 * s3;
            assert!((r.c1 - 2.0 * s3sq).abs() < 1e-12);
            assert!((r.c2 - (s3sq + 8.0) * (s3sq - 8.0)).abs() < 1e-10);
            assert!((chi_hat_equal_mass(s3, &grav()).unwrap().2 - 256.0).abs() < 1e-10);
            assert!(r.residual <= 1e-12);
            assert_zero_eigenvalue(&r);
            let (c1, c2) = chi_hat_from_jacobian(&jacobian_reduced(&r.s, &p, &grav()).unwrap());
            assert!((c1 - r.c1).abs() < 1e-9 * r.c1.abs().max(1.0));
            assert!((c2 - r.c2).abs() < 1e-9 * r.c2.abs().max(1.0));
        }
        assert!(matches!(
            equilibria_equal_mass(1.0, &params(1.0, 2.0), &grav()),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn stability_classification() {
        assert_eq!(classify_stability(18.0, 17.0), Verdict::LinearlyStable);
        assert_eq!(classify_stability(1.0, -3.0), Verdict::Unstable);
        assert_eq!(classify_stability(5.0, 0.0), Verdict::Marginal);
        assert_eq!(classify_stability(1.0, 1.0), Verdict::Unstable);
        assert_eq!(classify_stability(-3.0, 2.0), Verdict::Unstable);
    }

    #[test]
    fn gravitational_radial_scan() {
        let p = params(1.0, 1.0);
        let grid = GridSpec { start: 0.0, end: 10.0, points: 100, include_start: false }
            .values()
            .unwrap();
        let scan = scan_branch(Branch::RadialS5Zero, &grid, &p, &grav(), None).unwrap();
        assert!(scan.diagnostics.is_empty(), "{:?}", scan.diagnostics);
        assert_eq!(scan.records.len(), 200);
        assert!(scan.records.iter().all(|r| r.residual <= 1e-12));
        assert_eq!(scan.records.last().unwrap().verdict, Verdict::LinearlyStable);
        assert_eq!(scan.records[0].verdict, Verdict::Unstable);
        assert!(!scan.sign_changes.is_empty());
        let par = scan_branch(Branch::RadialS5Zero, &grid, &p, &grav(), Some(4)).unwrap();
        assert_eq!(par, scan);
    }

    #[test]
    fn scan_records_singular_point_and_continues() {
        let p = params(2.0, 1.0);
        let grid = [-2.0 / 3.0, -0.6, -0.4, 1.0];
        let scan = scan_branch(Branch::RadialS5Zero, &grid, &p, &grav(), None).unwrap();
        assert_eq!(scan.diagnostics[0].index, 0);
        assert_eq!(scan.diagnostics[0].kind, "singular_denominator");
        assert_eq!(scan.records.len(), 6);

        let eq = params(1.0, 1.0);
        let scan = scan_branch(Branch::RadialS5Zero, &[-0.5, 2.0], &eq, &grav(), None).unwrap();
        assert!(scan.diagnostics[0].message.contains("EqualMassSpecial"));

        let harm = PotentialModel::harmonic(1.0).unwrap();
        let scan = scan_branch(Branch::RadialS5Zero, &[-2.0 / 3.0, 0.5], &p, &harm, None).unwrap();
        assert_eq!(scan.diagnostics[0].kind, "singular_denominator");
        assert_eq!(scan.records.len(), 2);
    }

    #[test]
    fn scan_equal_mass_threshold() {
        let p = params(1.0, 1.0);
        let grid: Vec<f64> = (0..41).map(|k| 2.0 + 0.025 * k as f64).collect();
        let scan = scan_branch(Branch::EqualMassSpecial, &grid, &p, &grav(), None).unwrap();
        for r in &scan.records {
            let want = if r.s.s3 * r.s.s3 < 8.0 - 1e-9 {
                Verdict::Unstable
            } else if r.s.s3 * r.s.s3 > 8.0 + 1e-9 {
                Verdict::LinearlyStable
            } else {
                Verdict::Marginal
            };
            assert_eq!(r.verdict, want, "s3 = {}", r.s.s3);
        }
        assert_eq!(scan.sign_changes.len(), 1);
        let sc = &scan.sign_changes[0];
        assert!(sc.left < 8f64.sqrt() && sc.right > 8f64.sqrt());
    }

    #[test]
    fn scan_equal_distance() {
        let p = params(3.0, 1.0);
        let grid = [-1.0, -0.2, 0.3, 1.5];
        let scan = scan_branch(Branch::EqualDistanceS5Nonzero, &grid, &p, &grav(), None).unwrap();
        assert_eq!(scan.records.len(), 8);
        assert!(scan.records.iter().all(|r| r.verdict == Verdict::Unstable));
        let harm = PotentialModel::harmonic(1.0).unwrap();
        let scan = scan_branch(Branch::EqualDistanceS5Nonzero, &grid, &p, &harm, None).unwrap();
        assert!(scan.records.is_empty());
        assert!(scan.diagnostics.iter().all(|d| d.kind == "not_applicable"));
    }

    #[test]
    fn polish_recovers_perturbed_equilibrium() {
        let p = params(1.5, 0.5);
        let pot = PotentialModel::power_law(1.0, -1.5);
        let rec = &equilibria_radial(0.8, &p, &pot).unwrap()[0];
        let mut s = rec.s;
        s.s3 += 1e-4;
        s.s7 -= 2e-4;
        let fixed = polish(Branch::RadialS5Zero, &s, &p, &pot).unwrap();
        let res = sup_norm(&reduced_rhs(&fixed, &p, &pot).unwrap());
        assert!(res <= 1e-13, "{res:e}");
        assert_eq!(fixed.s4, 0.8);
    }

    #[test]
    fn radial_records_are_relative_equilibria() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..50 {
            let p = params(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
            let s4 = rng.random_range(0.2..4.0);
            for r in equilibria_radial(s4, &p, &grav()).unwrap() {
                let st = lift_reduced(&r.s);
                assert!((st.w[0] - s4 * st.v[0]).abs() < 1e-15);
                assert!((st.w[1] - s4 * st.v[1]).abs() < 1e-14);
                let f = dirac_rhs(&st, &p, &grav()).unwrap();
                let g = st.generator();
                let gg: f64 = g.iter().map(|x| x * x).sum();
                let fg: f64 = f.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
                let perp = f.iter().zip(g.iter()).map(|(a, b)| (a - fg / gg * b).abs()).fold(0.0, f64::max);
                assert!(perp <= 1e-10, "{perp:e}");
            }
        }
    }
}
