//! Harmonic potential `U' = gamma`.
//!
//! Here `s3 = det(v, u) =: sigma` is conserved and the remaining reduced
//! coordinates `(s4, s5, s6, s7)` obey an affine linear system whose
//! frequencies are `|sigma + sqrt(2 gamma)|` and `|sigma - sqrt(2 gamma)|`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::full_system::Params;
use crate::numerics::rational::{best_rational, Rational};

/// Largest denominator accepted when deciding resonance.
pub const RESONANCE_MAX_DENOMINATOR: u64 = 64;
pub const RESONANCE_TOLERANCE: f64 = 1e-9;
const EXCEPTIONAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HarmonicRegime {
    NonResonant,
    /// `omega` matched `p/q` within tolerance; this is a numerical verdict,
    /// irrationality cannot be certified.
    Resonant { ratio: Rational },
    SigmaZero,
    SigmaSquaredEquals2Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicAnalysis {
    pub sigma: f64,
    pub gamma: f64,
    /// `+-i (sigma + sqrt(2 gamma))`, `+-i (sigma - sqrt(2 gamma))`.
    pub eigenvalues: [Complex64; 4],
    /// `(sigma - sqrt(2 gamma)) / (sigma + sqrt(2 gamma))`; `None` when the
    /// denominator vanishes.
    pub omega: Option<f64>,
    /// Unique stationary point of the affine system, if it is unique.
    pub stationary_point: Option<[f64; 4]>,
    /// Dimension of the set of stationary points.
    pub stationary_set_dimension: usize,
    pub regime: HarmonicRegime,
    /// Common period of all non-constant solutions, when one exists.
    pub period: Option<f64>,
    pub note: String,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )))
    }
}

/// Linear part and affine term of the `(s4, s5, s6, s7)` system.
pub fn harmonic_matrix(sigma: f64, gamma: f64, p: &Params) -> Result<(Matrix4<f64>, Vector4<f64>)> {
    check_gamma(gamma)?;
    let g2 = 2.0 * gamma;
    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0,    sigma,  1.0,    0.0,
        -sigma, 0.0,    0.0,    1.0,
        -g2,    0.0,    0.0,    sigma,
        0.0,    -g2,    -sigma, 0.0,
    );
    let b = Vector4::new(0.0, 0.0, (sigma * sigma - g2) * p.mu1(), 0.0);
    Ok((a, b))
}

/// Right-hand side of the affine system, for integration.
pub fn harmonic_flow(a: &Matrix4<f64>, b: &Vector4<f64>, y: &[f64], dy: &mut [f64]) {
    let v = a * Vector4::new(y[0], y[1], y[2], y[3]) + b;
    dy[..4].copy_from_slice(v.as_slice());
}

pub fn classify_harmonic(sigma: f64, gamma: f64, p: &Params) -> Result<HarmonicAnalysis> {
    check_gamma(gamma)?;
    let root = (2.0 * gamma).sqrt();
    let fast = sigma + root;
    let slow = sigma - root;
    let eigenvalues = [
        Complex64::new(0.0, fast),
        Complex64::new(0.0, -fast),
        Complex64::new(0.0, slow),
        Complex64::new(0.0, -slow),
    ];
    let sigma_zero = sigma.abs() <= EXCEPTIONAL_TOLERANCE;
    let degenerate = (sigma * sigma - 2.0 * gamma).abs() <= EXCEPTIONAL_TOLERANCE * 2.0 * gamma;

    let omega = if fast.abs() <= EXCEPTIONAL_TOLERANCE * root {
        None
    } else {
        Some(slow / fast)
    };

    let (stationary_point, stationary_set_dimension) = if degenerate {
        (None, 2)
    } else {
        let mu = p.mu1();
        (Some([-mu, 0.0, 0.0, -mu * sigma]), 0)
    };

    let (regime, period, note) = if sigma_zero {
        (
            HarmonicRegime::SigmaZero,
            Some(2.0 * PI / root),
            "sigma = 0: semisimple, all non-constant solutions periodic".to_string(),
        )
    } else if degenerate {
        (
            HarmonicRegime::SigmaSquaredEquals2Gamma,
            Some(PI / root),
            "sigma^2 = 2 gamma: homogeneous system of rank two, plane of stationary points"
                .to_string(),
        )
    } else {
        let w = omega.expect("omega defined away from sigma^2 = 2 gamma");
        match best_rational(w, RESONANCE_MAX_DENOMINATOR, RESONANCE_TOLERANCE) {
            Some(ratio) => (
                HarmonicRegime::Resonant { ratio },
                Some(2.0 * PI * ratio.den as f64 / fast.abs()),
                format!(
                    "omega = {ratio} within tolerance {RESONANCE_TOLERANCE:e} \
                     (denominator <= {RESONANCE_MAX_DENOMINATOR}); not a proof of rationality"
                ),
            ),
            None => (
                HarmonicRegime::NonResonant,
                None,
                format!(
                    "no p/q with q <= {RESONANCE_MAX_DENOMINATOR} within {RESONANCE_TOLERANCE:e}; \
                     treated as non-resonant"
                ),
            ),
        }
    };

    Ok(HarmonicAnalysis {
        sigma,
        gamma,
        eigenvalues,
        omega,
        stationary_point,
        stationary_set_dimension,
        regime,
        period,
        note,
    })
}

/// `v = sigma (u2, -u1)` for a unit vector `u`.
pub fn reconstruct_v(sigma: f64, u: [f64; 2]) -> Result<[f64; 2]> {
    let uu = u[0] * u[0] + u[1] * u[1];
    if (uu - 1.0).abs() > 1e-10 {
        return Err(Error::DegenerateInput(format!(
            "u must be a unit vector, |u|^2 = {uu}"
        )));
    }
    Ok([sigma * u[1], -sigma * u[0]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{eigenvalues, matrix_rank};
    use crate::numerics::ode::{integrate, IntegratorConfig};
    use crate::potential::PotentialModel;
    use crate::reduced::{reduced_rhs, ReducedState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> Params {
        Params::new(1.0, 1.0).unwrap()
    }

    fn contains(ev: &[Complex64], z: Complex64, tol: f64) -> bool {
        ev.iter().any(|w| (w - z).norm() <= tol)
    }

    #[test]
    fn spectra() {
        let (a, _) = harmonic_matrix(0.0, 0.5, &unit()).unwrap();
        let ev = eigenvalues(&a).unwrap();
        assert_eq!(ev.iter().filter(|z| (z.im - 1.0).abs() < 1e-10).count(), 2);
        assert_eq!(ev.iter().filter(|z| (z.im + 1.0).abs() < 1e-10).count(), 2);

        let (a, _) = harmonic_matrix(1.0, 2.0, &unit()).unwrap();
        let ev = eigenvalues(&a).unwrap();
        for im in [3.0, -3.0, 1.0, -1.0] {
            assert!(contains(&ev, Complex64::new(0.0, im), 1e-10));
        }
    }

    #[test]
    fn random_spectra_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let sigma = rng.random_range(-3.0..3.0);
            let gamma = rng.random_range(0.05..4.0);
            let (a, _) = harmonic_matrix(sigma, gamma, &unit()).unwrap();
            let ev = eigenvalues(&a).unwrap();
            let an = classify_harmonic(sigma, gamma, &unit()).unwrap();
            for z in an.eigenvalues {
                assert!(contains(&ev, z, 1e-10), "sigma={sigma} gamma={gamma}");
            }
        }
    }

    #[test]
    fn degenerate_case_has_rank_two() {
        let gamma: f64 = 1.3;
        let sigma = (2.0 * gamma).sqrt();
        let (a, b) = harmonic_matrix(sigma, gamma, &unit()).unwrap();
        assert_eq!(matrix_rank(&a, 1e-10), 2);
        assert!(b.amax() < 1e-15);
        let an = classify_harmonic(sigma, gamma, &unit()).unwrap();
        assert_eq!(an.regime, HarmonicRegime::SigmaSquaredEquals2Gamma);
        assert_eq!(an.stationary_point, None);
        assert_eq!(an.stationary_set_dimension, 2);
        let an = classify_harmonic(-sigma, gamma, &unit()).unwrap();
        assert_eq!(an.omega, None);
    }

    #[test]
    fn resonant_example() {
        let an = classify_harmonic(1.0, 2.0, &unit()).unwrap();
        assert_eq!(an.stationary_point, Some([-0.5, 0.0, 0.0, -0.5]));
        assert!((an.omega.unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            an.regime,
            HarmonicRegime::Resonant {
                ratio: Rational { num: -1, den: 3 }
            }
        );
        assert!((an.period.unwrap() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn sigma_zero_regime() {
        let an = classify_harmonic(0.0, 0.5, &unit()).unwrap();
        assert_eq!(an.regime, HarmonicRegime::SigmaZero);
        assert!((an.period.unwrap() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn irrational_ratio() {
        let an = classify_harmonic(1.0, 1.0, &unit()).unwrap();
        assert_eq!(an.regime, HarmonicRegime::NonResonant);
        assert_eq!(an.period, None);
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(classify_harmonic(1.0, -1.0, &unit()).is_err());
        assert!(harmonic_matrix(1.0, 0.0, &unit()).is_err());
    }

    #[test]
    fn stationary_point_solves_reduced_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let p = Params::new(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)).unwrap();
            let sigma = rng.random_range(-2.0..2.0);
            let gamma = rng.random_range(0.1..2.0);
            let an = classify_harmonic(sigma, gamma, &p).unwrap();
            let [s4, s5, s6, s7] = an.stationary_point.unwrap();
            let pot = PotentialModel::harmonic(gamma).unwrap();
            let f = reduced_rhs(&ReducedState::new(sigma, s4, s5, s6, s7), &p, &pot).unwrap();
            assert!(f.iter().all(|v| v.abs() <= 1e-14), "{f:?}");
        }
    }

    #[test]
    fn linear_system_agrees_with_reduced_system() {
        let p = Params::new(2.0, 0.5).unwrap();
        let (sigma, gamma) = (0.7, 1.1);
        let pot = PotentialModel::harmonic(gamma).unwrap();
        let (a, b) = harmonic_matrix(sigma, gamma, &p).unwrap();
        let y = [0.3, -0.4, 0.9, 0.1];
        let mut dy = [0.0; 4];
        harmonic_flow(&a, &b, &y, &mut dy);
        let f = reduced_rhs(&ReducedState::new(sigma, y[0], y[1], y[2], y[3]), &p, &pot).unwrap();
        for k in 0..4 {
            assert!((dy[k] - f[k + 1]).abs() < 1e-14);
        }
    }

    #[test]
    fn resonant_flow_returns() {
        let p = unit();
        let (sigma, gamma) = (1.0, 2.0);
        let an = classify_harmonic(sigma, gamma, &p).unwrap();
        let (a, b) = harmonic_matrix(sigma, gamma, &p).unwrap();
        let y0 = [0.2, 0.1, -0.3, 0.4];
        let cfg = IntegratorConfig::new(0.0, an.period.unwrap(), 2);
        let tr = integrate(
            |_t, y, dy| {
                harmonic_flow(&a, &b, y, dy);
                Ok(())
            },
            &y0,
            &cfg,
            None,
        )
        .unwrap();
        let end = tr.last().unwrap();
        let dist = end.iter().zip(y0.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dist <= 1e-6, "return distance {dist}");
    }

    #[test]
    fn reconstruct_velocity() {
        assert_eq!(reconstruct_v(2.0, [1.0, 0.0]).unwrap(), [0.0, -2.0]);
        assert_eq!(reconstruct_v(0.0, [0.6, 0.8]).unwrap(), [0.0, 0.0]);
        let u = [0.6, 0.8];
        let v = reconstruct_v(1.5, u).unwrap();
        assert!((u[0] * v[0] + u[1] * v[1]).abs() < 1e-15);
        assert!((v[0] * u[1] - u[0] * v[1] - 1.5).abs() < 1e-15);
        assert!(reconstruct_v(1.0, [2.0, 0.0]).is_err());
    }
}
