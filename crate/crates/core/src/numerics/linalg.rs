//! Small dense linear algebra: spectra, rank, characteristic polynomials
//! and quadratic roots.

use nalgebra::{DMatrix, Dim, Matrix, RawStorage};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn to_dmatrix<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(a: &Matrix<f64, R, C, S>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// All eigenvalues with multiplicity, sorted by real then imaginary part.
pub fn eigenvalues<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(
    a: &Matrix<f64, R, C, S>,
) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let m = to_dmatrix(a);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let schur = m
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::ConvergenceFailure("Schur decomposition did not converge".into()))?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(ev)
}

/// Number of singular values above `rel_threshold` times the largest one.
pub fn matrix_rank<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(
    a: &Matrix<f64, R, C, S>,
    rel_threshold: f64,
) -> usize {
    let m = to_dmatrix(a);
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_threshold * largest).count()
}

/// Monic characteristic polynomial `det(t I - A)`, highest degree first,
/// by the Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(
    a: &Matrix<f64, R, C, S>,
) -> Vec<f64> {
    let a = to_dmatrix(a);
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        m = &a * &m + DMatrix::identity(n, n) * c;
        c = -(&a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Roots of `tau^2 + c1 tau + c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticRoots {
    /// Larger real part first.
    pub roots: [Complex64; 2],
    pub discriminant: f64,
}

impl QuadraticRoots {
    pub fn is_real(&self) -> bool {
        self.discriminant >= 0.0
    }
}

pub fn quadratic_roots(c1: f64, c2: f64) -> QuadraticRoots {
    let disc = c1 * c1 - 4.0 * c2;
    let roots = if disc >= 0.0 {
        let sq = disc.sqrt();
        // q carries the sign of -c1 so no cancellation occurs
        let sign = if c1 >= 0.0 { 1.0 } else { -1.0 };
        let q = -0.5 * (c1 + sign * sq);
        let (a, b) = if q == 0.0 { (0.0, 0.0) } else { (q, c2 / q) };
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(-0.5 * c1, im), Complex64::new(-0.5 * c1, -im)]
    };
    QuadraticRoots {
        roots,
        discriminant: disc,
    }
}
