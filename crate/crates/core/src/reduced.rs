//! The five-dimensional reduced system on the chart `s1 = 1, s2 = 0`.

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::full_system::Params;
use crate::potential::{PotentialModel, SquaredRadius};

/// Image `(s3, ..., s7)` of a constrained state under the Hilbert map.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState {
    pub s3: f64,
    pub s4: f64,
    pub s5: f64,
    pub s6: f64,
    pub s7: f64,
}

impl ReducedState {
    pub fn new(s3: f64, s4: f64, s5: f64, s6: f64, s7: f64) -> Self {
        ReducedState { s3, s4, s5, s6, s7 }
    }

    pub fn from_array(a: &[f64; 5]) -> Self {
        ReducedState::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn from_vector(v: &Vector5<f64>) -> Self {
        ReducedState::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.s3, self.s4, self.s5, self.s6, self.s7]
    }

    pub fn to_vector(&self) -> Vector5<f64> {
        Vector5::from(self.to_array())
    }

    /// Squared distance of the first particle from the centre.
    pub fn r1(&self) -> SquaredRadius {
        SquaredRadius((1.0 + self.s4).powi(2) + self.s5 * self.s5)
    }

    /// Squared distance of the second particle from the centre.
    pub fn r2(&self) -> SquaredRadius {
        SquaredRadius(self.s4 * self.s4 + self.s5 * self.s5)
    }
}

/// Reduced equations of motion.
pub fn reduced_rhs(s: &ReducedState, p: &Params, pot: &PotentialModel) -> Result<[f64; 5]> {
    let a1 = pot.uprime(s.r1())?;
    let a2 = pot.uprime(s.r2())?;
    let ReducedState { s3, s4, s5, s6, s7 } = *s;
    Ok([
        -2.0 * (a1 - a2) * s5,
        s3 * s5 + s6,
        -s3 * s4 + s7,
        -2.0 * p.mu1() * a1 * (1.0 + s4) - 2.0 * p.mu2() * a2 * s4 + p.mu1() * s3 * s3 + s3 * s7,
        -2.0 * a2 * s5 - s3 * s6,
    ])
}

/// Structure matrix of the induced bracket, rows/columns ordered `s3..s7`.
pub fn structure_matrix(s: &ReducedState, p: &Params) -> Matrix5<f64> {
    let k = 1.0 / (2.0 * p.big_m());
    let (m2, mt) = (p.m2(), p.total());
    let ReducedState { s3, s4, s5, s6, s7 } = *s;
    let mut m = Matrix5::zeros();
    let mut set = |i: usize, j: usize, v: f64| {
        m[(i, j)] = v;
        m[(j, i)] = -v;
    };
    set(0, 1, -s5 * k);
    set(0, 2, 1.0 / m2 + s4 * k);
    set(0, 3, -s3 / m2 - s7 * k);
    set(0, 4, s6 * k);
    set(1, 3, 1.0 / mt);
    set(1, 4, -s5 / m2);
    set(2, 4, (1.0 + s4) / m2);
    set(3, 4, -2.0 * p.big_m() * s3 / (m2 * m2) - s7 / m2);
    m
}

/// `d P / d s_l` for `l = 3..7`. The entries are affine, so these are constant.
pub fn structure_matrix_partials(p: &Params) -> [Matrix5<f64>; 5] {
    let k = 1.0 / (2.0 * p.big_m());
    let m2 = p.m2();
    let mut out = [Matrix5::zeros(); 5];
    let mut set = |l: usize, i: usize, j: usize, v: f64| {
        out[l][(i, j)] = v;
        out[l][(j, i)] = -v;
    };
    set(0, 0, 3, -1.0 / m2);
    set(0, 3, 4, -2.0 * p.big_m() / (m2 * m2));
    set(1, 0, 2, k);
    set(1, 2, 4, 1.0 / m2);
    set(2, 0, 1, -k);
    set(2, 1, 4, -1.0 / m2);
    set(3, 0, 4, k);
    set(4, 0, 3, -k);
    set(4, 3, 4, -1.0 / m2);
    out
}

/// Largest cyclic sum `sum_l P_il dP_jk/ds_l + P_jl dP_ki/ds_l + P_kl dP_ij/ds_l`.
pub fn jacobi_residual(pm: &Matrix5<f64>, partials: &[Matrix5<f64>; 5]) -> f64 {
    let term = |a: usize, b: usize, c: usize| -> f64 {
        (0..5).map(|l| pm[(a, l)] * partials[l][(b, c)]).sum()
    };
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            for k in 0..5 {
                let r = term(i, j, k) + term(j, k, i) + term(k, i, j);
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

/// Reduced Hamiltonian. Needs `U` itself.
pub fn reduced_hamiltonian(s: &ReducedState, p: &Params, pot: &PotentialModel) -> Result<f64> {
    let (m1, m2) = (p.m1(), p.m2());
    let ReducedState { s3, s6, s7, .. } = *s;
    Ok(0.5 * m1 * (s3 * s3 + 2.0 * s3 * s7 + s6 * s6 + s7 * s7)
        + 0.5 * m2 * (s6 * s6 + s7 * s7)
        + m1 * pot.energy(s.r1())?
        + m2 * pot.energy(s.r2())?)
}

/// Gradient of the reduced Hamiltonian; needs only `U'`.
pub fn reduced_hamiltonian_gradient(
    s: &ReducedState,
    p: &Params,
    pot: &PotentialModel,
) -> Result<Vector5<f64>> {
    let (m1, m2) = (p.m1(), p.m2());
    let a1 = pot.uprime(s.r1())?;
    let a2 = pot.uprime(s.r2())?;
    let ReducedState { s3, s4, s5, s6, s7 } = *s;
    Ok(Vector5::new(
        m1 * (s3 + s7),
        2.0 * m1 * a1 * (1.0 + s4) + 2.0 * m2 * a2 * s4,
        2.0 * (m1 * a1 + m2 * a2) * s5,
        (m1 + m2) * s6,
        m1 * (s3 + s7) + m2 * s7,
    ))
}

/// Reduced angular momentum.
pub fn first_integral_j(s: &ReducedState, p: &Params) -> f64 {
    let (m1, mt) = (p.m1(), p.total());
    let ReducedState { s3, s4, s5, s6, s7 } = *s;
    m1 * (s3 + s7 + s3 * s4) + mt * (s4 * s7 - s5 * s6)
}

pub fn first_integral_j_gradient(s: &ReducedState, p: &Params) -> Vector5<f64> {
    let (m1, mt) = (p.m1(), p.total());
    let ReducedState { s3, s4, s5, s6, s7 } = *s;
    Vector5::new(
        m1 * (1.0 + s4),
        m1 * s3 + mt * s7,
        -mt * s6,
        -mt * s5,
        m1 + mt * s4,
    )
}

/// `{f, g}'` from gradients.
pub fn reduced_bracket(pm: &Matrix5<f64>, grad_f: &Vector5<f64>, grad_g: &Vector5<f64>) -> f64 {
    grad_f.dot(&(pm * grad_g))
}

/// Max-norm of `reduced_rhs - P grad h`.
pub fn bracket_consistency_check(
    s: &ReducedState,
    p: &Params,
    pot: &PotentialModel,
) -> Result<f64> {
    let rhs = Vector5::from(reduced_rhs(s, p, pot)?);
    let hamiltonian_field = structure_matrix(s, p) * reduced_hamiltonian_gradient(s, p, pot)?;
    Ok((rhs - hamiltonian_field).amax())
}

/// A point on a fixed level set `j = j0`, in coordinates
/// `(s3~, s4, s5, s6)` with `s3~ = s3 + (m1 + m2)/m1 s7`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSetState {
    pub s3tilde: f64,
    pub s4: f64,
    pub s5: f64,
    pub s6: f64,
    pub j0: f64,
}

impl LevelSetState {
    /// Project a reduced point onto its own level set.
    pub fn from_reduced(s: &ReducedState, p: &Params) -> Self {
        LevelSetState {
            s3tilde: s.s3 + p.total() / p.m1() * s.s7,
            s4: s.s4,
            s5: s.s5,
            s6: s.s6,
            j0: first_integral_j(s, p),
        }
    }

    /// `m2 s7 = m1 s3~ (1 + s4) - (m1 + m2) s5 s6 - j0`.
    pub fn s7(&self, p: &Params) -> f64 {
        (p.m1() * self.s3tilde * (1.0 + self.s4) - p.total() * self.s5 * self.s6 - self.j0)
            / p.m2()
    }

    pub fn to_reduced(&self, p: &Params) -> ReducedState {
        let s7 = self.s7(p);
        ReducedState::new(
            self.s3tilde - p.total() / p.m1() * s7,
            self.s4,
            self.s5,
            self.s6,
            s7,
        )
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.s3tilde, self.s4, self.s5, self.s6]
    }
}

/// Vector field induced on a level set of `j`.
pub fn levelset_rhs(ls: &LevelSetState, p: &Params, pot: &PotentialModel) -> Result<[f64; 4]> {
    let s = ls.to_reduced(p);
    let f = reduced_rhs(&s, p, pot)?;
    Ok([f[0] + p.total() / p.m1() * f[4], f[1], f[2], f[3]])
}
