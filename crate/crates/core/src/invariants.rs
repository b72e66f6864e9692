//! Polynomial invariants of the diagonal rotation action and the localized
//! Hilbert map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full_system::{FullState, Vec2};
use crate::reduced::ReducedState;

#[derive(Debug, Clone, Copy)]
enum Slot {
    U,
    V,
    Z,
    W,
}

#[derive(Debug, Clone, Copy)]
enum Pairing {
    /// `<a, b>`
    Dot(Slot, Slot),
    /// `det(a, b) = a1 b2 - a2 b1`
    Det(Slot, Slot),
}

use Pairing::{Det, Dot};
use Slot::{U, V, W, Z};

/// `rho_1 .. rho_16`. Single source of truth for the sign conventions.
const GENERATORS: [Pairing; 16] = [
    Dot(U, U),
    Dot(V, V),
    Dot(Z, Z),
    Dot(W, W),
    Dot(U, V),
    Dot(U, Z),
    Dot(U, W),
    Dot(V, Z),
    Dot(V, W),
    Dot(Z, W),
    Det(V, U),
    Det(Z, U),
    Det(W, U),
    Det(Z, V),
    Det(W, V),
    Det(Z, W),
];

/// 1-based `rho` index of each `eta_k`.
pub const ETA_FROM_RHO: [usize; 7] = [1, 5, 11, 6, 12, 7, 13];

fn slot(st: &FullState, s: Slot) -> Vec2 {
    match s {
        U => st.u,
        V => st.v,
        Z => st.z,
        W => st.w,
    }
}

fn eval(st: &FullState, p: Pairing) -> f64 {
    match p {
        Dot(a, b) => {
            let (a, b) = (slot(st, a), slot(st, b));
            a[0] * b[0] + a[1] * b[1]
        }
        Det(a, b) => {
            let (a, b) = (slot(st, a), slot(st, b));
            a[0] * b[1] - a[1] * b[0]
        }
    }
}

/// The sixteen generators. `rho(k)` is 1-based to match the usual numbering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoVector(pub [f64; 16]);

impl RhoVector {
    pub fn rho(&self, k: usize) -> f64 {
        self.0[k - 1]
    }
}

/// `(eta_1, ..., eta_7) = (rho_1, rho_5, rho_11, rho_6, rho_12, rho_7, rho_13)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaVector(pub [f64; 7]);

impl EtaVector {
    pub fn eta(&self, k: usize) -> f64 {
        self.0[k - 1]
    }

    /// Components 3..7, i.e. the map restricted to the constraint manifold.
    pub fn reduced(&self) -> ReducedState {
        ReducedState::new(self.0[2], self.0[3], self.0[4], self.0[5], self.0[6])
    }
}

pub fn rho_map(st: &FullState) -> RhoVector {
    let mut out = [0.0; 16];
    for (o, g) in out.iter_mut().zip(GENERATORS.iter()) {
        *o = eval(st, *g);
    }
    RhoVector(out)
}

/// The Hilbert map `E`.
pub fn eta_map(st: &FullState) -> EtaVector {
    let mut out = [0.0; 7];
    for (o, k) in out.iter_mut().zip(ETA_FROM_RHO.iter()) {
        *o = eval(st, GENERATORS[k - 1]);
    }
    EtaVector(out)
}

/// `E` on a state claimed to satisfy the constraints; returns the reduced
/// coordinates `(s3, ..., s7)`.
pub fn reduce_constrained(st: &FullState) -> Result<ReducedState> {
    let e = eta_map(st);
    let (d1, d2) = ((e.0[0] - 1.0).abs(), e.0[1].abs());
    if d1 > 1e-8 || d2 > 1e-8 {
        return Err(Error::ConstraintViolation { c1: d1, c2: d2 });
    }
    Ok(e.reduced())
}

/// Recover all sixteen generators from the seven localized ones.
pub fn reconstruct_rho(e: &EtaVector) -> Result<RhoVector> {
    let [n1, n2, n3, n4, n5, n6, n7] = e.0;
    if n1.abs() < 1e-12 {
        return Err(Error::Localization(n1));
    }
    let mut r = [0.0; 16];
    for (k, idx) in ETA_FROM_RHO.iter().enumerate() {
        r[idx - 1] = e.0[k];
    }
    r[1] = (n2 * n2 + n3 * n3) / n1;
    r[2] = (n4 * n4 + n5 * n5) / n1;
    r[3] = (n6 * n6 + n7 * n7) / n1;
    r[7] = (n2 * n4 + n3 * n5) / n1;
    r[8] = (n2 * n6 + n3 * n7) / n1;
    r[9] = (n4 * n6 + n5 * n7) / n1;
    r[13] = (n2 * n5 - n3 * n4) / n1;
    r[14] = (n2 * n7 - n3 * n6) / n1;
    r[15] = (n5 * n6 - n4 * n7) / n1;
    Ok(RhoVector(r))
}
