//! Symmetry reduction of a rigid two-mass "barbell" moving in a planar
//! central force field.
//!
//! The crate covers the whole pipeline:
//!
//! - [`potential`]: the force law, always evaluated at a *squared* radius.
//! - [`full_system`]: the eight-dimensional constrained dynamics in relative
//!   coordinates `(u, v, z, w)`, with canonical and Dirac brackets.
//! - [`invariants`]: the sixteen SO(2) invariants, the seven-element
//!   localized subset and the Hilbert map onto the orbit space chart.
//! - [`reduced`]: the five-dimensional reduced Poisson system, its
//!   Hamiltonian, the angular-momentum integral and the level-set reduction.
//! - [`harmonic`]: closed-form analysis of the harmonic potential.
//! - [`equilibria`]: relative equilibria and their linear stability.
//! - [`numerics`]: integrator, small dense linear algebra, Newton polish,
//!   continued fractions.
//! - [`cli`]: configuration, commands and report writers behind the
//!   `barbell` binary.

pub mod cli;
pub mod equilibria;
pub mod error;
pub mod full_system;
pub mod harmonic;
pub mod invariants;
pub mod numerics;
pub mod potential;
pub mod random;
pub mod reduced;

pub use error::{Error, Result};
pub use full_system::{FullState, Params};
pub use potential::{PotentialModel, SquaredRadius};
pub use reduced::ReducedState;
