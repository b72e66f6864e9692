//! Shared numerical engine.

pub mod linalg;
pub mod newton;
pub mod ode;
pub mod rational;

pub use linalg::{characteristic_polynomial, eigenvalues, matrix_rank, quadratic_roots, QuadraticRoots};
pub use newton::{newton_polish, NewtonOptions};
pub use ode::{integrate, IntegratorConfig, Trajectory};
pub use rational::{best_rational, Rational};
