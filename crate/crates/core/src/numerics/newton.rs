//! Gauss-Newton refinement for small, possibly overdetermined systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Stop once the update's max-norm falls below this.
    pub step_tol: f64,
    /// Stop once the residual's max-norm falls below this.
    pub residual_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iterations: 20,
            step_tol: 1e-13,
            residual_tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Minimize `|F(x)|` from `x0` using least-squares Newton steps.
pub fn newton_polish<F, J>(
    mut residual: F,
    mut jacobian: J,
    x0: DVector<f64>,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    J: FnMut(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    let mut x = x0;
    let mut r = residual(&x)?;
    for it in 0..opts.max_iterations {
        let norm = r.amax();
        if norm <= opts.residual_tol {
            return Ok(NewtonOutcome {
                x,
                iterations: it,
                residual: norm,
            });
        }
        let jac = jacobian(&x)?;
        let svd = jac.svd(true, true);
        let step = svd
            .solve(&(-&r), 1e-14)
            .map_err(|e| Error::ConvergenceFailure(e.to_string()))?;
        x += &step;
        r = residual(&x)?;
        if step.amax() <= opts.step_tol * (1.0 + x.amax()) {
            return Ok(NewtonOutcome {
                x,
                iterations: it + 1,
                residual: r.amax(),
            });
        }
    }
    let norm = r.amax();
    if norm <= 1e-10 {
        Ok(NewtonOutcome {
            x,
            iterations: opts.max_iterations,
            residual: norm,
        })
    } else {
        Err(Error::ConvergenceFailure(format!(
            "Newton did not converge in {} iterations (residual {norm:e})",
            opts.max_iterations
        )))
    }
}
