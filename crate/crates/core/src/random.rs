//! Seeded random states on the constraint manifold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::full_system::{project_to_constraints, FullState};

/// Draws `u` uniformly on the unit circle, `v` orthogonal to it with a
/// Gaussian speed, and `z`, `w` Gaussian.
#[derive(Debug, Clone)]
pub struct StateSampler {
    rng: ChaCha8Rng,
    velocity: Normal<f64>,
    position: Normal<f64>,
}

impl StateSampler {
    pub fn new(seed: u64, position_scale: f64, velocity_scale: f64) -> Result<Self> {
        if !(position_scale >= 0.0 && velocity_scale >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling scales must be non-negative, got {position_scale} and {velocity_scale}"
            )));
        }
        let bad = |e: rand_distr::NormalError| Error::InvalidArgument(e.to_string());
        Ok(StateSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            velocity: Normal::new(0.0, velocity_scale).map_err(bad)?,
            position: Normal::new(0.0, position_scale).map_err(bad)?,
        })
    }

    pub fn sample(&mut self) -> Result<FullState> {
        let th = self.rng.random_range(0.0..TAU);
        let u = [th.cos(), th.sin()];
        let speed = self.velocity.sample(&mut self.rng);
        let v = [-speed * u[1], speed * u[0]];
        let z = [self.position.sample(&mut self.rng), self.position.sample(&mut self.rng)];
        let w = [self.velocity.sample(&mut self.rng), self.velocity.sample(&mut self.rng)];
        project_to_constraints(&FullState::new(u, v, z, w))
    }

    /// Sample until `accept` holds, giving up after `max_tries` draws.
    pub fn sample_where<F>(&mut self, accept: F, max_tries: usize) -> Result<FullState>
    where
        F: Fn(&FullState) -> bool,
    {
        for _ in 0..max_tries {
            let st = self.sample()?;
            if accept(&st) {
                return Ok(st);
            }
        }
        Err(Error::ConvergenceFailure(format!(
            "no acceptable random state in {max_tries} draws"
        )))
    }
}

/// Squared distances of both particles from the centre.
pub fn squared_radii(st: &FullState) -> (f64, f64) {
    let x = st.x();
    (x[0] * x[0] + x[1] * x[1], st.z[0] * st.z[0] + st.z[1] * st.z[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::full_system::constraints;

    #[test]
    fn samples_are_constrained_and_reproducible() {
        let mut a = StateSampler::new(7, 1.0, 0.5).unwrap();
        let mut b = StateSampler::new(7, 1.0, 0.5).unwrap();
        for _ in 0..20 {
            let s = a.sample().unwrap();
            assert_eq!(s, b.sample().unwrap());
            let (c1, c2) = constraints(&s);
            assert!(c1.abs() < 1e-15 && c2.abs() < 1e-15);
        }
    }

    #[test]
    fn rejection_sampling() {
        let mut a = StateSampler::new(1, 1.5, 0.5).unwrap();
        let s = a
            .sample_where(
                |s| {
                    let (r1, r2) = squared_radii(s);
                    (0.09..=9.0).contains(&r1) && (0.09..=9.0).contains(&r2)
                },
                1000,
            )
            .unwrap();
        let (r1, _) = squared_radii(&s);
        assert!(r1 >= 0.09);
        assert!(StateSampler::new(1, 1.0, -1.0).is_err());
    }
}
