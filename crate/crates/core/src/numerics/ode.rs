//! Adaptive Dormand-Prince 5(4) integrator.
//!
//! Steps are clipped so that every requested sample time is hit exactly;
//! no interpolation is involved, which keeps samples consistent with an
//! optional post-step projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Unbounded when infinite; written as `null` in JSON.
    #[serde(with = "unbounded")]
    pub max_step: f64,
    pub t_span: (f64, f64),
    pub sample_count: usize,
    pub max_steps: usize,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            t_span: (0.0, 10.0),
            sample_count: 101,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn new(t0: f64, t1: f64, sample_count: usize) -> Self {
        IntegratorConfig {
            t_span: (t0, t1),
            sample_count,
            ..Default::default()
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (t0, t1) = self.t_span;
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "integrator tolerances must be positive".into(),
            ));
        }
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time span must satisfy t0 < t1, got ({t0}, {t1})"
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::InvalidArgument("sample_count must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument("max_step must be positive".into()));
        }
        Ok(())
    }

    /// Equally spaced output times; a single sample sits at `t0`.
    pub fn sample_times(&self) -> Vec<f64> {
        let (t0, t1) = self.t_span;
        let n = self.sample_count;
        if n == 1 {
            return vec![t0];
        }
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(|v| v.as_slice())
    }
}

// Dormand-Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Post-step hook; may modify the accepted state in place.
pub type PostStep<'a> = &'a dyn Fn(&mut [f64]) -> Result<()>;

/// Integrate `y' = f(t, y)` and return samples at `cfg.sample_times()`.
pub fn integrate<F>(
    mut rhs: F,
    y0: &[f64],
    cfg: &IntegratorConfig,
    post_step: Option<PostStep<'_>>,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    cfg.validate()?;
    let n = y0.len();
    let samples = cfg.sample_times();
    let (t0, t1) = cfg.t_span;

    let mut y = y0.to_vec();
    let mut t = t0;
    let mut out = Trajectory {
        times: Vec::with_capacity(samples.len()),
        states: Vec::with_capacity(samples.len()),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    out.times.push(t0);
    out.states.push(y.clone());
    if samples.len() == 1 {
        return Ok(out);
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    rhs(t, &y, &mut k1)?;

    let mut h = initial_step(&y, &k1, cfg);
    let mut next_sample = 1;
    let mut steps = 0usize;

    while next_sample < samples.len() {
        let target = samples[next_sample];
        let remaining = target - t;
        let landing = h >= remaining * (1.0 - 1e-12);
        let h_try = if landing { remaining } else { h };

        let min_step = 1e-14 * t.abs().max(1.0).max(t1.abs());
        if h_try < min_step && !landing {
            return Err(Error::StepSizeUnderflow { t, h: h_try });
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::TooManySteps(cfg.max_steps));
        }

        macro_rules! stage {
            ($k:ident, $c:expr, $( ($a:expr, $kk:ident) ),+ ) => {
                for i in 0..n {
                    tmp[i] = y[i] + h_try * (0.0 $( + $a * $kk[i] )+);
                }
                rhs(t + $c * h_try, &tmp, &mut $k)?;
            };
        }
        stage!(k2, C2, (A21, k1));
        stage!(k3, C3, (A31, k1), (A32, k2));
        stage!(k4, C4, (A41, k1), (A42, k2), (A43, k3));
        stage!(k5, C5, (A51, k1), (A52, k2), (A53, k3), (A54, k4));
        stage!(k6, 1.0, (A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5));
        for i in 0..n {
            y_new[i] = y[i]
                + h_try * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h_try, &y_new, &mut k7)?;

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = h_try
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc).powi(2);
        }
        let err = (err_sq / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            out.rejected_steps += 1;
            h = h_try * MIN_FACTOR;
            continue;
        }

        let factor = if err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };

        if err <= 1.0 {
            t = if landing { target } else { t + h_try };
            y.copy_from_slice(&y_new);
            out.accepted_steps += 1;
            let mut modified = false;
            if let Some(hook) = post_step {
                tmp.copy_from_slice(&y);
                hook(&mut y)?;
                modified = tmp != y;
            }
            if modified {
                rhs(t, &y, &mut k1)?;
            } else {
                std::mem::swap(&mut k1, &mut k7);
            }
            // a landing step may be artificially short; do not let it shrink h
            let grown = h_try * factor;
            h = if landing { h.max(grown) } else { grown }.min(cfg.max_step);
            if landing {
                out.times.push(target);
                out.states.push(y.clone());
                next_sample += 1;
            }
        } else {
            out.rejected_steps += 1;
            h = h_try * factor.min(1.0);
        }
    }
    Ok(out)
}

fn initial_step(y: &[f64], f: &[f64], cfg: &IntegratorConfig) -> f64 {
    let (t0, t1) = cfg.t_span;
    let scale = |v: f64| cfg.abs_tol + cfg.rel_tol * v.abs();
    let n = y.len().max(1) as f64;
    let d0 = (y.iter().map(|v| (v / scale(*v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (y
        .iter()
        .zip(f)
        .map(|(v, d)| (d / scale(*v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(cfg.max_step).min(t1 - t0)
}
