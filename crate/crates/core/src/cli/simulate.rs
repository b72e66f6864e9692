//! `simulate`: integrate the full and/or reduced system.

use serde::Serialize;
use std::path::Path;

use super::config::{Mode, RunConfig};
use super::output::{write_json, write_table};
use super::{CliError, EXIT_OK};
use crate::error::Result;
use crate::full_system::{
    angular_momentum, constraints, dirac_rhs, hamiltonian, project_to_constraints, FullState, Params,
};
use crate::invariants::{eta_map, reduce_constrained};
use crate::numerics::ode::{integrate, IntegratorConfig, Trajectory};
use crate::potential::PotentialModel;
use crate::random::{squared_radii, StateSampler};
use crate::reduced::{first_integral_j, reduced_hamiltonian, reduced_rhs, ReducedState};

pub const FULL_HEADER: [&str; 13] = ["t", "u1", "u2", "v1", "v2", "z1", "z2", "w1", "w2", "c1", "c2", "H", "J"];
pub const REDUCED_HEADER: [&str; 8] = ["t", "s3", "s4", "s5", "s6", "s7", "h", "j"];

/// Integrate the constrained full system from `st`.
pub fn run_full(
    st: &FullState,
    p: &Params,
    pot: &PotentialModel,
    cfg: &IntegratorConfig,
    project: bool,
) -> Result<Trajectory> {
    let hook = |y: &mut [f64]| -> Result<()> {
        let fixed = project_to_constraints(&FullState::from_slice(y)?)?;
        y.copy_from_slice(&fixed.to_array());
        Ok(())
    };
    integrate(
        |_t, y, dy| {
            let f = dirac_rhs(&FullState::from_slice(y)?, p, pot)?;
            dy.copy_from_slice(&f);
            Ok(())
        },
        &st.to_array(),
        cfg,
        if project { Some(&hook) } else { None },
    )
}

/// Integrate the reduced system from `s`.
pub fn run_reduced(
    s: &ReducedState,
    p: &Params,
    pot: &PotentialModel,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate(
        |_t, y, dy| {
            let f = reduced_rhs(&ReducedState::new(y[0], y[1], y[2], y[3], y[4]), p, pot)?;
            dy.copy_from_slice(&f);
            Ok(())
        },
        &s.to_array(),
        cfg,
        None,
    )
}

/// Sup-norm over samples of the reduction of the full trajectory minus the
/// reduced trajectory.
pub fn commutation_error(full: &Trajectory, reduced: &Trajectory) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (yf, yr) in full.states.iter().zip(reduced.states.iter()) {
        let e = eta_map(&FullState::from_slice(yf)?).reduced().to_array();
        for (a, b) in e.iter().zip(yr.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Random constrained state with both particle distances in `[lo, hi]`.
pub fn random_start(cfg: &RunConfig, seed: u64) -> Result<FullState> {
    let s = &cfg.simulate;
    let [lo, hi] = s.radius_range;
    let mut sampler = StateSampler::new(seed, s.position_scale, s.velocity_scale)?;
    sampler.sample_where(
        |st| {
            let (r1, r2) = squared_radii(st);
            let ok = |r: f64| (lo * lo..=hi * hi).contains(&r);
            ok(r1) && ok(r2)
        },
        100_000,
    )
}

#[derive(Debug, Clone, Serialize)]
struct Drift {
    max_constraint: f64,
    hamiltonian: f64,
    angular_momentum: f64,
}

#[derive(Debug, Serialize)]
struct SimulateReport<'a> {
    config: &'a RunConfig,
    initial_state: FullState,
    outputs: Vec<String>,
    full_steps: Option<(usize, usize)>,
    reduced_steps: Option<(usize, usize)>,
    full_drift: Option<Drift>,
    reduced_drift: Option<Drift>,
    commutation_sup_norm: Option<f64>,
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> std::result::Result<i32, CliError> {
    let p = cfg.params;
    let pot = cfg.potential.build().map_err(|e| CliError::Config(e.to_string()))?;
    let st = match cfg.simulate.initial_state {
        Some(st) => st,
        None => random_start(cfg, cfg.seed)?,
    };
    let icfg = &cfg.simulate.integrator;
    let mode = cfg.simulate.mode;
    let mut report = SimulateReport {
        config: cfg,
        initial_state: st,
        outputs: vec![],
        full_steps: None,
        reduced_steps: None,
        full_drift: None,
        reduced_drift: None,
        commutation_sup_norm: None,
    };

    let full = if mode != Mode::Reduced {
        let tr = run_full(&st, &p, &pot, icfg, cfg.simulate.project)?;
        let mut rows = Vec::with_capacity(tr.times.len());
        for (t, y) in tr.times.iter().zip(&tr.states) {
            let s = FullState::from_slice(y)?;
            let (c1, c2) = constraints(&s);
            let mut row = vec![*t];
            row.extend_from_slice(y);
            row.extend([c1, c2, hamiltonian(&s, &p, &pot)?, angular_momentum(&s, &p)]);
            rows.push(row);
        }
        let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
        report.full_drift = Some(Drift {
            max_constraint: rows.iter().map(|r| r[9].abs().max(r[10].abs())).fold(0.0, f64::max),
            hamiltonian: spread(&col(11)),
            angular_momentum: spread(&col(12)),
        });
        report.full_steps = Some((tr.accepted_steps, tr.rejected_steps));
        let path = write_table(out, "full", cfg.format, &FULL_HEADER, &rows)?;
        report.outputs.push(path.display().to_string());
        Some(tr)
    } else {
        None
    };

    let reduced = if mode != Mode::Full {
        let s0 = reduce_constrained(&st)?;
        let tr = run_reduced(&s0, &p, &pot, icfg)?;
        let mut rows = Vec::with_capacity(tr.times.len());
        for (t, y) in tr.times.iter().zip(&tr.states) {
            let s = ReducedState::new(y[0], y[1], y[2], y[3], y[4]);
            let mut row = vec![*t];
            row.extend_from_slice(y);
            row.extend([reduced_hamiltonian(&s, &p, &pot)?, first_integral_j(&s, &p)]);
            rows.push(row);
        }
        let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
        report.reduced_drift = Some(Drift {
            max_constraint: 0.0,
            hamiltonian: spread(&col(6)),
            angular_momentum: spread(&col(7)),
        });
        report.reduced_steps = Some((tr.accepted_steps, tr.rejected_steps));
        let path = write_table(out, "reduced", cfg.format, &REDUCED_HEADER, &rows)?;
        report.outputs.push(path.display().to_string());
        Some(tr)
    } else {
        None
    };

    if let (Some(f), Some(r)) = (&full, &reduced) {
        let e = commutation_error(f, r)?;
        report.commutation_sup_norm = Some(e);
        say!("commutation sup-norm: {e:.3e}");
    }
    let path = write_json(out, "simulate.json", &report)?;
    say!("wrote {}", path.display());
    for o in &report.outputs {
        say!("wrote {o}");
    }
    Ok(EXIT_OK)
}
