//! `equilibria` and `harmonic` commands.

use serde::Serialize;
use std::path::Path;

use super::config::RunConfig;
use super::output::{fmt_f64, write_csv, write_json};
use super::{CliError, EXIT_OK};
use crate::equilibria::{existence_intervals_gravitational, scan_branch, BranchScan, Interval};
use crate::harmonic::{classify_harmonic, HarmonicAnalysis};
use crate::potential::PotentialKind;

pub const EQUILIBRIA_HEADER: [&str; 13] = [
    "index", "branch", "s3", "s4", "s5", "s6", "s7", "s3_sign", "C1", "C2", "D", "verdict", "residual",
];

#[derive(Serialize)]
struct EquilibriaDocument<'a> {
    config: &'a RunConfig,
    existence_intervals: Option<Vec<Interval>>,
    #[serde(flatten)]
    scan: &'a BranchScan,
}

pub fn cmd_equilibria(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let p = cfg.params;
    let pot = cfg.potential.build().map_err(|e| CliError::Config(e.to_string()))?;
    let grid = cfg.equilibria.grid.values().map_err(|e| CliError::Config(e.to_string()))?;
    let scan = scan_branch(cfg.equilibria.branch, &grid, &p, &pot, cfg.equilibria.threads)?;
    let existence = matches!(pot.kind(), PotentialKind::Gravitational2D)
        .then(|| existence_intervals_gravitational(&p));

    let rows: Vec<Vec<String>> = scan
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![i.to_string(), format!("{:?}", r.branch)];
            row.extend(r.s.to_array().iter().map(|&x| fmt_f64(x)));
            row.push(r.s3_sign.to_string());
            row.extend([r.c1, r.c2, r.discriminant].iter().map(|&x| fmt_f64(x)));
            row.push(format!("{:?}", r.verdict));
            row.push(fmt_f64(r.residual));
            row
        })
        .collect();
    let csv = write_csv(out, "equilibria.csv", &EQUILIBRIA_HEADER, &rows)?;
    let doc = EquilibriaDocument {
        config: cfg,
        existence_intervals: existence,
        scan: &scan,
    };
    let json = write_json(out, "equilibria.json", &doc)?;

    say!(
        "{:?}: {} records, {} diagnostics, {} C2 sign changes",
        scan.branch,
        scan.records.len(),
        scan.diagnostics.len(),
        scan.sign_changes.len()
    );
    for d in &scan.diagnostics {
        say!("  {} = {}: {} ({})", scan.parameter, d.parameter, d.kind, d.message);
    }
    say!("wrote {}\nwrote {}", json.display(), csv.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct HarmonicDocument<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    analysis: &'a HarmonicAnalysis,
}

pub fn cmd_harmonic(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let gamma = match (cfg.harmonic.gamma, cfg.potential.build().ok().and_then(|m| m.gamma())) {
        (Some(g), _) | (None, Some(g)) => g,
        (None, None) => {
            return Err(CliError::Config(
                "harmonic needs gamma (harmonic.gamma or a harmonic potential)".into(),
            ))
        }
    };
    let analysis = classify_harmonic(cfg.harmonic.sigma, gamma, &cfg.params)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let path = write_json(out, "harmonic.json", &HarmonicDocument { config: cfg, analysis: &analysis })?;
    say!("{:?}: {}", analysis.regime, analysis.note);
    say!("wrote {}", path.display());
    Ok(EXIT_OK)
}
