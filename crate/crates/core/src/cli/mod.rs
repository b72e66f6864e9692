//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed check, 2 configuration error,
//! 3 runtime or integration error.

/// `println!` that ignores closed pipes instead of panicking.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

pub mod analysis;
pub mod check;
pub mod config;
pub mod output;
pub mod simulate;

use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::equilibria::Branch;
use crate::error::Error;
pub use config::{Format, Mode, PotentialSpec, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(#[from] Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) | CliError::Io(_) => EXIT_RUNTIME,
        }
    }

    fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "barbell", version, about = "Reduced dynamics and relative equilibria of a planar barbell")]
pub struct Cli {
    /// JSON configuration; every section is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub m1: Option<f64>,
    #[arg(long, global = true)]
    pub m2: Option<f64>,
    /// Potential as inline JSON, e.g. '{"kind":"gravitational"}'.
    #[arg(long, global = true)]
    pub potential: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the full and/or reduced system.
    Simulate {
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        project: bool,
    },
    /// Run the structural verification suites.
    Check {
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, hide = true)]
        corrupt_structure_matrix: bool,
    },
    /// Scan a branch of relative equilibria.
    Equilibria {
        /// radial, equal_distance or equal_mass.
        #[arg(long)]
        branch: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Spectral analysis of the harmonic case.
    Harmonic {
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
    },
}

/// Configuration after applying flag overrides; flags win.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::config)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if cli.m1.is_some() || cli.m2.is_some() {
        let m1 = cli.m1.unwrap_or(cfg.params.m1());
        let m2 = cli.m2.unwrap_or(cfg.params.m2());
        cfg.params = crate::full_system::Params::new(m1, m2).map_err(CliError::config)?;
    }
    if let Some(text) = &cli.potential {
        cfg.potential = serde_json::from_str(text).map_err(|e| CliError::config(format!("--potential: {e}")))?;
    }
    match &cli.command {
        Command::Simulate { mode, t1, samples, project } => {
            let s = &mut cfg.simulate;
            if let Some(m) = mode {
                s.mode = *m;
            }
            if let Some(t1) = t1 {
                s.integrator.t_span.1 = *t1;
            }
            if let Some(n) = samples {
                s.integrator.sample_count = *n;
            }
            s.project |= *project;
        }
        Command::Check { points, corrupt_structure_matrix } => {
            if let Some(n) = points {
                cfg.check.points = *n;
            }
            cfg.check.corrupt_structure_matrix |= *corrupt_structure_matrix;
        }
        Command::Equilibria { branch, threads } => {
            if let Some(b) = branch {
                cfg.equilibria.branch = serde_json::from_value::<Branch>(serde_json::Value::String(b.clone()))
                    .map_err(|e| CliError::config(format!("--branch: {e}")))?;
            }
            if threads.is_some() {
                cfg.equilibria.threads = *threads;
            }
        }
        Command::Harmonic { sigma, gamma } => {
            if let Some(s) = sigma {
                cfg.harmonic.sigma = *s;
            }
            if gamma.is_some() {
                cfg.harmonic.gamma = *gamma;
            }
        }
    }
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// Run a parsed command; returns the process exit code on success.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = effective_config(cli)?;
    prepare_out(&cli.out)?;
    match cli.command {
        Command::Simulate { .. } => simulate::cmd_simulate(&cfg, &cli.out),
        Command::Check { .. } => check::cmd_check(&cfg, &cli.out),
        Command::Equilibria { .. } => analysis::cmd_equilibria(&cfg, &cli.out),
        Command::Harmonic { .. } => analysis::cmd_harmonic(&cfg, &cli.out),
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            use std::io::Write as _;
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
