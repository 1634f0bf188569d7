mod commands;
mod manifest;
mod report;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{run, CliError};

#[derive(Parser, Debug)]
#[command(name = "maxface", version, about = "Balance, singularity prediction and meshing for node-opened maxfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Io {
    /// Configuration JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory; JSON goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SurfaceArgs {
    /// Neck parameter t in (0, 1).
    #[arg(long = "t", default_value_t = 0.05)]
    pub t: f64,
    /// Damped Newton steps on the period and divisor defects.
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
    /// Defect level reported as closed; refinement stops below it.
    #[arg(long = "tol-period", default_value_t = 1e-9)]
    pub tol_period: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Catenoid,
    Chm,
    Dihedral,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a preset configuration.
    Preset {
        family: Family,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Number of planes (dihedral only).
        #[arg(long = "L", default_value_t = 4)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Balance a configuration by Newton's method with two pinned necks.
    Balance {
        #[command(flatten)]
        io: Io,
        #[arg(long = "tol-force", default_value_t = 1e-12)]
        tol_force: f64,
        /// Seed for the optional random perturbation.
        #[arg(long)]
        seed: Option<u64>,
        /// Radius of a random displacement applied to the free necks first.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
    },
    /// Force Jacobian rank, singular values and topology.
    Rigidity {
        #[command(flatten)]
        io: Io,
        #[arg(long = "tol-force", default_value_t = 1e-8)]
        tol_force: f64,
    },
    /// Asymptotic singularity prediction on every waist.
    Predict {
        #[command(flatten)]
        io: Io,
        #[arg(long = "tol-force", default_value_t = 1e-8)]
        tol_force: f64,
    },
    /// Finite-t classification of the governing function on every waist.
    Classify {
        #[command(flatten)]
        io: Io,
        #[arg(long = "t", default_value_t = 0.05)]
        t: f64,
        #[arg(long, default_value_t = 2048)]
        samples: usize,
        #[arg(long = "tol-force", default_value_t = 1e-8)]
        tol_force: f64,
    },
    /// Triangulated surface with singular flags (OBJ, PLY, flag sidecar).
    Mesh {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long = "tol-force", default_value_t = 1e-8)]
        tol_force: f64,
    },
    /// Period and divisor defects on every cycle.
    Defects {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long = "tol-force", default_value_t = 1e-8)]
        tol_force: f64,
    },
    /// Exact evaluation of the two combinatorial identities.
    Identities {
        /// Largest m for the two-index identity; the other runs to 12.
        #[arg(long, default_value_t = 8)]
        m: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structural checks with JSON-path diagnostics.
    Validate {
        #[command(flatten)]
        io: Io,
    },
    /// Per-neck residue amplitudes, predictions and topology.
    Report {
        #[command(flatten)]
        io: Io,
        #[arg(long = "tol-force", default_value_t = 1e-8)]
        tol_force: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("MAXFACE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("maxface: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}
