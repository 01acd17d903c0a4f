//! Pipeline CLI: composable subcommands over the Casimir return-map
//! library, with reproducible run manifests.
//!
//! Exit codes: 0 ok, 2 config error, 3 missing upstream artifact,
//! 4 numeric failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Dependency(String),
    Numeric(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Dependency(m) => write!(f, "dependency error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Dependency(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

macro_rules! numeric_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Numeric(e.to_string())
            }
        }
    )*};
}
numeric_from!(
    lorenz_casimir::flow::FlowError,
    lorenz_casimir::ode::OdeError,
    lorenz_casimir::section::SectionError,
    lorenz_casimir::cusp::CuspError,
    lorenz_casimir::density::DensityError,
    lorenz_casimir::inducing::InducingError,
    lorenz_casimir::pipeline::PipelineError,
    lorenz_casimir::stability::StabilityError
);

impl From<lorenz_casimir::export::ExportError> for CliError {
    fn from(e: lorenz_casimir::export::ExportError) -> Self {
        CliError::Numeric(format!("artifact I/O: {e}"))
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Output directory for artifacts and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker-thread cap for the data-parallel stages.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(
    name = "lorenz-casimir",
    version,
    about = "Casimir-maxima return maps of the Lorenz '63 flow: section extraction, cusp-map fits, invariant densities, statistical stability"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Integrate one orbit of the (possibly perturbed) shifted field and
    /// store it as trajectory.csv.
    Integrate {
        #[command(flatten)]
        common: Common,
        /// Integration horizon in time units.
        #[arg(long, default_value_t = 300.0)]
        t_end: f64,
        /// Initial condition "u1,u2,u3" (defaults to the standard one).
        #[arg(long)]
        ic: Option<String>,
        /// Keep every n-th accepted step in the CSV.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Detect Casimir maxima on a stored trajectory; writes maxima.csv
    /// and pairs.csv.
    ExtractMaxima {
        #[command(flatten)]
        common: Common,
        /// Directory produced by `integrate`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Fit the empirical cusp map from pairs.csv; writes map.json.
    BuildMap {
        #[command(flatten)]
        common: Common,
        /// Directory produced by `extract-maxima`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Recover the local expansion constants of a stored map.
    FitExponents {
        #[command(flatten)]
        common: Common,
        /// Directory containing map.json.
        #[arg(long)]
        input: PathBuf,
    },
    /// Preimage lattice and first-return cylinders of a stored map.
    Lattice {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Uniform-expansion checks of the induced map.
    CheckLemma1 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Expansion margin the chain products are tested against.
        #[arg(long, default_value_t = 1.01)]
        margin: f64,
    },
    /// Invariant-density estimate of a stored map.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// histogram | ulam | pf
        #[arg(long, default_value = "histogram")]
        method: String,
        /// Orbit length for the histogram method.
        #[arg(long, default_value_t = 2_000_000)]
        iters: u64,
        /// Stratified samples per bin for the Ulam method.
        #[arg(long, default_value_t = 64)]
        mc_per_bin: usize,
    },
    /// Fit the closed-form density shape to a stored density.
    FitDensity {
        #[command(flatten)]
        common: Common,
        /// Directory containing density.csv.
        #[arg(long)]
        input: PathBuf,
    },
    /// Return-time statistics of a stored map.
    ReturnTimes {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// i (the inducing interval) or right (the half (x0, 1)).
        #[arg(long, default_value = "i")]
        set: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Reconstruct the global density from the induced one through the
    /// return towers.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Samples for the induced-density histogram.
        #[arg(long, default_value_t = 2_000_000)]
        samples: u64,
    },
    /// Axial-forcing stability sweep with a bootstrap noise floor.
    StabilitySweep {
        #[command(flatten)]
        common: Common,
        /// Decreasing epsilon grid, comma separated.
        #[arg(long, default_value = "0.5,0.25,0.1,0.05")]
        eps: String,
        /// Casimir maxima per sweep point.
        #[arg(long, default_value_t = 40_000)]
        events: usize,
    },
    /// Full pipeline against the published constants; prints a
    /// comparison table.
    ReproducePaper {
        #[command(flatten)]
        common: Common,
        /// Casimir maxima for the run.
        #[arg(long, default_value_t = 100_000)]
        events: usize,
        /// Exit nonzero if any comparison misses its tolerance.
        #[arg(long, default_value_t = false)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Integrate { common, t_end, ic, stride } => {
            commands::integrate(&common, t_end, ic.as_deref(), stride)
        }
        Cmd::ExtractMaxima { common, input } => commands::extract_maxima(&common, &input),
        Cmd::BuildMap { common, input } => commands::build_map(&common, &input),
        Cmd::FitExponents { common, input } => commands::fit_exponents(&common, &input),
        Cmd::Lattice { common, input, depth } => commands::lattice(&common, &input, depth),
        Cmd::CheckLemma1 { common, input, margin } => {
            commands::check_lemma1(&common, &input, margin)
        }
        Cmd::Density { common, input, method, iters, mc_per_bin } => {
            commands::density(&common, &input, &method, iters, mc_per_bin)
        }
        Cmd::FitDensity { common, input } => commands::fit_density(&common, &input),
        Cmd::ReturnTimes { common, input, set, samples } => {
            commands::return_times(&common, &input, &set, samples)
        }
        Cmd::Reconstruct { common, input, samples } => {
            commands::reconstruct(&common, &input, samples)
        }
        Cmd::StabilitySweep { common, eps, events } => {
            commands::stability_sweep(&common, &eps, events)
        }
        Cmd::ReproducePaper { common, events, strict } => {
            commands::reproduce_paper(&common, events, strict)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
