mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctmc_bounds::Error;

/// Convergence-rate bounds for finite inhomogeneous continuous-time Markov chains.
#[derive(Debug, Parser)]
#[command(name = "ctmc-bounds", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check rate nonnegativity and the model-kind invariants on a sample grid.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Number of sample points on [0, horizon].
        #[arg(long, default_value_t = ctmc_bounds::model::DEFAULT_VALIDATION_SAMPLES)]
        samples: usize,
    },
    /// Decay rates and envelopes: columns t, beta_star, beta_lower, U, L.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the forward Kolmogorov equations: columns t, p_0..p_S.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial distribution: `delta:k` or a file with one value per line.
        #[arg(long, default_value = "delta:0")]
        init: String,
    },
    /// Compare the weighted distance of two solutions with the envelopes.
    Verify {
        #[command(flatten)]
        common: Common,
        /// First initial distribution: `delta:k` or a file with one value per line.
        #[arg(long)]
        init_a: String,
        /// Second initial distribution.
        #[arg(long, default_value = "delta:0")]
        init_b: String,
    },
    /// Search for weights maximizing the guaranteed decay rate; writes a weights file.
    OptimizeWeights {
        #[command(flatten)]
        common: Common,
        /// cumulative-upper or diagonal; defaults to the shape suited to the model kind.
        #[arg(long)]
        shape: Option<String>,
        /// Objective evaluations per restart.
        #[arg(long, default_value_t = ctmc_bounds::optimize::DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Spectral gap of a time-homogeneous model and its bracket by the decay rates.
    SpectralGap {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Model configuration (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Weights configuration (JSON); defaults to unit weights of the shape suited to the model.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    horizon: f64,
    /// Output grid step. For optimize-weights it sets the objective's time grid instead.
    #[arg(long)]
    grid: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-13)]
    atol: f64,
    /// Quadrature tolerance for the envelope integrals.
    #[arg(long, default_value_t = 1e-10)]
    qtol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Command failures, each mapped to an exit code.
#[derive(Debug)]
enum Failure {
    /// The model or the checked property violates a requirement (exit 1).
    Domain(String),
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Io(_) => 2,
            Failure::Core(e) if e.is_input_error() => 2,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Domain(msg) | Failure::Io(msg) => f.write_str(msg),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Validate { common, samples } => commands::validate(&common, samples),
        Command::Bounds { common } => commands::bounds(&common),
        Command::Simulate { common, init } => commands::simulate(&common, &init),
        Command::Verify { common, init_a, init_b } => commands::verify(&common, &init_a, &init_b),
        Command::OptimizeWeights { common, shape, budget } => {
            commands::optimize(&common, shape.as_deref(), budget)
        }
        Command::SpectralGap { common } => commands::spectral_gap(&common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
