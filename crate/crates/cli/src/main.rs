//! `chatterlab`: Fuller synthesis, chattering geodesics and the chattering
//! checker from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod check;
mod fuller;
mod geodesic;
mod output;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Domain(#[from] chatterlab::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("output: {0}")]
    Output(String),
    /// A check ran to completion and reported a failure.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use chatterlab::Error as E;
        match self {
            CliError::Domain(E::Parse(_) | E::InvalidInput(_) | E::DimensionMismatch { .. }) => 2,
            CliError::Domain(_) | CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Io(..) | CliError::Output(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "chatterlab", version, about = "Chattering geodesics in polyhedral Finsler structures")]
struct Cli {
    /// Seed for randomized checks.
    #[arg(long, global = true, env = "CHATTERLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fuller problem: mu, simulation, T_F, J_F, fixed horizon.
    #[command(subcommand)]
    Fuller(FullerCmd),
    /// Chattering geodesics in R^4 and on the Carnot group.
    Geodesic(GeodesicArgs),
    /// Bracket tables and the chattering checker.
    #[command(subcommand)]
    Check(CheckCmd),
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {v}"))
    }
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be finite, got {v}"))
    }
}

#[derive(Debug, Args)]
pub struct Outputs {
    /// CSV output path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON output path (stdout if omitted).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StartPoint {
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub y0: f64,
    /// Truncation radius in the homogeneous norm `(x^2 + y^4)^(1/4)`.
    #[arg(long, value_parser = positive, default_value_t = chatterlab::fuller::DEFAULT_EPS)]
    pub eps: f64,
}

#[derive(Debug, Subcommand)]
pub enum FullerCmd {
    /// Print mu and its quartic residual.
    Mu {
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Optimal trajectory to the origin.
    Simulate {
        #[command(flatten)]
        start: StartPoint,
        /// Uniform samples in the CSV in addition to the switch instants.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        out: Outputs,
    },
    /// Time to the origin.
    Tf {
        #[command(flatten)]
        start: StartPoint,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Cost to the origin.
    Jf {
        #[command(flatten)]
        start: StartPoint,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fixed-horizon problem: chatter in, rest, chatter out.
    Finite {
        #[command(flatten)]
        start: StartPoint,
        #[arg(long, value_parser = finite, allow_hyphen_values = true, default_value_t = 0.0)]
        x1: f64,
        #[arg(long, value_parser = finite, allow_hyphen_values = true, default_value_t = 0.0)]
        y1: f64,
        #[arg(long, value_parser = finite, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Also run the bang-bang and collocation oracles.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 12)]
        max_switches: usize,
        #[arg(long, default_value_t = chatterlab::oracle::DEFAULT_STARTS)]
        starts: usize,
        /// Collocation intervals.
        #[arg(long, default_value_t = 2000)]
        nodes: usize,
        #[command(flatten)]
        out: Outputs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeodesicKind {
    R4Subfinsler,
    R4Finsler,
    CarnotSubfinsler,
    CarnotFinsler,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[arg(value_enum)]
    pub kind: GeodesicKind,
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub y0: f64,
    #[arg(long, value_parser = finite, allow_hyphen_values = true, default_value_t = 0.0)]
    pub x1: f64,
    #[arg(long, value_parser = finite, allow_hyphen_values = true, default_value_t = 0.0)]
    pub y1: f64,
    /// Excess of `w1 - w0` over `T_F(x0, y0) + T_F(x1, -y1)`.
    #[arg(long, value_parser = finite, allow_hyphen_values = true, default_value_t = 0.0)]
    pub slack: f64,
    /// Override `z1` (otherwise chosen to make the data admissible).
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub z1: Option<f64>,
    /// Group coordinates `x4, x5` of the start point for `carnot-subfinsler`.
    #[arg(long, value_parser = finite, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lift_x4: f64,
    #[arg(long, value_parser = finite, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lift_x5: f64,
    /// Run the randomized competitor search and length checks.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value_t = 200)]
    pub competitors: usize,
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
    #[command(flatten)]
    pub out: Outputs,
}

#[derive(Debug, Subcommand)]
pub enum CheckCmd {
    /// Verify the declared commutation table exactly.
    Brackets {
        /// `builtin:r4`, `builtin:carnot`, `builtin:demo9` or a TOML file.
        #[arg(long)]
        system: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Search for a Fuller covector at a point.
    Chattering {
        #[arg(long)]
        system: String,
        /// Comma-separated coordinates; `...` repeats the previous value.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fuller(cmd) => fuller::run(cmd, cli.seed),
        Command::Geodesic(args) => geodesic::run(&args, cli.seed),
        Command::Check(cmd) => check::run(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
