use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nilmag_cli::commands::{self, ScenarioArgs};
use nilmag_cli::output::Format;
use nilmag_cli::{CliResult, Scenario};

/// Magnetic trajectories on 2-step nilpotent Lie groups.
#[derive(Parser)]
#[command(name = "nilmag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Cross-check against the numerical integrator.
    #[arg(long)]
    oracle: bool,
    /// Tolerance of the oracle and residual checks.
    #[arg(long)]
    tol: Option<f64>,
}

impl From<Common> for ScenarioArgs {
    fn from(c: Common) -> Self {
        ScenarioArgs { scenario: c.scenario, out: c.out, format: c.format, oracle: c.oracle, tol: c.tol }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample the trajectory of a scenario.
    Trajectory(Common),
    /// Classify an algebra and a force.
    Classify {
        #[arg(long, conflicts_with = "algebra")]
        scenario: Option<PathBuf>,
        /// Preset such as heisenberg(1) or quaternionic(1)+abelian(2).
        #[arg(long)]
        algebra: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide periodicity of an H3 type-II or H5 type-I trajectory.
    Periodicity(Common),
    /// Construct a periodic H5 orbit of a given energy.
    H5Periodic {
        #[arg(long, allow_hyphen_values = true)]
        mu1: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu2: f64,
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized cross-checks of the closed forms against the integrator.
    Selftest {
        #[arg(long, default_value_t = 20261015)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Trajectory(c) => commands::trajectory(&c.into()),
        Command::Periodicity(c) => commands::periodicity(&c.into()),
        Command::Classify { scenario, algebra, out } => {
            let s = scenario.as_deref().map(Scenario::load).transpose()?;
            commands::classify(s.as_ref(), algebra.as_deref(), out.as_deref())
        }
        Command::H5Periodic { mu1, mu2, energy, out } => commands::h5_periodic(mu1, mu2, energy, out.as_deref()),
        Command::Selftest { seed, trials, out } => commands::selftest(seed, trials, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NILMAG_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nilmag: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
