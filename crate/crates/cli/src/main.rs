//! `lorentz-lab`: command-line front end to the simulation suite.
//!
//! Exit status is 0 on success, 2 when a run finishes but misses its own
//! tolerance check, and 1 on any error.

mod commands;
mod output;
mod pde;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "lorentz-lab",
    version,
    about = "Soft-barrier Lorentz gas: scattering, dynamics, Markov and kinetic limits"
)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct PhysicsArgs {
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub phi0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizonArg {
    Fixed,
    Log,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Deflection angle and cross section for given impact parameters.
    Scatter {
        #[command(flatten)]
        physics: PhysicsArgs,
        /// Use this refractive index n_ε directly instead of (ε, α, φ₀).
        #[arg(long)]
        n_eps: Option<f64>,
        /// Impact parameters in [−1, 1]; random ones are drawn when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Emit an N-row CSV table over evenly spaced ρ ∈ [−1, 1].
        #[arg(long, value_name = "N")]
        table: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Jsonl)]
        format: Format,
    },
    /// Trajectories through random obstacle fields.
    Simulate {
        #[command(flatten)]
        physics: PhysicsArgs,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Run each trajectory for t or for t·|log ε|.
        #[arg(long, value_enum, default_value_t = HorizonArg::Fixed)]
        horizon_mode: HorizonArg,
        /// Include the full event log of each trajectory.
        #[arg(long)]
        events: bool,
        /// Also write the pathology fractions as CSV to this file.
        #[arg(long, value_name = "PATH")]
        table: Option<PathBuf>,
    },
    /// The limiting jump process: collision moments, paths or histograms.
    Markov {
        #[command(flatten)]
        physics: PhysicsArgs,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Divide the collision rate by |log ε|.
        #[arg(long, alias = "renormalized")]
        log_density: bool,
        /// Emit a CSV histogram of the density at time t with this many bins
        /// per spatial axis, starting from the default Gaussian profile.
        #[arg(long)]
        bins_x: Option<usize>,
        #[arg(long, default_value_t = 16)]
        bins_theta: usize,
        /// Side of the periodic histogram box.
        #[arg(long = "L", default_value_t = 8.0)]
        side: f64,
        /// Emit each sampled path as JSONL instead of the moment table.
        #[arg(long)]
        paths: bool,
    },
    /// Diffusion coefficient B̃(ε) and its term decomposition, as CSV.
    Coeff {
        #[command(flatten)]
        physics: PhysicsArgs,
        /// ε values (overrides --epsilon).
        #[arg(long, value_delimiter = ',')]
        eps_list: Vec<f64>,
        /// Exponent γ of the split δ = ε^α/|log ε|^γ; defaults to α/4.
        #[arg(long)]
        gamma: Option<f64>,
        /// Add the remaining decomposition columns and the jump moments.
        #[arg(long)]
        emit_terms: bool,
    },
    /// Green–Kubo D by spectral formula and by simulated autocorrelation.
    Greenkubo {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Spectral kinetic solver.
    Pde(pde::PdeArgs),
    /// Runs a TOML experiment and writes its convergence table.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refuse to run unless this table was produced by the same config,
        /// then report whether the deterministic columns reproduce.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
}

/// How a successful run ended.
pub enum Outcome {
    Done,
    ToleranceMissed,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    lorentz_core::rng::configure_threads()?;
    let seed = cli.seed;
    let s = seed.unwrap_or(0);
    match cli.command {
        Command::Scatter {
            physics,
            n_eps,
            rho,
            samples,
            table,
            format,
        } => commands::scatter(physics, n_eps, rho, samples, table, format, s),
        Command::Simulate {
            physics,
            t,
            samples,
            horizon_mode,
            events,
            table,
        } => commands::simulate(physics, t, samples, horizon_mode, events, table, s),
        Command::Markov {
            physics,
            t,
            samples,
            log_density,
            bins_x,
            bins_theta,
            side,
            paths,
        } => commands::markov(
            commands::MarkovArgs {
                physics,
                t,
                samples,
                log_density,
                bins_x,
                bins_theta,
                side,
                paths,
            },
            s,
        ),
        Command::Coeff {
            physics,
            eps_list,
            gamma,
            emit_terms,
        } => commands::coeff(physics, eps_list, gamma, emit_terms),
        Command::Greenkubo { mu, speed, samples, dt } => commands::greenkubo(mu, speed, samples, dt, s),
        Command::Pde(args) => pde::run(args),
        Command::Experiment { config, out, replay } => commands::experiment(config, out, replay, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ToleranceMissed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
