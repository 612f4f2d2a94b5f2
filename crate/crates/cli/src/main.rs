//! `trajbell`: reproducible experiments for the Bell inequality for
//! trajectories.
//!
//! Exit codes: 0 success or violation found, 2 configuration error, 3 no
//! violation found, 4 a numerical or statistical check failed.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trajbell::hv::CheckMode;

use config::{FunctionalMode, LatticeKind, RunConfig, Units};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "trajbell", version, about = "Bell inequality for trajectories: quantum violation and classical models")]
struct Cli {
    /// JSON file overriding the default configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    units: Option<Units>,
    /// Particle mass for SI output, in kg.
    #[arg(long, global = true)]
    si_mass_kg: Option<f64>,
    /// Reference frequency Ω for SI output, in rad/s.
    #[arg(long, global = true)]
    si_omega_rad_s: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PhysicsArgs {
    /// Fock levels per mode in the ansatz.
    #[arg(long)]
    n_sub: Option<usize>,
    /// Fock levels per mode in the working truncation.
    #[arg(long)]
    n_big: Option<usize>,
    /// Time at which the Bell operator is minimized, in Ω⁻¹.
    #[arg(long)]
    target_time: Option<f64>,
    /// Alice's trap frequencies for inputs 0 and 1, in units of Ω.
    #[arg(long, num_args = 2, value_delimiter = ',')]
    alice_omega: Option<Vec<f64>>,
    /// Bob's trap frequencies for inputs 0 and 1, in units of Ω.
    #[arg(long, num_args = 2, value_delimiter = ',')]
    bob_omega: Option<Vec<f64>>,
    /// Skip the n_big / 2·n_big convergence report.
    #[arg(long)]
    no_convergence_check: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimum eigenvector of the Bell operator at the target time.
    FindState {
        #[command(flatten)]
        physics: PhysicsArgs,
    },
    /// Time-resolved Bell parameter of a state written by `find-state`.
    Sweep {
        #[command(flatten)]
        physics: PhysicsArgs,
        /// JSON output of `find-state`.
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        t_start: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Number of grid points.
        #[arg(long)]
        steps: Option<usize>,
        /// Bisection width for interval endpoints.
        #[arg(long)]
        refine_tol: Option<f64>,
    },
    /// Hidden-variable sampling of lattice dynamics against the quantum
    /// prediction.
    HvDemo {
        #[arg(long, value_enum)]
        lattice: Option<LatticeKind>,
        #[arg(long)]
        sites: Option<usize>,
        /// Number of measurement steps.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        total_time: Option<f64>,
        /// Trap frequency of the harmonic lattice.
        #[arg(long)]
        omega: Option<f64>,
        /// Initial site, 0-based.
        #[arg(long)]
        m0: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<CheckMode>,
        /// Negative control: zero one decomposition weight before sampling.
        #[arg(long)]
        corrupt: bool,
    },
    /// Classical bound over random local-realistic trajectory ensembles.
    ClassicalCheck {
        #[arg(long)]
        ensembles: Option<usize>,
        /// Most hidden-variable samples per ensemble.
        #[arg(long)]
        max_samples: Option<usize>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        knots: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, value_enum)]
        functional: Option<FunctionalMode>,
        /// Single ensemble with all four trajectories equal.
        #[arg(long)]
        degenerate: bool,
    },
}

fn parse_mode(s: &str) -> Result<CheckMode, String> {
    match s {
        "auto" => Ok(CheckMode::Auto),
        "joint" => Ok(CheckMode::Joint),
        "marginals" => Ok(CheckMode::Marginals),
        _ => Err(format!("unknown mode {s}; expected auto, joint or marginals")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_physics(config: &mut RunConfig, p: PhysicsArgs) -> Result<(), CliError> {
    set(&mut config.n_sub, p.n_sub);
    set(&mut config.n_big, p.n_big);
    set(&mut config.target_time, p.target_time);
    let pair = |v: Vec<f64>| -> Result<[f64; 2], CliError> {
        v.try_into()
            .map_err(|_| CliError::Config("frequencies come in pairs: input 0, input 1".into()))
    };
    if let Some(v) = p.alice_omega {
        config.strategy.alice = pair(v)?;
    }
    if let Some(v) = p.bob_omega {
        config.strategy.bob = pair(v)?;
    }
    if p.no_convergence_check {
        config.convergence_check = false;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<commands::Output, CliError> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    set(&mut config.units, cli.units);
    set(&mut config.seed, cli.seed);
    set(&mut config.si.mass_kg, cli.si_mass_kg);
    set(&mut config.si.omega_rad_s, cli.si_omega_rad_s);
    match cli.command {
        Command::FindState { physics } => {
            apply_physics(&mut config, physics)?;
            commands::find_state(&config)
        }
        Command::Sweep {
            physics,
            state,
            t_start,
            t_end,
            steps,
            refine_tol,
        } => {
            apply_physics(&mut config, physics)?;
            set(&mut config.sweep.t_start, t_start);
            set(&mut config.sweep.t_end, t_end);
            set(&mut config.sweep.steps, steps);
            set(&mut config.sweep.refine_tol, refine_tol);
            commands::sweep_cmd(&config, &state)
        }
        Command::HvDemo {
            lattice,
            sites,
            steps,
            spacing,
            total_time,
            omega,
            m0,
            samples,
            mode,
            corrupt,
        } => {
            let lc = &mut config.lattice;
            set(&mut lc.kind, lattice);
            set(&mut lc.sites, sites);
            set(&mut lc.steps, steps);
            set(&mut lc.spacing, spacing);
            set(&mut lc.total_time, total_time);
            set(&mut lc.omega, omega);
            set(&mut lc.m0, m0);
            set(&mut lc.samples, samples);
            set(&mut lc.mode, mode);
            lc.corrupt |= corrupt;
            commands::hv_demo(&config)
        }
        Command::ClassicalCheck {
            ensembles,
            max_samples,
            grid_points,
            knots,
            tau,
            functional,
            degenerate,
        } => {
            let cc = &mut config.classical;
            set(&mut cc.ensembles, ensembles);
            set(&mut cc.max_samples, max_samples);
            set(&mut cc.grid_points, grid_points);
            set(&mut cc.knots, knots);
            set(&mut cc.tau, tau);
            set(&mut cc.functional, functional);
            cc.degenerate |= degenerate;
            commands::classical_check(&config)
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn emit(out: Option<&Path>, output: &commands::Output) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, &output.body)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
            if let Some(side) = &output.sidecar {
                let sp = sidecar_path(path);
                std::fs::write(&sp, side).map_err(|e| CliError::Config(format!("cannot write {}: {e}", sp.display())))?;
            }
        }
        None => {
            print!("{}", output.body);
            if output.sidecar.is_some() {
                eprintln!("note: pass --out to also write the JSON sidecar");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let result = run(cli).and_then(|output| emit(out.as_deref(), &output).map(|_| output.exit_code));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
