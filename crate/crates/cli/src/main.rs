use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magnetworks::driver::{self, resolve_out_dir};
use magnetworks::scenario::{parse_scenario, Scenario};
use magnetworks::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "magnetworks",
    version,
    about = "Optimal traffic flow and relay-node density for dense wireless networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the evolve/solve/derive loop and write CSV output.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory (falls back to the scenario's [output] dir, then MAGNETWORKS_OUT).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Dump fields every K-th snapshot.
        #[arg(long, value_name = "K")]
        stride: Option<usize>,
        /// Print per-snapshot progress to stderr.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Print the resolved scenario, time steps and a memory estimate without running.
    Describe {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    scenario: PathBuf,
    /// Override the number of cells along x (extent is kept).
    #[arg(long, value_name = "N")]
    nx: Option<usize>,
    /// Override the Poisson solver tolerance.
    #[arg(long, value_name = "T")]
    tol: Option<f64>,
}

/// Everything a run needs, after command-line resolution.
struct RunConfig {
    scenario: Scenario,
    out_dir: PathBuf,
    stride: usize,
    verbose: bool,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::NotConverged { .. }
        | Error::Unclosed { .. }
        | Error::Incompatible { .. }
        | Error::Unbalanceable(_)
        | Error::Stability { .. } => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

fn load(common: &Common) -> Result<Scenario, Error> {
    let text = fs::read_to_string(&common.scenario)?;
    let mut scenario = parse_scenario(&text)?;
    if let Some(nx) = common.nx {
        scenario = scenario.with_nx(nx).map_err(|e| match e {
            Error::InvalidGrid(m) => Error::Validation(format!("--nx: {m}")),
            other => other,
        })?;
    }
    if let Some(tol) = common.tol {
        scenario.poisson_tol = tol;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn run(config: RunConfig) -> Result<(), Error> {
    let RunConfig {
        mut scenario,
        out_dir,
        stride,
        verbose,
    } = config;
    scenario.stride = stride;
    let outcome = driver::run(&scenario, &out_dir, stride)?;
    if verbose {
        for (t, n) in outcome.summary.times.iter().zip(&outcome.summary.node_counts) {
            eprintln!("t = {t:.6e}  node_count = {n:.10e}");
        }
    }
    println!(
        "{} snapshots ({} dumped) -> {}",
        outcome.frames,
        outcome.dumped,
        out_dir.display()
    );
    println!(
        "time_integrated_count = {:.16e}",
        outcome.summary.time_integrated_count
    );
    Ok(())
}

fn report(path: &Path, err: &Error) -> ExitCode {
    eprintln!("magnetworks: {}: {err}", path.display());
    ExitCode::from(exit_code(err))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            common,
            out,
            stride,
            verbose,
        } => {
            let scenario = match load(&common) {
                Ok(s) => s,
                Err(e) => return report(&common.scenario, &e),
            };
            let env = std::env::var("MAGNETWORKS_OUT").ok();
            let config = RunConfig {
                out_dir: resolve_out_dir(out.as_deref(), &scenario, env.as_deref()),
                stride: stride.unwrap_or(scenario.stride),
                scenario,
                verbose,
            };
            if config.stride == 0 {
                return report(
                    &common.scenario,
                    &Error::Validation("stride must be >= 1".into()),
                );
            }
            match run(config) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => report(&common.scenario, &e),
            }
        }
        Command::Describe { common } => {
            let described = load(&common).and_then(|s| driver::describe(&s));
            match described {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => report(&common.scenario, &e),
            }
        }
    }
}
