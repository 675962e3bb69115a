//! Command line front end. Every command reads a json job file and writes
//! results.json (plus samples.csv for pvi) into the output directory.
//!
//! Exit codes: 0 all checks inside tolerance, 1 bad input, 2 a computation
//! ran but a checked quantity missed its tolerance or hit a singularity.

mod job;
mod run;

use clap::{Args, Parser, Subcommand};
use job::Failure;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "isotheta",
    version,
    about = "period matrices, theta functions and isomonodromic deformations of hyperelliptic curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct JobArgs {
    /// json job description
    #[arg(long)]
    job: PathBuf,
    /// directory for results.json and samples.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Period matrices of a branch configuration
    Periods(JobArgs),
    /// Theta constants, gradients and identity checks
    Theta(JobArgs),
    /// Residue matrices of the rank two Fuchsian family
    Solve(JobArgs),
    /// Log tau and the Hamiltonians driving it
    Tau(JobArgs),
    /// Transport monodromy around each branch point and compare
    Monodromy(JobArgs),
    /// Sample the sixth Painleve solution over a grid
    Pvi(JobArgs),
    /// Run the seeded self check suites
    Verify(JobArgs),
}

impl Cmd {
    fn split(&self) -> (&'static str, &JobArgs) {
        match self {
            Cmd::Periods(a) => ("periods", a),
            Cmd::Theta(a) => ("theta", a),
            Cmd::Solve(a) => ("solve", a),
            Cmd::Tau(a) => ("tau", a),
            Cmd::Monodromy(a) => ("monodromy", a),
            Cmd::Pvi(a) => ("pvi", a),
            Cmd::Verify(a) => ("verify", a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.split();

    if let Ok(v) = std::env::var("ISOTHETA_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => isotheta::num::set_thread_count(n),
            _ => {
                eprintln!("error: ISOTHETA_THREADS must be a positive integer, got \"{v}\"");
                return ExitCode::from(1);
            }
        }
    }

    let outcome = job::load(&args.job).and_then(|j| run::run(name, &j, &args.out));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed; see results.json");
            ExitCode::from(2)
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("validation failure: {m}");
            ExitCode::from(2)
        }
    }
}
