use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdiv::scenario::{self, Overrides};

#[derive(Parser)]
#[command(
    version,
    about = "Divisibility certificates and non-Markovianity witnesses for quantum dynamical maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its reports.
    Run {
        scenario: PathBuf,
        /// Output directory (overrides the scenario's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides the scenario's `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Integrator tolerance (overrides `tolerances.integrator`).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// List bundled models and witness kinds.
    ListModels,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            tol,
        } => {
            let overrides = Overrides {
                out,
                seed,
                integrator_tol: tol,
            };
            let code = scenario::run_scenario(&scenario, &overrides);
            ExitCode::from(code as u8)
        }
        Command::ListModels => {
            print!("{}", scenario::list_models());
            ExitCode::SUCCESS
        }
    }
}
