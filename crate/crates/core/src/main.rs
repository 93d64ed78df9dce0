use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sflab::cli::commands::{self, Outcome};
use sflab::cli::config::ExperimentConfig;
use sflab::cli::exit_code;

#[derive(Parser)]
#[command(name = "sflab", version, about = "Partial spectral flow experiments on graphene tubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of H_t on the t grid with valley weights.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Also write lattice.csv and valleys.csv.
        #[arg(long)]
        dump_lattice: bool,
    },
    /// Partial spectral flows along L, L' and the complement.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dump_lattice: bool,
    },
    /// Spectral flows of the truncated Dirac families.
    Dirac {
        #[command(flatten)]
        common: Common,
    },
    /// Distance between the reduced lattice operator and the Dirac operator
    /// under refinement.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Number of geometries, each doubling M and N.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Tameness report for L, L', their sum and complements.
    Tameness {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cmd: Command) -> sflab::Result<Outcome> {
    let load = |c: &Common| ExperimentConfig::load(&c.config);
    match cmd {
        Command::Spectrum { common, dump_lattice } => {
            commands::cmd_spectrum(&load(&common)?, common.out.as_deref(), dump_lattice)
        }
        Command::Flow { common, dump_lattice } => {
            commands::cmd_flow(&load(&common)?, common.out.as_deref(), dump_lattice)
        }
        Command::Dirac { common } => commands::cmd_dirac(&load(&common)?, common.out.as_deref()),
        Command::Convergence { common, levels } => {
            commands::cmd_convergence(&load(&common)?, common.out.as_deref(), levels)
        }
        Command::Tameness { common } => commands::cmd_tameness(&load(&common)?, common.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            println!("{}", out.message);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
