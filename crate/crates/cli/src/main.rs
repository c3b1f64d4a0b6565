use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contour_cli::{acceptance, commands};

/// Contour-dynamics simulator for two-phase tumor growth with a pressure-dependent source.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation; writes trajectory.jsonl and diagnostics.csv to the configured directory.
    Simulate { config: PathBuf },
    /// Tabulate eigenvalues of the linear dispersion matrix into dispersion.csv.
    Dispersion { config: PathBuf },
    /// Run the acceptance suite and print a PASS/FAIL table.
    Validate {
        /// Only list the criteria.
        #[arg(long)]
        list: bool,
    },
    /// Write one SVG frame per trajectory state.
    Render { trajectory: PathBuf, out_dir: PathBuf },
}

fn init_threads() {
    let Ok(v) = std::env::var("CONTOUR_THREADS") else { return };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("CONTOUR_THREADS: {e}");
            }
        }
        _ => eprintln!("CONTOUR_THREADS={v:?} ignored: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let code = match cli.command {
        Command::Simulate { config } => commands::cmd_simulate(&config),
        Command::Dispersion { config } => commands::cmd_dispersion(&config),
        Command::Validate { list } => {
            for c in acceptance::CRITERIA {
                println!("{:>3}  {}", c.id, c.name);
            }
            if list {
                0
            } else {
                println!();
                i32::from(!acceptance::run_all(std::io::stdout()))
            }
        }
        Command::Render { trajectory, out_dir } => commands::cmd_render(&trajectory, &out_dir),
    };
    ExitCode::from(code as u8)
}
