use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hyperflow_core::cli;

/// Curvature flows of star-shaped hypersurfaces in hyperbolic space.
#[derive(Parser)]
#[command(name = "hyperflow", version)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve the configured shape and write monitors, profile, report and plots.
    RunFlow { config: PathBuf },
    /// Evaluate the configured inequality checks on the configured shape.
    Check { config: PathBuf },
    /// Refinement study of the configured shape.
    Convergence {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![32usize, 64, 128, 256])]
        levels: Vec<usize>,
    },
    /// Run the checks of every config in a directory.
    Corpus { dir: PathBuf },
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { cli::EXIT_CONFIG } else { cli::EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match args.cmd {
        Cmd::RunFlow { config } => cli::cmd_run_flow(&config),
        Cmd::Check { config } => cli::cmd_check(&config),
        Cmd::Convergence { config, levels } => cli::cmd_convergence(&config, &levels),
        Cmd::Corpus { dir } => cli::cmd_corpus(&dir),
    };
    ExitCode::from(code as u8)
}
