//! `broadwell` command-line front end.
//!
//! Exit statuses: 0 success, 2 inadmissible certificate, 3 no convergence,
//! 4 incompatible data, 5 verification threshold exceeded, 64 bad
//! configuration or arguments, 70 internal or numerical failure, 74 I/O.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use run::{Failure, Options, EXIT_INTERNAL, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "broadwell", version, about = "Planar Broadwell model solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Solve even if the certificate is inadmissible.
    #[arg(long, global = true)]
    force: bool,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Time indices to write as CSV snapshots, e.g. `0,16,32`.
    #[arg(long, global = true, value_delimiter = ',')]
    snapshots: Option<Vec<usize>>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evaluate the a-priori bound certificate.
    Certify,
    /// Run the Picard iteration.
    Solve,
    /// Compare the solver against a reference solution.
    Verify,
    /// Check the compatibility conditions of the data.
    Compat,
}

fn run(cli: Cli) -> run::Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure {
                code: EXIT_USAGE,
                message: "--threads must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                code: EXIT_INTERNAL,
                message: e.to_string(),
            })?;
    }
    let Some(path) = cli.config else {
        return Err(Failure {
            code: EXIT_USAGE,
            message: "--config is required".into(),
        });
    };
    let cfg = RunConfig::load(&path).map_err(|e| {
        let mut f = Failure::from(e);
        // a missing or unreadable config is a usage problem, not an output failure
        f.code = EXIT_USAGE;
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })?;
    let opts = Options {
        out: cli.out,
        force: cli.force,
        snapshots: cli.snapshots,
    };
    match cli.command {
        Command::Certify => run::certify_cmd(&cfg, &opts),
        Command::Solve => run::solve_cmd(&cfg, &opts),
        Command::Verify => run::verify_cmd(&cfg, &opts),
        Command::Compat => run::compat_cmd(&cfg, &opts),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("broadwell: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
