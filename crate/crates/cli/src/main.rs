use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gibbs_core::experiment::{list_builtins, load_config, run_experiment, RunOptions};

#[derive(Parser)]
#[command(name = "gibbs-cert", version, about = "Run Gibbs-measure experiments from a config file")]
struct Cli {
    /// Print built-in shifts, potentials, weight families and experiments.
    #[arg(long)]
    list_builtins: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's output path).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed (overrides the config's seed).
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_builtins {
        print!("{}", list_builtins());
        if cli.command.is_none() {
            return ExitCode::SUCCESS;
        }
    }
    let Some(Command::Run { config, out, seed }) = cli.command else {
        eprintln!("nothing to do; try `gibbs-cert run <config>` or `--list-builtins`");
        return ExitCode::from(2);
    };
    let parsed = match load_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return ExitCode::from(2);
        }
    };
    let options = RunOptions {
        out_dir: out,
        seed,
        dry_run: false,
    };
    match run_experiment(&parsed, &options) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if let Some(path) = &outcome.csv_path {
                println!("csv: {}", path.display());
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
