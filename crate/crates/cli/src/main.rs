use std::path::PathBuf;
use std::process::ExitCode;

use banach_cli::report::{merge, summary, write_merged};
use banach_cli::{run, CliError, ExperimentConfig, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "banach", version, about = "Run convex-geometry Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment configuration.
    Run {
        config: PathBuf,
        /// Output directory (defaults to the config's output.dir or ".").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG plot.
        #[arg(long)]
        plot: bool,
        /// Worker threads (falls back to BANACH_THREADS).
        #[arg(long)]
        threads: Option<usize>,
        /// Replace the configured seeds with this one.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
    /// Merge result CSVs and print a markdown summary.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Directory for merged CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, plot, threads, seed_override } => {
            let (cfg, warnings) = ExperimentConfig::load(&config)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let o = run(&cfg, &warnings, &RunOptions { out, plot, threads, seed_override })?;
            let rate = if o.evaluated > 0 { format!("{}/{}", o.passed, o.evaluated) } else { "-".into() };
            println!("{} rows, pass {rate} -> {}", o.rows, o.csv.display());
            Ok(())
        }
        Command::Validate { config } => {
            let (_, warnings) = ExperimentConfig::load(&config)?;
            for w in &warnings {
                println!("warning: {w}");
            }
            println!("ok");
            Ok(())
        }
        Command::Report { csv, out } => {
            let tables = merge(&csv)?;
            if let Some(dir) = out {
                write_merged(&tables, &dir)?;
            }
            print!("{}", summary(&tables));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
