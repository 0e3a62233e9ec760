use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdouble::harness::{run, ExperimentConfig, ExperimentKind};
use qdouble::Error;

#[derive(Parser)]
#[command(name = "qdouble", version, about = "Run quantum-double lattice experiments from a JSON config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write results.csv, results.json and transcript.log.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for trials.
        #[arg(long)]
        workers: Option<usize>,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID_CONFIG: u8 = 2;
const EXIT_CAPACITY: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::Config(_)
        | Error::NotPrime(_)
        | Error::UnsupportedDimension(_)
        | Error::InvalidIndex { .. }
        | Error::DimensionMismatch(_) => EXIT_INVALID_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn print_table(csv: &str) {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    for r in rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(s, &w)| format!("{s:<w$}")).collect();
        println!("{}", cells.join("  ").trim_end());
    }
}

fn main() -> ExitCode {
    let Command::Run { config, out, seed, workers } = Cli::parse().command;
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config.display());
            return ExitCode::from(EXIT_INVALID_CONFIG);
        }
    };
    let result = ExperimentConfig::from_json(&text).and_then(|mut cfg| {
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if workers == Some(0) {
            return Err(Error::Config("--workers must be positive".into()));
        }
        let output = run(&cfg, workers)?;
        output.write_to(&out)?;
        Ok((cfg, output))
    });
    match result {
        Ok((cfg, output)) => {
            print!("{}", output.transcript);
            if cfg.kind == ExperimentKind::SixSpinReport {
                print_table(&output.csv);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
