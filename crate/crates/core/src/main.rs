use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use contact_vi::harness::{self, BenchmarkConfig, Command};
use contact_vi::integrators::StepperId;
use contact_vi::Error;

#[derive(Parser)]
#[command(name = "contact-bench", version, about = "Contact variational integrators: simulations, benchmarks and checks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate trajectories and write them as CSV.
    Simulate(Common),
    /// Error study against the closed-form solutions, written as CSV.
    Benchmark(Common),
    /// Contactness check over seeded random states, written as JSON.
    ContactCheck(Common),
    /// Backward error analysis defect slopes, written as JSON.
    Bea(Common),
    /// Global convergence slopes, written as JSON.
    Convergence(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; keys are the snake_case fields of the benchmark config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Damping rate; repeat for several.
    #[arg(long = "alpha", allow_hyphen_values = true)]
    alpha: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long = "t-final", allow_hyphen_values = true)]
    t_final: Option<f64>,
    /// Method id; repeat for several.
    #[arg(long = "method")]
    method: Vec<String>,
}

/// Exit status 1 (inputs) or 2 (numerics) with the message for stderr.
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn load(command: Command, args: &Common) -> Result<BenchmarkConfig, Error> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            BenchmarkConfig::from_json_str(command, &text)?
        }
        None => BenchmarkConfig::defaults(command),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if !args.alpha.is_empty() {
        config.alpha_list = args.alpha.clone();
    }
    if let Some(h) = args.h {
        config.h = h;
    }
    if let Some(t) = args.t_final {
        config.t_final = t;
    }
    if !args.method.is_empty() {
        config.methods = args
            .method
            .iter()
            .map(|m| m.parse::<StepperId>())
            .collect::<Result<_, _>>()?;
    }
    config.validate(command)?;
    Ok(config)
}

fn write_report<T: Serialize>(report: &T, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => harness::emit_json(report, path),
        None => harness::write_json(report, io::stdout().lock()),
    }
}

fn csv_error(out: &Option<PathBuf>, source: csv::Error) -> Error {
    Error::Csv {
        path: out.clone().unwrap_or_else(|| "<stdout>".into()),
        source,
    }
}

fn run(sub: Sub) -> Result<(), Failure> {
    let (command, args) = match sub {
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Benchmark(a) => (Command::Benchmark, a),
        Sub::ContactCheck(a) => (Command::ContactCheck, a),
        Sub::Bea(a) => (Command::Bea, a),
        Sub::Convergence(a) => (Command::Convergence, a),
    };
    let config = load(command, &args).map_err(Failure::from)?;
    let out = &args.out;
    match command {
        Command::Simulate => {
            let records = harness::run_simulate(&config)?;
            match out {
                Some(path) => harness::emit_simulation_csv(&records, path).map_err(Failure::from)?,
                None => harness::write_simulation_csv(&records, io::stdout().lock())
                    .map_err(|e| Failure::from(csv_error(out, e)))?,
            }
        }
        Command::Benchmark => {
            let outcome = harness::run_benchmark(&config);
            match out {
                Some(path) => harness::emit_csv(&outcome.records, path).map_err(Failure::from)?,
                None => harness::write_csv(&outcome.records, io::stdout().lock())
                    .map_err(|e| Failure::from(csv_error(out, e)))?,
            }
            if !outcome.failures.is_empty() {
                for f in &outcome.failures {
                    eprintln!("error: cell {} alpha={}: {}", f.method, f.alpha, f.message);
                }
                let numerical = outcome.failures.iter().any(|f| f.numerical);
                let summary = format!("{} benchmark cell(s) failed", outcome.failures.len());
                return Err(if numerical {
                    Failure::Numerical(summary)
                } else {
                    Failure::Config(summary)
                });
            }
        }
        Command::ContactCheck => write_report(&harness::run_contact_check(&config)?, out).map_err(Failure::from)?,
        Command::Bea => write_report(&harness::run_bea(&config)?, out).map_err(Failure::from)?,
        Command::Convergence => write_report(&harness::run_convergence(&config)?, out).map_err(Failure::from)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
