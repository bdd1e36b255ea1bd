use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cotpath::suite::{self, CoisotropyConfig};
use cotpath::{BivectorField, BoundaryKind, Error, VerificationReport};

/// Verification suites for bivector fields and cotangent paths.
#[derive(Parser)]
#[command(name = "cotpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write the report as JSON to this file.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write per-item rows as CSV to this file.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the Jacobiator of a bivector field and decide whether it is Poisson.
    Jacobi {
        /// Bivector field JSON file.
        pi_file: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Shoot cotangent paths and check that constraint functionals Poisson-commute.
    Coisotropy {
        pi_file: PathBuf,
        #[arg(long, default_value_t = 10)]
        paths: usize,
        #[arg(long, default_value_t = 128)]
        grid_n: usize,
        #[arg(long, default_value_t = BoundaryKind::SemiFree)]
        kind: BoundaryKind,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Probe the tangent cone of cotangent loops for x dx ^ dy at the zero loop.
    Counterexample {
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        #[arg(long, default_value_t = 8)]
        modes: usize,
        #[arg(long, default_value_t = 128)]
        grid_n: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Compare variational gradients against finite differences.
    GradientCheck {
        pi_file: PathBuf,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, default_value_t = BoundaryKind::SemiFree)]
        kind: BoundaryKind,
        #[arg(long, default_value_t = 128)]
        grid_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn load(path: &Path) -> Result<BivectorField, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    BivectorField::from_json_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn run(command: Command) -> Result<bool, Failure> {
    let (report, out): (VerificationReport, Output) = match command {
        Command::Jacobi { pi_file, samples, tol, seed, out } => {
            (suite::jacobi(&load(&pi_file)?, samples, tol, seed)?, out)
        }
        Command::Coisotropy { pi_file, paths, grid_n, kind, tol, seed, out } => {
            let cfg = CoisotropyConfig {
                paths,
                grid_n,
                kind,
                tol,
                ..Default::default()
            };
            (suite::coisotropy(&load(&pi_file)?, &cfg, seed)?, out)
        }
        Command::Counterexample { eps, modes, grid_n, out } => (suite::counterexample(eps, modes, grid_n)?, out),
        Command::GradientCheck { pi_file, trials, kind, grid_n, seed, out } => {
            (suite::gradient_check(&load(&pi_file)?, trials, kind, grid_n, seed)?, out)
        }
    };
    print!("{}", report.to_text());
    if !report.details.is_null() {
        println!("details: {}", report.details);
    }
    if let Some(path) = &out.json {
        write(path, &report.to_json())?;
    }
    if let Some(path) = &out.csv {
        write(path, &report.csv)?;
    }
    Ok(report.overall)
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
