//! `switchcap`: point evaluations, correlation sweeps and self-validation.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use switchcap::sweep::{self, SweepRow};
use switchcap::validate::run_validate;
use switchcap::{Error, SweepSpec, ValidateOptions};

#[derive(Parser)]
#[command(
    name = "switchcap",
    version,
    about = "Capacity of the two-switch channel with correlated switches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every requested quantity at a single correlation.
    Point(Common),
    /// Evaluate the full rho_grid x quantities x tc_list product.
    Sweep(Common),
    /// Run the self-check suite; exits nonzero if any check fails.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set rho_grid=0:0.1:1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file, or `stdout`.
    #[arg(long, default_value = "stdout")]
    out: String,
    /// Seed; takes precedence over the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    workers: Option<usize>,
}

enum Failure {
    /// Bad input or an evaluation error: exit code 2.
    Error(String),
    /// Completed, but some rows or checks failed: exit code 1.
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(format!("{}: {e}", sweep::error_code(&e)))
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.to_string())
    }
}

fn load_spec(c: &Common) -> Result<SweepSpec, Failure> {
    let (text, source) = match &c.config {
        Some(path) => (
            fs::read_to_string(path).map_err(|e| Failure::Error(format!("{}: {e}", path.display())))?,
            path.display().to_string(),
        ),
        None => (String::new(), "<defaults>".to_string()),
    };
    let mut overrides = c.overrides.clone();
    if let Some(seed) = c.seed {
        overrides.push(format!("seed={seed}"));
    }
    Ok(SweepSpec::parse(&text, &source, &overrides)?)
}

fn write_output(out: &str, body: &[u8]) -> Result<(), Failure> {
    if out == "stdout" || out == "-" {
        let mut stdout = io::stdout().lock();
        stdout.write_all(body)?;
        stdout.flush()?;
    } else {
        fs::write(out, body).map_err(|e| Failure::Error(format!("{out}: {e}")))?;
    }
    Ok(())
}

fn emit_rows(c: &Common, rows: &[SweepRow]) -> Result<(), Failure> {
    write_output(&c.out, sweep::to_csv_string(rows).as_bytes())?;
    let errors = rows.iter().filter(|r| r.is_error()).count();
    if errors > 0 {
        return Err(Failure::Failed(format!("{errors} row(s) could not be evaluated")));
    }
    Ok(())
}

fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Point(c) => emit_rows(c, &sweep::run_point(&load_spec(c)?)?),
        Command::Sweep(c) => emit_rows(c, &sweep::run_sweep(&load_spec(c)?)?),
        Command::Validate(c) => {
            let opts = ValidateOptions {
                seed: c.seed.unwrap_or(0),
                ..ValidateOptions::default()
            };
            let report = run_validate(&opts);
            write_output(&c.out, report.to_string().as_bytes())?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Failed(format!(
                    "{} validation check(s) failed",
                    report.failures()
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Point(c) | Command::Sweep(c) | Command::Validate(c) => c,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.workers {
        pool = pool.num_threads(n.max(1));
    }
    let outcome = match pool.build() {
        Ok(pool) => pool.install(|| run(&cli.command)),
        Err(e) => Err(Failure::Error(format!("cannot start worker pool: {e}"))),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed(msg)) => {
            eprintln!("switchcap: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(msg)) => {
            eprintln!("switchcap: error: {msg}");
            ExitCode::from(2)
        }
    }
}
