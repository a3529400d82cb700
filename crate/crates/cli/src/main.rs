//! `hdboot`: run the bootstrap mean test on CSV data, run simulation plans,
//! and report Lindeberg/trace diagnostics.
//!
//! Exit codes: 0 success, 1 partial experiment failure, 2 usage or input error.
//! The test decision is reported in the JSON output, never in the exit code.

mod input;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use hdboot::harness::{run_plan, Cell, ExperimentPlan};
use hdboot::{full_report, run_test, TestConfig, DEFAULT_EPSILON_GRID};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Partial(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Partial(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hdboot", version, about = "Bootstrap test for a high-dimensional mean vector")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test H0: mu = mu0 on a CSV sample.
    Test {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Number of bootstrap replicates.
        #[arg(long = "b", default_value_t = 2000)]
        b: usize,
        #[arg(long)]
        seed: u64,
        /// Hypothesized mean: a CSV file (one row or column) or an inline list `1,2,3`.
        #[arg(long)]
        mu0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment plan.
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the cells as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Write 0 for every wall time so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Lindeberg terms, trace and covariance diagonal of a CSV sample.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated epsilon grid (default 2^-4, ..., 2^4).
        #[arg(long)]
        eps: Option<String>,
        /// Number of leading coordinates for the Lindeberg terms (default: all).
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Serialize)]
struct TestReport {
    n: usize,
    d: usize,
    statistic: f64,
    quantile: f64,
    p_value: f64,
    reject: bool,
    alpha: f64,
    #[serde(rename = "B")]
    b: usize,
    seed: u64,
    mu0: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Test {
            input,
            alpha,
            b,
            seed,
            mu0,
            out,
        } => cmd_test(&input, alpha, b, seed, mu0.as_deref(), out.as_deref()),
        Command::Simulate {
            plan,
            out,
            csv,
            threads,
            no_timing,
        } => cmd_simulate(&plan, &out, csv.as_deref(), threads, no_timing),
        Command::Diagnose { input, eps, l, out } => cmd_diagnose(&input, eps.as_deref(), l, out.as_deref()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: cannot write: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    print!("{text}");
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => Ok(()),
    }
}

fn cmd_test(
    input: &Path,
    alpha: f64,
    b: usize,
    seed: u64,
    mu0: Option<&str>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut config = TestConfig::new(alpha, b, seed).map_err(|e| CliError::Input(e.to_string()))?;
    let sample = input::read_matrix(input)?;
    if let Some(arg) = mu0 {
        let m = input::read_mu0(arg)?;
        if m.len() != sample.d() {
            return Err(CliError::Input(format!(
                "mu0 has {} entries but the data have {} columns",
                m.len(),
                sample.d()
            )));
        }
        config = config.with_mu0(m);
    }
    let result = run_test(&sample, &config).map_err(|e| CliError::Input(e.to_string()))?;
    let report = TestReport {
        n: sample.n(),
        d: sample.d(),
        statistic: result.statistic,
        quantile: result.quantile,
        p_value: result.p_value,
        reject: result.reject,
        alpha,
        b,
        seed,
        mu0: config.mu0_for(sample.d()).map_err(|e| CliError::Input(e.to_string()))?,
    };
    emit(&to_json(&report), out)
}

fn describe(cell: &Cell) -> String {
    let mut line = format!("cell {}: n={} d_n={}", cell.index, cell.n, cell.d_n);
    if let Some(a) = cell.alpha {
        line.push_str(&format!(" alpha={a}"));
    }
    if let Some(e) = cell.epsilon {
        line.push_str(&format!(" eps={e}"));
    }
    match &cell.error {
        Some(err) => line.push_str(&format!(" FAILED: {err}")),
        None => line.push_str(&format!(
            " {:?}={:.6} (se {:.6}) [{:.2}s]",
            cell.metric, cell.value, cell.stderr, cell.wall_time_secs
        )),
    }
    line
}

fn cmd_simulate(
    plan_path: &Path,
    out: &Path,
    csv: Option<&Path>,
    threads: Option<usize>,
    no_timing: bool,
) -> Result<(), CliError> {
    let text = fs::read_to_string(plan_path)
        .map_err(|e| CliError::Input(format!("{}: cannot read: {e}", plan_path.display())))?;
    let plan = ExperimentPlan::from_config_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", plan_path.display())))?;
    let run = || run_plan(&plan, &mut |cell| eprintln!("{}", describe(cell)));
    let report = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Input(format!("--threads: {e}")))?
            .install(run),
        None => run(),
    }
    .map_err(|e| CliError::Input(e.to_string()))?;
    let report = if no_timing { report.without_timing() } else { report };

    let mut json = report.to_json().map_err(|e| CliError::Input(e.to_string()))?;
    json.push('\n');
    write_file(out, json.as_bytes())?;
    if let Some(path) = csv {
        let mut buf = Vec::new();
        report.write_csv(&mut buf).map_err(|e| CliError::Input(e.to_string()))?;
        write_file(path, &buf)?;
    }
    if report.complete {
        Ok(())
    } else {
        let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
        Err(CliError::Partial(format!(
            "{failed} cell(s) failed; partial report written to {}",
            out.display()
        )))
    }
}

fn cmd_diagnose(input: &Path, eps: Option<&str>, l: Option<usize>, out: Option<&Path>) -> Result<(), CliError> {
    let grid = match eps {
        Some(text) => input::parse_list(text).map_err(|e| CliError::Input(format!("--eps: {e}")))?,
        None => DEFAULT_EPSILON_GRID.to_vec(),
    };
    if let Some(bad) = grid.iter().find(|e| **e <= 0.0) {
        return Err(CliError::Input(format!("--eps: values must be > 0 (got {bad})")));
    }
    let sample = input::read_matrix(input)?;
    let l = l.unwrap_or(sample.d());
    if l == 0 || l > sample.d() {
        return Err(CliError::Input(format!(
            "--l {l} is outside 1..={} (number of columns)",
            sample.d()
        )));
    }
    let entries: Vec<(usize, usize)> = (0..l).map(|k| (k, k)).collect();
    let report = full_report(&sample, &grid, l, &entries).map_err(|e| CliError::Input(e.to_string()))?;
    emit(&to_json(&report), out)
}
