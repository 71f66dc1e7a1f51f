//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 when the input is invalid (bad flags,
//! unreadable or malformed files, failed validation), 1 for anything else.
//! Results go to stdout and diagnostics to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use crate::ce_solver::{self, SolverConfig};
use crate::error::{Error, Result};
use crate::harness::{self, Method, ScenarioSpec, SweepKind, SweepSpec};
use crate::model::{self, Scenario};
use crate::parallel::Execution;

pub const THREADS_ENV: &str = "CE_OFFLOAD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ce-offload", version, about = "Cross-entropy task offloading solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario and print its cost breakdown.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        /// Solver settings (JSON); defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the per-iteration trace as CSV (asce only).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Asce)]
        method: MethodArg,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one experiment sweep and write its CSV.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        out: PathBuf,
        /// File name suffix; defaults to a timestamp.
        #[arg(long)]
        tag: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare methods on paired random scenarios.
    Compare {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        tag: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw a concrete scenario from a scenario spec.
    GenScenario {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Asce,
    Bnb,
    Exhaustive,
    Lpr,
    Nomec,
    Fullmec,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Asce => Method::Asce,
            MethodArg::Bnb => Method::Bnb,
            MethodArg::Exhaustive => Method::Exhaustive,
            MethodArg::Lpr => Method::Lpr,
            MethodArg::Nomec => Method::NoMec,
            MethodArg::Fullmec => Method::FullMec,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Convergence,
    Size,
    Lambda,
}

impl From<KindArg> for SweepKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Convergence => SweepKind::Convergence,
            KindArg::Size => SweepKind::Size,
            KindArg::Lambda => SweepKind::Lambda,
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    #[cfg(feature = "parallel")]
    {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn stdout_err(source: std::io::Error) -> Error {
    Error::Write {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn default_tag() -> String {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
        .to_string()
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn override_seeds(spec: &mut SweepSpec, seed: Option<u64>) {
    if let Some(seed) = seed {
        spec.scenario.seed = seed;
        spec.solver.seed = seed;
        for c in &mut spec.configs {
            c.seed = seed;
        }
    }
}

pub fn run<W: Write>(command: Command, out: &mut W) -> Result<()> {
    let exec = Execution::default();
    match command {
        Command::Solve {
            scenario,
            config,
            trace,
            method,
            seed,
        } => {
            let scenario: Scenario = read_json(&scenario)?;
            scenario.check()?;
            let mut config: SolverConfig = match config {
                Some(path) => read_json(&path)?,
                None => SolverConfig::default(),
            };
            if let Some(seed) = seed {
                config.seed = seed;
            }
            config.check()?;
            let method = Method::from(method);
            let (assignment, work) = if method == Method::Asce {
                let result = ce_solver::solve_with(&scenario, &config, exec)?;
                if let Some(path) = &trace {
                    result.write_trace_file(path)?;
                }
                (result.best_assignment, result.samples_drawn)
            } else {
                if trace.is_some() {
                    eprintln!("note: --trace is only written for method asce");
                }
                let o = harness::run_method(method, &scenario, &config, exec)?;
                (o.assignment, o.work)
            };
            let eval = model::Evaluator::new(&scenario)
                .evaluate(&assignment.choices().expect("solvers return feasible placements"));
            writeln!(out, "method: {method}").map_err(stdout_err)?;
            writeln!(out, "objective: {}", model::weighted_objective(&assignment, &scenario)?)
                .map_err(stdout_err)?;
            writeln!(out, "latency: {}", eval.latency).map_err(stdout_err)?;
            writeln!(out, "energy: {}", eval.energy()).map_err(stdout_err)?;
            writeln!(out, "work: {work}").map_err(stdout_err)?;
            writeln!(out, "assignment: {assignment}").map_err(stdout_err)?;
        }
        Command::Sweep {
            spec,
            kind,
            out: dir,
            tag,
            seed,
        } => {
            let mut spec: SweepSpec = read_json(&spec)?;
            override_seeds(&mut spec, seed);
            let kind = SweepKind::from(kind);
            spec.check(kind)?;
            prepare_out_dir(&dir)?;
            let table = match kind {
                SweepKind::Convergence => harness::convergence_table(&harness::run_convergence(
                    &spec.scenario,
                    &spec.configs,
                    exec,
                )?),
                SweepKind::Size => harness::size_table(&harness::run_size_sweep(
                    &spec.scenario,
                    &spec.grid,
                    &spec.methods,
                    &spec.solver,
                    exec,
                )?),
                SweepKind::Lambda => harness::lambda_table(&harness::run_lambda_sweep(
                    &spec.scenario,
                    &spec.caps_values,
                    &spec.solver,
                    exec,
                )?),
                SweepKind::Compare => unreachable!("compare has its own subcommand"),
            };
            let path = harness::output_path(&dir, kind, &tag.unwrap_or_else(default_tag));
            harness::write_csv(&table, &path)?;
            writeln!(out, "wrote {} rows to {}", table.rows.len(), path.display()).map_err(stdout_err)?;
        }
        Command::Compare {
            spec,
            out: dir,
            tag,
            seed,
        } => {
            let mut spec: SweepSpec = read_json(&spec)?;
            override_seeds(&mut spec, seed);
            spec.check(SweepKind::Compare)?;
            prepare_out_dir(&dir)?;
            let rows = harness::compare_methods(&spec.scenario, &spec.methods, &spec.solver, exec)?;
            let table = harness::compare_table(&rows);
            // wall time varies run to run, so it stays out of stdout and the CSV
            eprint!("{}", harness::compare_timing_table(&rows).to_aligned());
            let path = harness::output_path(&dir, SweepKind::Compare, &tag.unwrap_or_else(default_tag));
            harness::write_csv(&table, &path)?;
            write!(out, "{}", table.to_aligned()).map_err(stdout_err)?;
        }
        Command::GenScenario { spec, seed, out: path } => {
            let mut spec: ScenarioSpec = read_json(&spec)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let scenario = harness::generate_scenario(&spec, 0)?;
            write_text(&path, &(scenario.to_json() + "\n"))?;
            writeln!(out, "wrote scenario with {} tasks and {} CAPs to {}", scenario.num_tasks(), scenario.num_caps(), path.display())
                .map_err(stdout_err)?;
        }
    }
    Ok(())
}
