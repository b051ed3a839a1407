//! Argument parsing and the top-level command dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, Resolved, Scenario, ScenarioConfig};
use crate::{RunError, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "ERL_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "erl",
    version,
    about = "Escape rates, localized escape rates and extremal indices for open systems",
    after_help = "A scenario name may be given directly: `erl cantor --n-max 10` is `erl run cantor --n-max 10`."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the scenarios.
    List {
        /// Print the catalog as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario and write results.csv, summary.json and manifest.json.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    scenario: Scenario,
    /// JSON config; command-line values override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
    /// Smallest hole depth of the family.
    #[arg(long)]
    n_min: Option<usize>,
    /// Largest hole depth of the family.
    #[arg(long)]
    n_max: Option<usize>,
    /// Use the cylinders of the periodic point with this repeating word.
    #[arg(long)]
    word: Option<String>,
    /// Cluster window.
    #[arg(long)]
    k: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<u64>,
    /// Monte Carlo horizon.
    #[arg(long)]
    t_max: Option<usize>,
}

/// Inserts `run` before a bare scenario name.
fn normalize(args: Vec<OsString>) -> Vec<OsString> {
    let mut args = args;
    if let Some(first) = args.get(1).and_then(|a| a.to_str()) {
        if Scenario::ALL.iter().any(|s| s.name() == first) {
            args.insert(1, "run".into());
        }
    }
    args
}

pub fn catalog() -> serde_json::Value {
    serde_json::Value::Array(
        Scenario::ALL
            .iter()
            .map(|s| serde_json::json!({"name": s.name(), "topic": s.topic(), "description": s.description()}))
            .collect(),
    )
}

fn configure_threads() -> Result<(), RunError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RunError::Config(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    // A pool built earlier in the same process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn resolve(a: RunArgs) -> Result<(Resolved, bool), RunError> {
    let cfg = match &a.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    let overrides = Overrides {
        seed: a.seed,
        out: a.out,
        n_min: a.n_min,
        n_max: a.n_max,
        word: a.word,
        k: a.k,
        samples: a.samples,
        t_max: a.t_max,
    };
    Ok((Resolved::new(a.scenario, cfg, overrides)?, a.json))
}

fn run_command(a: RunArgs, out: &mut dyn Write) -> Result<u8, RunError> {
    configure_threads()?;
    let (resolved, json) = resolve(a)?;
    let report = crate::run(&resolved)?;
    let io = |e: std::io::Error| RunError::Io(e.to_string());
    if json {
        let text = serde_json::to_string_pretty(&report.summary(resolved.scenario.name())).expect("json value");
        writeln!(out, "{text}").map_err(io)?;
    } else {
        for c in &report.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "[{tag}] {}: {} (target {})", c.name, c.detail, c.target).map_err(io)?;
        }
        writeln!(out, "wrote {}", resolved.out.display()).map_err(io)?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let cli = match Cli::try_parse_from(normalize(args)) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::List { json } => {
            let written = if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&catalog()).expect("json value"))
            } else {
                Scenario::ALL.iter().try_for_each(|s| writeln!(out, "{:<10} {}", s.name(), s.description()))
            };
            written.map(|_| EXIT_OK).map_err(|e| RunError::Io(e.to_string()))
        }
        Command::Run(a) => run_command(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "erl: {e}");
            EXIT_USAGE
        }
    }
}
