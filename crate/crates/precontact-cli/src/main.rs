mod compile;
mod report;
mod run;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use crate::report::Report;
use crate::run::{Command, Runner};
use crate::scenario::Scenario;

/// Numerical checks of precontact structures, prequantizations, contact
/// groupoids and A-paths described by a JSON scenario.
#[derive(Debug, Parser)]
#[command(name = "precontact", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file, or the name of a bundled scenario.
    scenario: String,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides every tolerance in the scenario.
    #[arg(long)]
    tol: Option<f64>,
    /// RK4 nodes for paths that do not set their own.
    #[arg(long)]
    nodes: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add wall times to the records. Reports are then not reproducible.
    #[arg(long)]
    timing: bool,
}

const SCENARIO_DIR_VAR: &str = "PRECONTACT_SCENARIO_DIR";

fn locate(arg: &str) -> Option<PathBuf> {
    let given = Path::new(arg);
    if given.is_file() {
        return Some(given.to_path_buf());
    }
    let file = if given.extension().is_some() { arg.to_string() } else { format!("{arg}.json") };
    let mut dirs = Vec::new();
    if let Some(d) = std::env::var_os(SCENARIO_DIR_VAR) {
        dirs.push(PathBuf::from(d));
    }
    dirs.push(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios"));
    dirs.into_iter().map(|d| d.join(&file)).find(|p| p.is_file())
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = locate(&cli.scenario) else {
        return usage_error(format!("scenario `{}` not found", cli.scenario));
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return usage_error(format!("{}: {e}", path.display())),
    };
    let parsed: Scenario = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => return usage_error(format!("{}: {e}", path.display())),
    };
    let mut config = parsed.config.clone();
    if let Some(n) = cli.samples {
        config.samples = n;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(n) = cli.nodes {
        config.rk4_nodes = n;
    }
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            return usage_error("--tol must be positive and finite");
        }
    }
    let description = parsed.description.clone();
    let compiled = match compile::compile(&Scenario { config, ..parsed }) {
        Ok(c) => c,
        Err(e) => return usage_error(format!("{}: {e}", path.display())),
    };

    let records = Runner::new(&compiled, cli.tol, cli.timing).run(cli.command);
    let report = Report::new(&compiled, description, cli.command.name(), cli.tol, records);
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &json) {
                return usage_error(format!("{}: {e}", p.display()));
            }
        }
        None => print!("{json}"),
    }
    for r in report.records.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {}: residual {:e} > {:e}", r.check, r.max_residual, r.threshold);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
