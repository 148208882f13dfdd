//! The `slicenc` command line.
//!
//! Five commands share one scenario document: `catalog` lists the split
//! options, `analyze` bounds every flow of a decision, `optimize` searches
//! for the most profitable decision, `simulate` replays a decision packet
//! by packet and `cashflow` derives the break-even utilisation from a
//! financial statement. Every run yields its artifacts plus a [`RunReport`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

mod commands;
pub mod table;

pub use table::{Format, Table};

#[derive(Debug, Clone, Parser)]
#[command(name = "slicenc", version, about = "Delay bounds, split planning and simulation for sliced RAN transport")]
pub struct Cli {
    /// Scenario document (TOML).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Write artifacts here instead of standard output.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed of the simulator's random streams.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Share granularity of the optimiser.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub grid_step: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    TokenBucket,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Buffers {
    Sized,
    Unlimited,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// List the selectable splits with their capacity and delay needs.
    Catalog {
        /// Partial catalog document merged over the defaults, e.g. a `[radio]` table.
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
    /// Per-flow end-to-end delay bounds of a decision.
    Analyze {
        /// Decision document; defaults to the scenario's `[decision]`.
        #[arg(long)]
        decision: Option<PathBuf>,
    },
    /// Most profitable splits, routes, shares and admissions.
    Optimize {
        /// Give up after this many search nodes and report the incumbent.
        #[arg(long)]
        max_nodes: Option<u64>,
        /// Solve every demand-grid instance with flexible, O1-only and O9-only splits.
        #[arg(long)]
        sweep: bool,
    },
    /// Packet-level simulation of a decision.
    Simulate {
        #[arg(long)]
        decision: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Model::TokenBucket)]
        model: Model,
        /// Simulated seconds of traffic.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[arg(long, value_enum, default_value_t = Buffers::Sized)]
        buffers: Buffers,
        /// Sweep the URLLC admission of this vDU instead of one run.
        #[arg(long)]
        sweep: Option<u32>,
        /// Admission counts for the sweep; ten even steps by default.
        #[arg(long, value_delimiter = ',')]
        counts: Vec<u32>,
        /// Seeds per sweep point, counting up from `--seed`.
        #[arg(long, default_value_t = 1)]
        runs: u64,
    },
    /// Break-even connections, utilisation and revenue ratio from a statement.
    Cashflow {
        /// Statement document (TOML).
        input: PathBuf,
        /// vDUs in the revenue ratio; the scenario's count, else 4.
        #[arg(long)]
        vdus: Option<u32>,
        /// VNFs per vDU in the revenue ratio; the catalog's count by default.
        #[arg(long)]
        vnfs: Option<u32>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Catalog { .. } => "catalog",
            Command::Analyze { .. } => "analyze",
            Command::Optimize { .. } => "optimize",
            Command::Simulate { .. } => "simulate",
            Command::Cashflow { .. } => "cashflow",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

/// One artifact: a file name and its contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    /// Digest of the parsed scenario, independent of key order and layout.
    pub scenario_digest: Option<String>,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
    pub version: String,
    pub exit_code: u8,
}

/// Artifacts of a finished command. A command can fail after producing
/// something worth keeping, such as the incumbent of an exhausted search.
#[derive(Debug)]
pub struct Run {
    pub artifacts: Vec<Artifact>,
    pub report: RunReport,
    pub failure: Option<CliError>,
}

pub(crate) struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub digest: Option<String>,
    pub failure: Option<CliError>,
}

/// Runs the command without touching the file system beyond its inputs.
pub fn execute(cli: &Cli) -> Result<Run, CliError> {
    let start = Instant::now();
    let out = commands::dispatch(cli)?;
    let report = RunReport {
        command: cli.command.name().into(),
        scenario_digest: out.digest,
        outputs: out.artifacts.iter().map(|a| a.name.clone()).collect(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").into(),
        exit_code: out.failure.as_ref().map_or(0, CliError::exit_code),
    };
    Ok(Run { artifacts: out.artifacts, report, failure: out.failure })
}

/// Writes the artifacts and `run_report.json` into `dir`, returning the report
/// with output paths filled in.
pub fn write_artifacts(run: &Run, dir: &Path) -> Result<RunReport, CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Input(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut report = run.report.clone();
    report.outputs.clear();
    for a in &run.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.content).map_err(|e| io(&path, e))?;
        report.outputs.push(path.display().to_string());
    }
    let path = dir.join("run_report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serialises");
    std::fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
    Ok(report)
}
