//! Scenario runner for the afiso experiments: config ingestion, sweeps,
//! CSV artifacts and a `summary.json` run record per run directory.

pub mod config;
pub mod experiments;
pub mod record;

use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use config::ScenarioConfig;
use record::{Outputs, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Mass,
    MsPath,
    Collar,
    Smooth,
    Conformal,
    Profile,
    Centering,
    Pipeline,
    /// Every experiment, one subdirectory each.
    Report,
}

impl Command {
    pub const EXPERIMENTS: [Command; 8] = [
        Command::Mass,
        Command::MsPath,
        Command::Collar,
        Command::Smooth,
        Command::Conformal,
        Command::Profile,
        Command::Centering,
        Command::Pipeline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Mass => "mass",
            Command::MsPath => "ms-path",
            Command::Collar => "collar",
            Command::Smooth => "smooth",
            Command::Conformal => "conformal",
            Command::Profile => "profile",
            Command::Centering => "centering",
            Command::Pipeline => "pipeline",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub deterministic: bool,
    pub threads: Option<usize>,
}

fn experiment(command: Command, cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    match command {
        Command::Mass => experiments::mass(cfg, out),
        Command::MsPath => experiments::ms_path(cfg, out),
        Command::Collar => experiments::collar(cfg, out),
        Command::Smooth => experiments::smooth(cfg, out),
        Command::Conformal => experiments::conformal(cfg, out),
        Command::Profile => experiments::profile(cfg, out),
        Command::Centering => experiments::centering(cfg, out),
        Command::Pipeline => experiments::pipeline(cfg, out),
        Command::Report => unreachable!("report is expanded by run"),
    }
}

/// Runs one subcommand into `dir` and writes `summary.json` there. `report`
/// runs every experiment into its own subdirectory and records all checks.
pub fn run(
    command: Command,
    cfg: &ScenarioConfig,
    dir: &Path,
    opts: &RunOptions,
) -> Result<RunRecord> {
    let diagnostics = cfg.check()?;
    let start = Instant::now();
    let mut out = Outputs::new(dir)?;
    if command == Command::Report {
        for sub in Command::EXPERIMENTS {
            let record = run(sub, cfg, &dir.join(sub.name()), opts)?;
            for mut c in record.checks {
                c.name = format!("{}/{}", sub.name(), c.name);
                out.checks.push(c);
            }
            out.results.insert(
                sub.name().to_string(),
                serde_json::to_value(&record.results)?,
            );
            out.artifacts.extend(
                record
                    .artifacts
                    .iter()
                    .map(|a| format!("{}/{a}", sub.name())),
            );
        }
    } else {
        experiment(command, cfg, &mut out)?;
    }
    let passed = out.checks.iter().all(|c| c.passed);
    let record = RunRecord {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.name().to_string(),
        seed: cfg.seed,
        deterministic: opts.deterministic,
        threads: opts.threads,
        config: cfg.clone(),
        diagnostics,
        results: out.results,
        checks: out.checks,
        artifacts: out.artifacts,
        passed,
        wall_clock_seconds: (!opts.deterministic).then(|| start.elapsed().as_secs_f64()),
    };
    record::write_summary(dir, &record)?;
    Ok(record)
}

/// True for errors caused by the input rather than by a failed computation.
pub fn is_input_error(err: &anyhow::Error) -> bool {
    use afiso_core::Error as E;
    err.chain().any(|e| {
        e.is::<config::InvalidConfig>()
            || e.is::<toml::de::Error>()
            || e.is::<serde_json::Error>()
            || matches!(
                e.downcast_ref::<E>(),
                Some(
                    E::InvalidInput(_)
                        | E::OutOfRange { .. }
                        | E::DeltaTooLarge { .. }
                        | E::ResolutionMismatch { .. }
                )
            )
    })
}
