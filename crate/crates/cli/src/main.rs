use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use afiso::config::{self, Level, ScenarioConfig};
use afiso::{is_input_error, run, Command, RunOptions};

#[derive(Parser)]
#[command(
    version,
    about = "Mass and isoperimetric experiments on asymptotically flat metrics"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Scenario file (TOML, or JSON by extension). Defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Run directory. Defaults to `<output.dir>/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for sweep points.
    #[arg(long)]
    threads: Option<usize>,

    /// Single thread and no wall-clock in the record, so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_input_error(&err) { 2 } else { 1 })
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let (mut cfg, raw) = match &cli.config {
        Some(path) => {
            let (cfg, text) = config::load(path)?;
            (cfg, Some((path, text)))
        }
        None => (ScenarioConfig::default(), None),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    // Errors are reported by `run` together; warnings are shown up front.
    for d in cfg.validate().iter().filter(|d| d.level == Level::Warning) {
        eprintln!("{d}");
    }
    if cli.threads == Some(0) {
        return Err(config::InvalidConfig(vec!["--threads: must be at least 1".into()]).into());
    }
    let threads = if cli.deterministic {
        Some(1)
    } else {
        cli.threads
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }

    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir).join(cli.command.name()));
    let opts = RunOptions {
        deterministic: cli.deterministic,
        threads,
    };
    let record = run(cli.command, &cfg, &dir, &opts)?;
    if let Some((path, text)) = raw {
        let name = match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => "config.json",
            _ => "config.toml",
        };
        std::fs::write(dir.join(name), text)?;
    }

    for c in &record.checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let warnings = record
        .diagnostics
        .iter()
        .filter(|d| d.level == Level::Warning)
        .count();
    println!(
        "{}: {} checks, {} failed, {warnings} warnings; record in {}",
        record.command,
        record.checks.len(),
        record.checks.iter().filter(|c| !c.passed).count(),
        dir.join("summary.json").display()
    );
    Ok(record.passed)
}
