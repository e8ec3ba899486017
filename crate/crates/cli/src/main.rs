use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;

mod commands;
mod config;
mod report;

use commands::RunSettings;
use config::{ConfigError, Scenario};
use report::Row;

/// Numerical harness for polyhedral currents, flat norms and transport.
#[derive(Debug, Parser)]
#[command(name = "currentkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario or suite JSON file; defaults to the bundled suite.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV reports and chain files.
    #[arg(long, global = true, default_value = "currentkit-out")]
    out: PathBuf,
    /// Worker threads for running scenarios in parallel.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Seed for generated test forms; overrides the scenario seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every absolute tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Check identities, adjointness, duality and transport for each scenario.
    Verify,
    /// Transport derivative with its finite-difference convergence table.
    Transport,
    /// Exact simplicial flat norm with its optimal decomposition.
    Flatnorm,
    /// Refinement studies: quadrature, continuity modulus, time panels.
    Converge,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Transport => "transport",
            Command::Flatnorm => "flatnorm",
            Command::Converge => "converge",
        }
    }
}

fn incompatibility(cmd: Command, s: &Scenario) -> Option<String> {
    match cmd {
        Command::Transport if s.motion.is_none() => Some(format!("scenario '{}': transport needs a motion", s.name)),
        Command::Flatnorm if s.complex.is_none() => Some(format!(
            "scenario '{}': flatnorm needs a complex (give `complex` or use a builtin chain)",
            s.name
        )),
        _ => None,
    }
}

/// Drops scenarios the command cannot run, with a warning; it is an input
/// error when nothing is left.
fn compatible(cmd: Command, scenarios: Vec<Scenario>) -> Result<Vec<Scenario>, ConfigError> {
    let mut reasons = Vec::new();
    let kept: Vec<Scenario> = scenarios
        .into_iter()
        .filter(|s| match incompatibility(cmd, s) {
            Some(r) => {
                reasons.push(r);
                false
            }
            None => true,
        })
        .collect();
    if kept.is_empty() {
        return Err(ConfigError(reasons.join("; ")));
    }
    for r in reasons {
        warn!("skipped {r}");
    }
    Ok(kept)
}

struct Outcome {
    rows: Vec<Row>,
    elapsed: Duration,
    decomposition: Option<(currentkit::Chain, currentkit::Chain)>,
}

fn run_one(cmd: Command, s: &Scenario, settings: &RunSettings) -> Outcome {
    let start = Instant::now();
    info!("{}: scenario {}", cmd.name(), s.name);
    let (rows, decomposition) = match cmd {
        Command::Verify => (commands::verify(s, settings), None),
        Command::Transport => (commands::transport(s, settings), None),
        Command::Flatnorm => commands::flatnorm(s, settings),
        Command::Converge => (commands::converge(s, settings), None),
    };
    Outcome {
        rows,
        elapsed: start.elapsed(),
        decomposition,
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let scenarios = compatible(cli.command, config::load(cli.config.as_deref())?)?;
    if !(cli.tolerance_scale > 0.0) {
        return Err(ConfigError("--tolerance-scale must be positive".into()).into());
    }
    std::fs::create_dir_all(&cli.out).with_context(|| format!("cannot create {}", cli.out.display()))?;
    let settings = RunSettings {
        seed_override: cli.seed,
        tolerance_scale: cli.tolerance_scale,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.workers.max(1)).build()?;
    // indexed collection keeps the report order independent of scheduling
    let outcomes: Vec<Outcome> = pool.install(|| scenarios.par_iter().map(|s| run_one(cli.command, s, &settings)).collect());

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (s, o) in scenarios.iter().zip(outcomes) {
        if let Some((r, sc)) = &o.decomposition {
            commands::write_decomposition(&cli.out, &s.output_prefix, r, sc)?;
        }
        timings.push((s.name.clone(), o.elapsed));
        rows.extend(o.rows);
    }
    let name = cli.command.name();
    report::write_rows(&cli.out.join(format!("{name}.csv")), &rows)?;
    report::write_timings(&cli.out.join(format!("{name}_timings.csv")), &timings)?;

    let failures: Vec<&Row> = rows.iter().filter(|r| r.status.is_failure()).collect();
    for r in &rows {
        println!("{}", report::describe(r));
    }
    for r in &failures {
        eprintln!("{}", report::describe(r));
    }
    let checks = rows.iter().filter(|r| r.status != report::Status::Info).count();
    println!(
        "{name}: {} scenarios, {checks} checks, {} failed; report in {}",
        scenarios.len(),
        failures.len(),
        cli.out.display()
    );
    if !failures.is_empty() {
        warn!("{} checks failed", failures.len());
    }
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CURRENTKIT_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            // invalid input is distinguished from failed checks
            if e.downcast_ref::<ConfigError>().is_some() || e.downcast_ref::<std::io::Error>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
