use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use vortexlab_harness::acceptance::{criteria, run_suite};
use vortexlab_harness::config::{ConfigError, ScenarioConfig, VelocityChoice};
use vortexlab_harness::report::{sweep_report, ReportError};
use vortexlab_harness::runner::{run_scenario, RunOptions};
use vortexlab_harness::scenarios;

const EXIT_INVALID: u8 = 1;
const EXIT_ABORT: u8 = 2;

#[derive(Parser)]
#[command(name = "vortexlab", version, about = "Vortex-blob experiments on concentrated 2D vorticity")]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true, env = "VORTEXLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, or a built-in scenario by name.
    Run {
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// Run single-threaded; output is byte-identical across reruns.
        #[arg(long)]
        serial: bool,
        #[arg(long, value_enum)]
        velocity: Option<VelocityChoice>,
        /// Allow particle counts above the desk-scale budget.
        #[arg(long)]
        allow_large: bool,
    },
    /// Summarize run directories of one sweep.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Built-in scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
    /// Run acceptance criteria: `all` or one criterion name.
    Accept {
        suite: String,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    List,
    /// Print a built-in scenario as JSON.
    Show { name: String },
}

fn load_config(arg: &str) -> Result<ScenarioConfig> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(c) = scenarios::builtin(arg) {
            return Ok(c?);
        }
    }
    Ok(ScenarioConfig::load(path)?)
}

fn execute(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run {
            config,
            out,
            serial,
            velocity,
            allow_large,
        } => {
            let config = load_config(&config)?;
            let opts = RunOptions {
                serial,
                velocity,
                allow_large,
            };
            let runs = run_scenario(&config, &out, opts)?;
            let mut code = 0;
            for (dir, m) in &runs {
                let status = if m.completed() { "completed".to_string() } else { format!("{:?}", m.outcome) };
                println!(
                    "eps = {}: {status}; {} particles, {} steps of {:.3e}, {} records -> {}",
                    m.epsilon,
                    m.particles,
                    m.steps,
                    m.dt,
                    m.records,
                    dir.display()
                );
                if !m.completed() {
                    code = EXIT_ABORT;
                }
            }
            Ok(code)
        }
        Command::Report { dirs, out } => {
            let report = sweep_report(&dirs)?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            for m in &report.members {
                println!(
                    "eps = {}: R{} = {:.4e}, outer mass = {:.4e}, max ratios I {:.3} gap {:.3}, tau = {:.3} (need {:.3})",
                    m.epsilon,
                    m.support_fraction * 100.0,
                    m.support_radius,
                    m.outer_mass,
                    m.max_moment_ratio,
                    m.max_center_ratio,
                    m.confinement.tau_measured,
                    m.confinement.required
                );
            }
            if let Some(f) = report.outer_mass_fit {
                println!("outer mass slope {:.4} (max log residual {:.2e})", f.slope, f.max_residual);
            }
            if let Some(f) = report.support_radius_fit {
                println!("support radius slope {:.4} (max log residual {:.2e})", f.slope, f.max_residual);
            }
            for n in &report.notes {
                println!("note: {n}");
            }
            Ok(0)
        }
        Command::Scenarios { action } => {
            match action {
                ScenarioAction::List => {
                    for c in scenarios::builtin_scenarios() {
                        println!("{:<20} {}", c.name, c.description);
                    }
                }
                ScenarioAction::Show { name } => {
                    let src = scenarios::source(&name).with_context(|| {
                        format!("no built-in scenario `{name}`; try one of {}", scenarios::names().join(", "))
                    })?;
                    print!("{src}");
                }
            }
            Ok(0)
        }
        Command::Accept { suite } => {
            if suite == "list" {
                for c in criteria() {
                    println!("{:<16} {}", c.name, c.title);
                }
                return Ok(0);
            }
            let results = run_suite(&suite, |r| println!("{}", r.line()))?;
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed", results.len() - failed, results.len());
            Ok(if failed == 0 { 0 } else { EXIT_ABORT })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let invalid = e.downcast_ref::<ConfigError>().is_some()
                || matches!(e.downcast_ref::<ReportError>(), Some(ReportError::InsufficientSweep { .. }));
            ExitCode::from(if invalid { EXIT_INVALID } else { EXIT_ABORT })
        }
    }
}
