//! Command line: `run`, `batch`, `report`, `validate-map`, `export-map`.
//!
//! Exit codes: 0 on success, 1 when a planner failed during an episode,
//! 2 on bad input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rollplan_core::envmodel::FourArmLayout;
use rollplan_core::orchestrator::{run_episode, EpisodeConfig, EpisodeLog, Outcome, RunMode};
use rollplan_core::scenario::Scenario;
use rollplan_core::LaneMap;

use crate::experiment::{initial_rollout, load_policy, rollout_trace, run_batch, PairedLogs, VilPreset};
use crate::generate::generate_scenarios;
use crate::logfile::mode_name;
use crate::mapfile::{map_to_toml, parse_map};
use crate::output::{load_batch, write_batch, write_log, write_report};
use crate::report::relative_motion_plot;
use crate::scenariofile::parse_scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PLANNER_FAILURE: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rollplan", version, about = "Rollout-based intersection planning experiments")]
struct Cli {
    /// Map document; the built-in four-arm intersection when omitted.
    #[arg(long, global = true)]
    map: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Single,
    Cyclic,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        /// Scenario document.
        #[arg(long, conflicts_with = "vil")]
        scenario: Option<PathBuf>,
        /// Scripted crossing preset: `easy` or `late`.
        #[arg(long)]
        vil: Option<String>,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        /// `heuristic` or `gnn:<weights file>`.
        #[arg(long, default_value = "heuristic")]
        policy: String,
        /// Seed of the generated scenario when no scenario is given.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the initial planning run's rollout trace to this directory.
        #[arg(long)]
        dump_rollout: Option<PathBuf>,
    },
    /// Generate scenarios and run each in both modes.
    Batch {
        #[arg(long, default_value_t = 40)]
        scenarios: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "heuristic")]
        policy: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute metrics and plot data from a batch directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a map document.
    ValidateMap { file: PathBuf },
    /// Write the built-in map as a document.
    ExportMap {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Input(anyhow::Error),
    Planner(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn load_map(path: Option<&Path>) -> anyhow::Result<LaneMap> {
    match path {
        None => Ok(FourArmLayout::default().build()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_map(&text).with_context(|| format!("map {}", p.display()))
        }
    }
}

fn describe(log: &EpisodeLog) -> String {
    let outcome = match &log.outcome {
        Outcome::Completed => "completed".to_string(),
        Outcome::Timeout => "timeout".to_string(),
        Outcome::PlannerFailure { time, message } => format!("planner failure at {time:.2} s: {message}"),
    };
    let min = log.min_clearance.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    format!(
        "{} {}: {outcome} after {:.2} s, {} planning runs, {} collisions, min clearance {:.2} m",
        log.scenario,
        mode_name(log.mode),
        log.end_time,
        log.runs.len(),
        log.collisions.len(),
        min
    )
}

fn failures(logs: &[&EpisodeLog]) -> Result<(), Failure> {
    let failed: Vec<String> = logs.iter().filter(|l| l.planner_failed()).map(|l| describe(l)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Planner(failed.join("\n")))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let map_path = cli.map.as_deref();
    match cli.command {
        Command::ValidateMap { file } => {
            let map = load_map(Some(&file))?;
            println!("{}: {} lanes, {} access lanes, {} conflict points", file.display(), map.lanes().len(), map.access_lanes().len(), map.conflicts().len());
            Ok(())
        }
        Command::ExportMap { out } => {
            let text = map_to_toml(&load_map(map_path)?);
            match out {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Run { scenario, vil, mode, policy, seed, out, dump_rollout } => {
            let map = load_map(map_path)?;
            let policy = load_policy(&policy).map_err(anyhow::Error::from)?;
            let scenario: Scenario = match (scenario, vil) {
                (Some(p), _) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    parse_scenario(&text).with_context(|| format!("scenario {}", p.display()))?
                }
                (None, Some(v)) => {
                    let preset = VilPreset::parse(&v).ok_or_else(|| anyhow!("unknown preset `{v}`, expected `easy` or `late`"))?;
                    preset
                        .scenario(&FourArmLayout::default(), &map)
                        .ok_or_else(|| anyhow!("preset `{v}` needs the built-in four-arm map"))?
                }
                (None, None) => generate_scenarios(&map, 1, seed).map_err(anyhow::Error::from)?.remove(0),
            };
            scenario.validate(&map).map_err(|e| anyhow!("scenario {}: {e}", scenario.name))?;
            let cfg = EpisodeConfig::default();
            if let Some(dir) = dump_rollout {
                let r = initial_rollout(&scenario, &map, &policy, &cfg).map_err(Failure::Planner)?;
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join(format!("{}_rollout.csv", scenario.name));
                fs::write(&path, rollout_trace(&r)).with_context(|| format!("writing {}", path.display()))?;
            }
            let modes = match mode {
                ModeArg::Single => vec![RunMode::Single],
                ModeArg::Cyclic => vec![RunMode::Cyclic],
                ModeArg::Both => vec![RunMode::Single, RunMode::Cyclic],
            };
            let logs: Vec<EpisodeLog> = modes.iter().map(|&m| run_episode(&scenario, &map, m, &policy, &cfg, scenario.seed)).collect();
            for log in &logs {
                println!("{}", describe(log));
                if let Some((_, Some(s))) = relative_motion_plot(&map, &scenario, log).filter(|_| scenario.vehicles.len() == 2) {
                    println!("  vehicle 1 at {s:.2} m from the conflict point when vehicle 2 crosses it");
                }
            }
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for log in &logs {
                    write_log(&dir, log)?;
                }
                if let [single, cyclic] = &logs[..] {
                    let pair = PairedLogs { scenario: scenario.clone(), single: single.clone(), cyclic: cyclic.clone() };
                    write_report(&dir, &map, &[pair])?;
                }
            }
            failures(&logs.iter().collect::<Vec<_>>())
        }
        Command::Batch { scenarios, seed, policy, out } => {
            let map = load_map(map_path)?;
            let policy = load_policy(&policy).map_err(anyhow::Error::from)?;
            let set = generate_scenarios(&map, scenarios, seed).map_err(anyhow::Error::from)?;
            let runs = run_batch(&map, &set, &policy, &EpisodeConfig::default());
            let report = write_batch(&out, &map, &runs)?;
            println!(
                "{} scenarios: collisions single {} / cyclic {}, order-consistent {}; report in {}",
                runs.len(),
                report.collisions_single,
                report.collisions_cyclic,
                report.consistent_scenarios(),
                out.display()
            );
            failures(&runs.iter().flat_map(|r| [&r.single, &r.cyclic]).collect::<Vec<_>>())
        }
        Command::Report { out } => {
            let map = load_map(map_path)?;
            let runs = load_batch(&out)?;
            let report = write_report(&out, &map, &runs)?;
            println!(
                "{} scenarios: collisions single {} / cyclic {}, order-consistent {}",
                runs.len(),
                report.collisions_single,
                report.collisions_cyclic,
                report.consistent_scenarios()
            );
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            EXIT_BAD_INPUT
        }
        Err(Failure::Planner(msg)) => {
            eprintln!("planner failure:\n{msg}");
            EXIT_PLANNER_FAILURE
        }
    }
}
