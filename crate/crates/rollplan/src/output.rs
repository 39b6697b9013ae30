//! Output directory layout of a batch:
//!
//! ```text
//! <out>/scenarios/<name>.toml
//! <out>/episodes/<name>_<mode>.log     episode log
//! <out>/episodes/<name>_<mode>.mpo     objectives issued during the episode
//! <out>/summary.md, scenarios.csv, deviations.csv, plot_*.csv
//! ```

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rollplan_core::evaluation::EvaluationReport;
use rollplan_core::orchestrator::{EpisodeLog, RunMode};
use rollplan_core::LaneMap;

use crate::experiment::PairedLogs;
use crate::logfile::{mode_name, read_episode, write_episode};
use crate::report::{evaluate, relative_motion_plot, report_files};
use crate::scenariofile::{parse_scenario, scenario_to_toml};

pub fn write_log(dir: &Path, log: &EpisodeLog) -> Result<()> {
    let stem = format!("{}_{}", log.scenario, mode_name(log.mode));
    let (text, mpo) = write_episode(log);
    fs::write(dir.join(format!("{stem}.log")), text)?;
    fs::write(dir.join(format!("{stem}.mpo")), mpo)?;
    Ok(())
}

pub fn read_log(dir: &Path, scenario: &str, mode: RunMode) -> Result<EpisodeLog> {
    let stem = format!("{scenario}_{}", mode_name(mode));
    let log = dir.join(format!("{stem}.log"));
    let text = fs::read_to_string(&log).with_context(|| format!("reading {}", log.display()))?;
    let mpo = fs::read_to_string(dir.join(format!("{stem}.mpo"))).unwrap_or_default();
    read_episode(&text, &mpo).with_context(|| format!("parsing {}", log.display()))
}

/// Writes scenarios, logs and the report; returns the report.
pub fn write_batch(out: &Path, map: &LaneMap, runs: &[PairedLogs]) -> Result<EvaluationReport> {
    let scen_dir = out.join("scenarios");
    let ep_dir = out.join("episodes");
    fs::create_dir_all(&scen_dir)?;
    fs::create_dir_all(&ep_dir)?;
    for r in runs {
        fs::write(scen_dir.join(format!("{}.toml", r.scenario.name)), scenario_to_toml(&r.scenario))?;
        write_log(&ep_dir, &r.single)?;
        write_log(&ep_dir, &r.cyclic)?;
    }
    write_report(out, map, runs)
}

pub fn write_report(out: &Path, map: &LaneMap, runs: &[PairedLogs]) -> Result<EvaluationReport> {
    let report = evaluate(map, runs);
    for (name, text) in report_files(&report) {
        fs::write(out.join(name), text)?;
    }
    for r in runs.iter().filter(|r| r.scenario.kind == rollplan_core::scenario::ScenarioKind::VilScript) {
        for log in [&r.single, &r.cyclic] {
            if let Some((plot, _)) = relative_motion_plot(map, &r.scenario, log) {
                fs::write(out.join(format!("plot_relative_motion_{}_{}.csv", r.scenario.name, mode_name(log.mode))), plot)?;
            }
        }
    }
    Ok(report)
}

/// Reads back every scenario of a batch directory with both its logs.
pub fn load_batch(out: &Path) -> Result<Vec<PairedLogs>> {
    let scen_dir = out.join("scenarios");
    let ep_dir = out.join("episodes");
    let mut names: Vec<_> = fs::read_dir(&scen_dir)
        .with_context(|| format!("reading {}", scen_dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    names.sort();
    if names.is_empty() {
        bail!("no scenarios in {}", scen_dir.display());
    }
    names
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p)?;
            let scenario = parse_scenario(&text).with_context(|| format!("parsing {}", p.display()))?;
            let single = read_log(&ep_dir, &scenario.name, RunMode::Single)?;
            let cyclic = read_log(&ep_dir, &scenario.name, RunMode::Cyclic)?;
            Ok(PairedLogs { scenario, single, cyclic })
        })
        .collect()
}
