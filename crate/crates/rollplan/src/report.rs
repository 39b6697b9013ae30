//! Report files and plot data for paired single-shot/cyclic runs.

use std::fmt::Write as _;

use rollplan_core::evaluation::{compute_metrics, relative_motion, position_when_other_crosses, EpisodePair, EvaluationReport, HISTOGRAM_BIN};
use rollplan_core::orchestrator::EpisodeLog;
use rollplan_core::scenario::Scenario;
use rollplan_core::LaneMap;

use crate::experiment::PairedLogs;

pub fn evaluate(map: &LaneMap, runs: &[PairedLogs]) -> EvaluationReport {
    let pairs: Vec<EpisodePair<'_>> = runs.iter().map(|r| EpisodePair { single: &r.single, cyclic: &r.cyclic }).collect();
    compute_metrics(&pairs, map)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.6}"))
}

fn ids(v: &[rollplan_core::VehicleId]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

/// Named report files: per-scenario table, deviations, figure data and a
/// summary document.
pub fn report_files(report: &EvaluationReport) -> Vec<(String, String)> {
    let mut scen = String::from(
        "scenario,vehicles,collisions_single,collisions_cyclic,order_single,order_cyclic,order_consistent,failed_single,failed_cyclic\n",
    );
    let mut dev = String::from("scenario,vehicle,deviation_s\n");
    for s in &report.scenarios {
        let consistent = match s.order_consistent {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        writeln!(
            scen,
            "{},{},{},{},{},{},{consistent},{},{}",
            s.scenario,
            s.vehicles,
            s.collisions_single,
            s.collisions_cyclic,
            ids(&s.order_single.order),
            ids(&s.order_cyclic.order),
            s.failed_single as u8,
            s.failed_cyclic as u8
        )
        .unwrap();
        for (id, d) in &s.deviations {
            writeln!(dev, "{},{id},{d:.6}", s.scenario).unwrap();
        }
    }

    let mut hist = String::from("bin_lower_s,bin_upper_s,count\n");
    for (lo, n) in &report.histogram {
        writeln!(hist, "{lo:.2},{:.2},{n}", lo + HISTOGRAM_BIN).unwrap();
    }
    let mut vel = String::from("vehicles,scenarios,median_speed_single,median_speed_cyclic\n");
    let mut acc = String::from("vehicles,scenarios,median_abs_accel_single,median_abs_accel_cyclic\n");
    for b in &report.buckets {
        writeln!(vel, "{},{},{},{}", b.vehicles, b.scenarios, opt(b.median_speed_single), opt(b.median_speed_cyclic)).unwrap();
        writeln!(acc, "{},{},{},{}", b.vehicles, b.scenarios, opt(b.median_abs_accel_single), opt(b.median_abs_accel_cyclic))
            .unwrap();
    }

    vec![
        ("summary.md".to_string(), summary(report)),
        ("scenarios.csv".to_string(), scen),
        ("deviations.csv".to_string(), dev),
        ("plot_deviation_histogram.csv".to_string(), hist),
        ("plot_velocity.csv".to_string(), vel),
        ("plot_acceleration.csv".to_string(), acc),
    ]
}

fn summary(r: &EvaluationReport) -> String {
    let devs: Vec<f64> = r.deviations().collect();
    let within = devs.iter().filter(|d| **d <= 1.5).count();
    let mut o = String::from("# Single-shot vs. cyclic replanning\n\n");
    writeln!(o, "| | single-shot | cyclic |").unwrap();
    writeln!(o, "|---|---|---|").unwrap();
    writeln!(o, "| collision events | {} | {} |", r.collisions_single, r.collisions_cyclic).unwrap();
    writeln!(o, "| planner failures | {} | {} |", r.failures_single, r.failures_cyclic).unwrap();
    writeln!(o).unwrap();
    writeln!(o, "Scenarios: {}, with the same crossing order in both modes: {}.", r.scenarios.len(), r.consistent_scenarios())
        .unwrap();
    if devs.is_empty() {
        writeln!(o, "No anchor deviations (no order-consistent scenario with anchors in both modes).").unwrap();
    } else {
        writeln!(
            o,
            "Anchor time deviations: {} in total, {} ({:.1} %) within 1.5 s, largest {:.3} s.",
            devs.len(),
            within,
            100.0 * within as f64 / devs.len() as f64,
            devs.iter().cloned().fold(0.0, f64::max)
        )
        .unwrap();
    }
    writeln!(o, "\n## By vehicle count\n").unwrap();
    writeln!(o, "| vehicles | scenarios | median speed single | median speed cyclic | median abs accel single | median abs accel cyclic |")
        .unwrap();
    writeln!(o, "|---|---|---|---|---|---|").unwrap();
    for b in &r.buckets {
        let f = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        writeln!(
            o,
            "| {} | {} | {} | {} | {} | {} |",
            b.vehicles,
            b.scenarios,
            f(b.median_speed_single),
            f(b.median_speed_cyclic),
            f(b.median_abs_accel_single),
            f(b.median_abs_accel_cyclic)
        )
        .unwrap();
    }
    o
}

/// Positions of ego (vehicle 1) and object (vehicle 2) relative to their
/// shared conflict point, with the ego position when the object crosses it.
pub fn relative_motion_plot(map: &LaneMap, scenario: &Scenario, log: &EpisodeLog) -> Option<(String, Option<f64>)> {
    let ego = scenario.vehicles.first()?;
    let obj = scenario.vehicles.get(1)?;
    let trace = relative_motion(log, map, (ego.id, &ego.route), (obj.id, &obj.route))?;
    let mut o = String::from("t,s_ego,s_obj\n");
    for (t, a, b) in &trace {
        writeln!(o, "{t:.2},{a:.4},{b:.4}").unwrap();
    }
    Some((o, position_when_other_crosses(&trace)))
}
