//! Metrics over paired single-shot and cyclic episode logs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::envmodel::{LaneMap, RouteSpec, VehicleId};
use crate::geometry::distance_to_convex;
use crate::math;
use crate::orchestrator::{EpisodeLog, RunMode};

/// A vehicle has entered the intersection once it is this close to the
/// convex hull of the conflict points.
pub const INTERSECTION_MARGIN: f64 = 5.0;

/// Width of one anchor-deviation histogram bin, seconds.
pub const HISTOGRAM_BIN: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrossingOrder {
    pub order: Vec<VehicleId>,
    /// First logged time each ordered vehicle was inside the intersection area.
    pub entries: Vec<(VehicleId, f64)>,
    pub never_entered: Vec<VehicleId>,
}

fn vehicle_ids(log: &EpisodeLog) -> BTreeSet<VehicleId> {
    log.frames.iter().flat_map(|f| f.vehicles.iter().map(|v| v.id)).collect()
}

pub fn crossing_order(log: &EpisodeLog, map: &LaneMap) -> CrossingOrder {
    let hull = map.conflict_hull();
    let mut first: BTreeMap<VehicleId, f64> = BTreeMap::new();
    for f in &log.frames {
        for v in &f.vehicles {
            if !first.contains_key(&v.id) && distance_to_convex(hull, v.pose.position()) <= INTERSECTION_MARGIN {
                first.insert(v.id, f.t);
            }
        }
    }
    let mut entries: Vec<(VehicleId, f64)> = first.into_iter().collect();
    entries.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let never_entered = vehicle_ids(log)
        .into_iter()
        .filter(|id| entries.iter().all(|(e, _)| e != id))
        .collect();
    CrossingOrder { order: entries.iter().map(|e| e.0).collect(), entries, never_entered }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEvaluation {
    pub scenario: String,
    pub vehicles: usize,
    pub collisions_single: usize,
    pub collisions_cyclic: usize,
    pub order_single: CrossingOrder,
    pub order_cyclic: CrossingOrder,
    /// `None` unless both episodes completed.
    pub order_consistent: Option<bool>,
    /// |single − cyclic| of the last absolute anchor time per vehicle; only
    /// for order-consistent scenarios.
    pub deviations: Vec<(VehicleId, f64)>,
    pub failed_single: bool,
    pub failed_cyclic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketStats {
    pub vehicles: usize,
    pub scenarios: usize,
    pub median_speed_single: Option<f64>,
    pub median_speed_cyclic: Option<f64>,
    pub median_abs_accel_single: Option<f64>,
    pub median_abs_accel_cyclic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub scenarios: Vec<ScenarioEvaluation>,
    pub buckets: Vec<BucketStats>,
    pub collisions_single: usize,
    pub collisions_cyclic: usize,
    pub failures_single: usize,
    pub failures_cyclic: usize,
    /// (bin lower edge, count) over all reported deviations.
    pub histogram: Vec<(f64, usize)>,
}

impl EvaluationReport {
    pub fn deviations(&self) -> impl Iterator<Item = f64> + '_ {
        self.scenarios.iter().flat_map(|s| s.deviations.iter().map(|d| d.1))
    }

    pub fn consistent_scenarios(&self) -> usize {
        self.scenarios.iter().filter(|s| s.order_consistent == Some(true)).count()
    }
}

/// One scenario's pair of episodes.
#[derive(Debug, Clone, Copy)]
pub struct EpisodePair<'a> {
    pub single: &'a EpisodeLog,
    pub cyclic: &'a EpisodeLog,
}

fn evaluate(pair: &EpisodePair<'_>, map: &LaneMap) -> ScenarioEvaluation {
    let (s, c) = (pair.single, pair.cyclic);
    let order_single = crossing_order(s, map);
    let order_cyclic = crossing_order(c, map);
    let order_consistent = (s.completed() && c.completed()).then(|| order_single.order == order_cyclic.order);
    let mut deviations = Vec::new();
    if order_consistent == Some(true) {
        let (a, b) = (s.last_anchor_times(), c.last_anchor_times());
        for (id, ta) in &a {
            if let Some(tb) = b.get(id) {
                deviations.push((*id, (ta - tb).abs()));
            }
        }
    }
    ScenarioEvaluation {
        scenario: s.scenario.clone(),
        vehicles: vehicle_ids(s).union(&vehicle_ids(c)).count(),
        collisions_single: s.collisions.len(),
        collisions_cyclic: c.collisions.len(),
        order_single,
        order_cyclic,
        order_consistent,
        deviations,
        failed_single: s.planner_failed(),
        failed_cyclic: c.planner_failed(),
    }
}

fn samples(log: &EpisodeLog) -> impl Iterator<Item = (f64, f64)> + '_ {
    log.frames.iter().flat_map(|f| f.vehicles.iter().map(|v| (v.speed, v.accel.abs())))
}

pub fn compute_metrics(pairs: &[EpisodePair<'_>], map: &LaneMap) -> EvaluationReport {
    let scenarios: Vec<ScenarioEvaluation> = pairs.iter().map(|p| evaluate(p, map)).collect();
    let mut by_count: BTreeMap<usize, [Vec<f64>; 4]> = BTreeMap::new();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (p, e) in pairs.iter().zip(&scenarios) {
        let bucket = by_count.entry(e.vehicles).or_default();
        *counts.entry(e.vehicles).or_default() += 1;
        for (log, offset) in [(p.single, 0), (p.cyclic, 2)] {
            debug_assert_eq!(log.mode, if offset == 0 { RunMode::Single } else { RunMode::Cyclic });
            for (v, a) in samples(log) {
                bucket[offset].push(v);
                bucket[offset + 1].push(a);
            }
        }
    }
    let buckets = by_count
        .into_iter()
        .map(|(n, mut b)| BucketStats {
            vehicles: n,
            scenarios: counts[&n],
            median_speed_single: math::median(&mut b[0]),
            median_abs_accel_single: math::median(&mut b[1]),
            median_speed_cyclic: math::median(&mut b[2]),
            median_abs_accel_cyclic: math::median(&mut b[3]),
        })
        .collect();

    let mut histogram: BTreeMap<u64, usize> = BTreeMap::new();
    for d in scenarios.iter().flat_map(|s| s.deviations.iter().map(|d| d.1)) {
        *histogram.entry(math::floor(d / HISTOGRAM_BIN) as u64).or_default() += 1;
    }
    EvaluationReport {
        collisions_single: scenarios.iter().map(|s| s.collisions_single).sum(),
        collisions_cyclic: scenarios.iter().map(|s| s.collisions_cyclic).sum(),
        failures_single: scenarios.iter().filter(|s| s.failed_single).count(),
        failures_cyclic: scenarios.iter().filter(|s| s.failed_cyclic).count(),
        histogram: histogram.into_iter().map(|(k, n)| (k as f64 * HISTOGRAM_BIN, n)).collect(),
        buckets,
        scenarios,
    }
}

/// Signed positions of two vehicles relative to the conflict point their
/// routes share, per logged frame in which both are present.
pub fn relative_motion(
    log: &EpisodeLog,
    map: &LaneMap,
    a: (VehicleId, &RouteSpec),
    b: (VehicleId, &RouteSpec),
) -> Option<Vec<(f64, f64, f64)>> {
    let ga = map.route_geometry(a.1).ok()?;
    let gb = map.route_geometry(b.1).ok()?;
    let ca = ga.conflicts().iter().find(|c| gb.conflicts().iter().any(|d| d.index == c.index))?;
    let cb = gb.conflicts().iter().find(|d| d.index == ca.index)?;
    Some(
        log.frames
            .iter()
            .filter_map(|f| {
                let pa = f.vehicles.iter().find(|v| v.id == a.0)?;
                let pb = f.vehicles.iter().find(|v| v.id == b.0)?;
                Some((
                    f.t,
                    ga.polyline().project(pa.pose.position()).arc - ca.arc,
                    gb.polyline().project(pb.pose.position()).arc - cb.arc,
                ))
            })
            .collect(),
    )
}

/// Position of the first series when the second reaches zero, linearly
/// interpolated between frames.
pub fn position_when_other_crosses(trace: &[(f64, f64, f64)]) -> Option<f64> {
    trace.windows(2).find_map(|w| {
        let ((_, a0, b0), (_, a1, b1)) = (w[0], w[1]);
        (b0 < 0.0 && b1 >= 0.0).then(|| {
            let f = -b0 / (b1 - b0);
            a0 + f * (a1 - a0)
        })
    })
}
