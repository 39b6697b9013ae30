//! Random intersection scenarios: one or two connected vehicles per access
//! lane, 40 m to 60 m before the intersection entry.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollplan_core::envmodel::MapError;
use rollplan_core::scenario::{Scenario, ScenarioError, ScenarioKind, ScenarioVehicle};
use rollplan_core::{LaneMap, VehicleId};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Distance range before the intersection entry, metres.
    pub distance: (f64, f64),
    /// Initial speed range as a fraction of the lane limit.
    pub speed_ratio: (f64, f64),
    /// Minimum distance between two vehicles on one lane.
    pub min_gap: f64,
    pub vehicles_per_lane: (usize, usize),
    pub total_vehicles: (usize, usize),
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            distance: (40.0, 60.0),
            speed_ratio: (0.7, 1.0),
            min_gap: 12.0,
            vehicles_per_lane: (1, 2),
            total_vehicles: (3, 6),
            max_attempts: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("map needs at least two access lanes with an intersection entry, found {0}")]
    TooFewAccessLanes(usize),
    #[error("access lane {0} is too short for the sampling window")]
    LaneTooShort(u32),
    #[error("access lane {0} leads to no exit")]
    NoRoute(u32),
    #[error("scenario {index}: no valid configuration after {attempts} attempts")]
    Exhausted { index: usize, attempts: usize },
    #[error("{0}")]
    Map(String),
}

impl From<MapError> for GenerateError {
    fn from(e: MapError) -> Self {
        GenerateError::Map(e.to_string())
    }
}

/// `count` scenarios, deterministic in `seed`. Names are `s<seed>-<index>`.
pub fn generate_scenarios(map: &LaneMap, count: usize, seed: u64) -> Result<Vec<Scenario>, GenerateError> {
    generate_with(map, count, seed, &GeneratorConfig::default())
}

pub fn generate_with(map: &LaneMap, count: usize, seed: u64, cfg: &GeneratorConfig) -> Result<Vec<Scenario>, GenerateError> {
    let access: Vec<_> = map.access_lanes().into_iter().filter(|l| map.entry(*l).is_some()).collect();
    if access.len() < 2 {
        return Err(GenerateError::TooFewAccessLanes(access.len()));
    }
    let mut lanes = Vec::new();
    for &l in &access {
        let entry = map.entry(l).unwrap();
        if entry < cfg.distance.1 {
            return Err(GenerateError::LaneTooShort(l.0));
        }
        let routes = map.routes_from(l);
        if routes.is_empty() {
            return Err(GenerateError::NoRoute(l.0));
        }
        lanes.push((l, entry, map.lane(l).unwrap().speed_limit(), routes));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for index in 0..count {
        let mut found = None;
        for _ in 0..cfg.max_attempts {
            let counts: Vec<usize> = lanes.iter().map(|_| rng.gen_range(cfg.vehicles_per_lane.0..=cfg.vehicles_per_lane.1)).collect();
            let total: usize = counts.iter().sum();
            if !(cfg.total_vehicles.0..=cfg.total_vehicles.1).contains(&total) {
                continue;
            }
            let mut vehicles = Vec::with_capacity(total);
            for ((lane, entry, limit, routes), &n) in lanes.iter().zip(&counts) {
                let d = lane_distances(&mut rng, n, cfg).ok_or(GenerateError::Exhausted { index, attempts: cfg.max_attempts })?;
                for dist in d {
                    vehicles.push(ScenarioVehicle {
                        id: VehicleId(vehicles.len() as u32 + 1),
                        lane: *lane,
                        arc: entry - dist,
                        speed: limit * rng.gen_range(cfg.speed_ratio.0..=cfg.speed_ratio.1),
                        route: routes.choose(&mut rng).unwrap().clone(),
                        route_known: true,
                        controllable: true,
                        spawn_time: 0.0,
                        script: None,
                    });
                }
            }
            let s = Scenario {
                name: format!("s{seed}-{index:03}"),
                map: String::from("four_arm"),
                kind: ScenarioKind::Random,
                seed,
                vehicles,
            };
            match s.validate(map) {
                Ok(()) => {
                    found = Some(s);
                    break;
                }
                Err(ScenarioError::Overlap(..)) => continue,
                Err(e) => return Err(GenerateError::Map(e.to_string())),
            }
        }
        out.push(found.ok_or(GenerateError::Exhausted { index, attempts: cfg.max_attempts })?);
    }
    Ok(out)
}

/// Distances before the entry for `n` vehicles on one lane, nearest first,
/// resampled until neighbours keep the minimum gap.
fn lane_distances(rng: &mut ChaCha8Rng, n: usize, cfg: &GeneratorConfig) -> Option<Vec<f64>> {
    for _ in 0..cfg.max_attempts {
        let mut d: Vec<f64> = (0..n).map(|_| rng.gen_range(cfg.distance.0..=cfg.distance.1)).collect();
        d.sort_by(f64::total_cmp);
        if d.windows(2).all(|w| w[1] - w[0] >= cfg.min_gap) {
            return Some(d);
        }
    }
    None
}
