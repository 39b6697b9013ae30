//! Episode set-ups: initial vehicles on lanes, their routes and behavior.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::envmodel::{LaneId, LaneMap, MapError, Pose, RouteSpec, VehicleId};
use crate::execsim::{box_overlap, Behavior, SpawnError, SpeedProfile, WorldState};
use crate::kinematics::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Random,
    /// Ego driven by the stack against a scripted object.
    VilScript,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioVehicle {
    pub id: VehicleId,
    pub lane: LaneId,
    /// Arc position along `lane`.
    pub arc: f64,
    pub speed: f64,
    pub route: RouteSpec,
    pub route_known: bool,
    pub controllable: bool,
    /// Seconds after episode start at which the vehicle appears.
    pub spawn_time: f64,
    /// Speed over time for scripted regular vehicles.
    pub script: Option<SpeedProfile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Reference to the map the scenario was built for.
    pub map: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub vehicles: Vec<ScenarioVehicle>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    Empty,
    DuplicateId(VehicleId),
    UnknownLane { vehicle: VehicleId, lane: LaneId },
    RouteStart { vehicle: VehicleId, lane: LaneId },
    Route { vehicle: VehicleId, error: MapError },
    OutsideLane { vehicle: VehicleId, arc: f64, length: f64 },
    InvalidSpeed(VehicleId),
    InvalidSpawnTime(VehicleId),
    /// Connected vehicles must declare their route and cannot be scripted.
    Behavior(VehicleId),
    Overlap(VehicleId, VehicleId),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Empty => write!(f, "scenario has no vehicles"),
            ScenarioError::DuplicateId(id) => write!(f, "vehicle id {id} is used twice"),
            ScenarioError::UnknownLane { vehicle, lane } => write!(f, "vehicle {vehicle} starts on unknown lane {lane}"),
            ScenarioError::RouteStart { vehicle, lane } => {
                write!(f, "route of vehicle {vehicle} does not start on its lane {lane}")
            }
            ScenarioError::Route { vehicle, error } => write!(f, "vehicle {vehicle}: {error}"),
            ScenarioError::OutsideLane { vehicle, arc, length } => {
                write!(f, "vehicle {vehicle} at {arc:.2} m lies outside its lane of length {length:.2} m")
            }
            ScenarioError::InvalidSpeed(id) => write!(f, "vehicle {id} has an invalid speed"),
            ScenarioError::InvalidSpawnTime(id) => write!(f, "vehicle {id} has an invalid spawn time"),
            ScenarioError::Behavior(id) => {
                write!(f, "vehicle {id}: connected vehicles need a known route and no script")
            }
            ScenarioError::Overlap(a, b) => write!(f, "vehicles {a} and {b} start overlapping"),
        }
    }
}

impl ScenarioVehicle {
    pub fn initial_pose(&self, map: &LaneMap) -> Option<Pose> {
        let line = map.lane(self.lane)?.centerline();
        let p = line.point_at(self.arc);
        Some(Pose::new(p.x, p.y, line.heading_at(self.arc)))
    }

    pub fn behavior(&self) -> Behavior {
        match (&self.script, self.controllable) {
            (_, true) => Behavior::Automated(None),
            (Some(p), false) => Behavior::Scripted(p.clone()),
            (None, false) => Behavior::Heuristic { command: 0.0 },
        }
    }

    /// Adds the vehicle to the world at its initial pose.
    pub fn spawn(&self, world: &mut WorldState, map: &LaneMap) -> Result<(), SpawnError> {
        let pose = self.initial_pose(map).ok_or(SpawnError::Route(MapError::UnknownLane(self.lane)))?;
        world.spawn(
            map,
            self.id,
            pose,
            self.speed,
            self.route.clone(),
            self.route_known,
            self.controllable,
            self.behavior(),
        )
    }
}

impl Scenario {
    pub fn validate(&self, map: &LaneMap) -> Result<(), ScenarioError> {
        if self.vehicles.is_empty() {
            return Err(ScenarioError::Empty);
        }
        let mut poses = Vec::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            if self.vehicles[..i].iter().any(|o| o.id == v.id) {
                return Err(ScenarioError::DuplicateId(v.id));
            }
            let lane = map
                .lane(v.lane)
                .ok_or(ScenarioError::UnknownLane { vehicle: v.id, lane: v.lane })?;
            if v.route.first() != v.lane {
                return Err(ScenarioError::RouteStart { vehicle: v.id, lane: v.lane });
            }
            map.validate_route(&v.route)
                .map_err(|error| ScenarioError::Route { vehicle: v.id, error })?;
            if !(v.arc >= 0.0 && v.arc <= lane.length()) {
                return Err(ScenarioError::OutsideLane { vehicle: v.id, arc: v.arc, length: lane.length() });
            }
            if !(v.speed.is_finite() && v.speed >= 0.0) {
                return Err(ScenarioError::InvalidSpeed(v.id));
            }
            if !(v.spawn_time.is_finite() && v.spawn_time >= 0.0) {
                return Err(ScenarioError::InvalidSpawnTime(v.id));
            }
            if v.controllable && (!v.route_known || v.script.is_some()) {
                return Err(ScenarioError::Behavior(v.id));
            }
            if v.spawn_time == 0.0 {
                poses.push((v.id, v.initial_pose(map).unwrap()));
            }
        }
        let params = VehicleParams::default();
        for i in 0..poses.len() {
            for j in i + 1..poses.len() {
                if box_overlap(&poses[i].1, &poses[j].1, &params).is_some() {
                    return Err(ScenarioError::Overlap(poses[i].0, poses[j].0));
                }
            }
        }
        Ok(())
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }
}

/// Lane and lane-local arc of the point `s` metres from the route's shared
/// conflict with `other` (negative before it). `None` if the routes do not
/// share a conflict or the point is off the route.
pub fn position_relative_to_conflict(map: &LaneMap, route: &RouteSpec, other: &RouteSpec, s: f64) -> Option<(LaneId, f64)> {
    let g = map.route_geometry(route).ok()?;
    let h = map.route_geometry(other).ok()?;
    let arc = g
        .conflicts()
        .iter()
        .find(|c| h.conflicts().iter().any(|d| d.index == c.index))?
        .arc;
    let at = arc + s;
    if at < 0.0 || at > g.length() {
        return None;
    }
    let i = g.lane_index_at(at);
    Some((route.lanes()[i], at - g.lane_starts()[i]))
}

/// Crossing set-up: a connected ego and a scripted regular object at
/// constant speed, both placed relative to their shared conflict point.
pub fn vil_crossing(
    map: &LaneMap,
    ego_route: RouteSpec,
    object_route: RouteSpec,
    ego: (f64, f64),
    object: (f64, f64),
) -> Option<Scenario> {
    let (ego_lane, ego_arc) = position_relative_to_conflict(map, &ego_route, &object_route, ego.0)?;
    let (obj_lane, obj_arc) = position_relative_to_conflict(map, &object_route, &ego_route, object.0)?;
    let ego_route = ego_route.trimmed(ego_route.lanes().iter().position(|&l| l == ego_lane)?);
    let object_route = object_route.trimmed(object_route.lanes().iter().position(|&l| l == obj_lane)?);
    Some(Scenario {
        name: String::from("vil"),
        map: String::from("default"),
        kind: ScenarioKind::VilScript,
        seed: 0,
        vehicles: alloc::vec![
            ScenarioVehicle {
                id: VehicleId(1),
                lane: ego_lane,
                arc: ego_arc,
                speed: ego.1,
                route: ego_route,
                route_known: true,
                controllable: true,
                spawn_time: 0.0,
                script: None,
            },
            ScenarioVehicle {
                id: VehicleId(2),
                lane: obj_lane,
                arc: obj_arc,
                speed: object.1,
                route: object_route,
                route_known: true,
                controllable: false,
                spawn_time: 0.0,
                script: Some(SpeedProfile::constant(object.1)),
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envmodel::{Arm, FourArmLayout};

    #[test]
    fn vil_preset_places_vehicles_relative_to_the_conflict() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let (w, s) = (layout.straight_route(Arm::West), layout.straight_route(Arm::South));
        let sc = vil_crossing(&map, w.clone(), s.clone(), (-75.0, 10.0), (-75.0, 10.0)).unwrap();
        sc.validate(&map).unwrap();
        let ego = &sc.vehicles[0];
        let g = map.route_geometry(&w).unwrap();
        let pose = ego.initial_pose(&map).unwrap();
        let pr = g.polyline().project(pose.position());
        let conflict = map.conflict_position(g.conflicts().iter().find(|c| c.other_lane == layout.connector(Arm::South, Arm::North)).unwrap().index);
        assert!((pr.arc + 75.0 - g.polyline().project(conflict).arc).abs() < 1e-9);
        assert!(vil_crossing(&map, w, s, (-500.0, 10.0), (-75.0, 10.0)).is_none());
    }

    #[test]
    fn validation_rejects_bad_set_ups() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let (w, s) = (layout.straight_route(Arm::West), layout.straight_route(Arm::South));
        let sc = vil_crossing(&map, w, s, (-75.0, 10.0), (-75.0, 10.0)).unwrap();
        let mut dup = sc.clone();
        dup.vehicles[1].id = VehicleId(1);
        assert_eq!(dup.validate(&map), Err(ScenarioError::DuplicateId(VehicleId(1))));
        let mut overlap = sc.clone();
        overlap.vehicles[1] = ScenarioVehicle { id: VehicleId(2), ..sc.vehicles[0].clone() };
        overlap.vehicles[1].arc += 3.0;
        assert_eq!(overlap.validate(&map), Err(ScenarioError::Overlap(VehicleId(1), VehicleId(2))));
        let mut far = sc.clone();
        far.vehicles[0].arc = 1e3;
        assert!(matches!(far.validate(&map), Err(ScenarioError::OutsideLane { .. })));
        let mut scripted = sc;
        scripted.vehicles[0].script = Some(SpeedProfile::constant(3.0));
        assert_eq!(scripted.validate(&map), Err(ScenarioError::Behavior(VehicleId(1))));
    }
}
