//! Closed-loop execution simulator at a fine fixed step.
//!
//! Connected vehicles track their current trajectory (longitudinal feedback
//! on reference position and speed, lateral pure pursuit on the objective
//! path). Regular vehicles run the heuristic rule set at the policy cadence,
//! or follow a scripted speed profile. Collisions are oriented-box overlaps.

use alloc::vec::Vec;
use core::fmt;

use crate::envmodel::{
    EnvironmentModel, LaneMap, ModelError, MotionPlanningObjective, Pose, Route, RouteGeometry, RouteSpec,
    VehicleId, VehicleRecord,
};
use crate::geometry::Vec2;
use crate::kinematics::{bicycle_step, PurePursuit, VehicleParams};
use crate::math;
use crate::motionplan::Trajectory;
use crate::policy::{HeuristicPolicy, Policy, MAX_ACCEL};
use crate::rollout::{speed_advice, SpeedAdvice};
use crate::scenegraph::{build_from_views, SceneConfig, VehicleView};

#[derive(Debug, Clone, PartialEq)]
pub struct ExecConfig {
    pub step: f64,
    pub vehicle: VehicleParams,
    pub pursuit: PurePursuit,
    pub position_gain: f64,
    pub speed_gain: f64,
    /// Actuator bound on the commanded acceleration.
    pub max_accel: f64,
    pub regular: HeuristicPolicy,
    /// Regular vehicles decide at this period and hold the command.
    pub regular_period: f64,
    pub advice: SpeedAdvice,
    pub scene: SceneConfig,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            step: 0.02,
            vehicle: VehicleParams::default(),
            pursuit: PurePursuit { min_lookahead: 2.0, lookahead_gain: 0.3 },
            position_gain: 4.0,
            speed_gain: 4.0,
            max_accel: 4.0,
            regular: HeuristicPolicy::default(),
            regular_period: 0.2,
            advice: SpeedAdvice::default(),
            scene: SceneConfig::default(),
        }
    }
}

impl ExecConfig {
    fn regular_every(&self) -> u64 {
        (math::round(self.regular_period / self.step) as u64).max(1)
    }
}

/// Piecewise-linear speed over time, held constant beyond its ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    points: Vec<(f64, f64)>,
}

impl SpeedProfile {
    /// `None` unless non-empty, finite, with increasing times and speeds ≥ 0.
    pub fn new(points: Vec<(f64, f64)>) -> Option<Self> {
        let ok = !points.is_empty()
            && points.iter().all(|(t, v)| t.is_finite() && v.is_finite() && *v >= 0.0)
            && points.windows(2).all(|w| w[1].0 > w[0].0);
        ok.then_some(Self { points })
    }

    pub fn constant(speed: f64) -> Self {
        Self { points: alloc::vec![(0.0, speed.max(0.0))] }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        let p = &self.points;
        if t <= p[0].0 {
            return p[0].1;
        }
        match p.iter().position(|(pt, _)| *pt > t) {
            None => p.last().unwrap().1,
            Some(i) => {
                let ((t0, v0), (t1, v1)) = (p[i - 1], p[i]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

/// Active objective and trajectory of a connected vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracking {
    pub objective: MotionPlanningObjective,
    pub trajectory: Trajectory,
    /// Arc on the objective path.
    pub arc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Behavior {
    /// Connected vehicle; keeps its speed until a first trajectory arrives.
    Automated(Option<Tracking>),
    /// Regular vehicle under the heuristic rule set, with its held command.
    Heuristic { command: f64 },
    Scripted(SpeedProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldVehicle {
    pub id: VehicleId,
    pub pose: Pose,
    pub speed: f64,
    pub accel: f64,
    pub route: RouteSpec,
    pub geometry: RouteGeometry,
    /// Whether the planner may know the route.
    pub route_known: bool,
    pub controllable: bool,
    /// Arc on the route geometry.
    pub arc: f64,
    pub behavior: Behavior,
}

impl WorldVehicle {
    pub fn tracking(&self) -> Option<&Tracking> {
        match &self.behavior {
            Behavior::Automated(t) => t.as_ref(),
            _ => None,
        }
    }

    pub fn tracking_mut(&mut self) -> Option<&mut Option<Tracking>> {
        match &mut self.behavior {
            Behavior::Automated(t) => Some(t),
            _ => None,
        }
    }

    fn record(&self) -> Result<VehicleRecord, ModelError> {
        let route = if self.route_known { Route::Known(self.route.clone()) } else { Route::Unknown };
        VehicleRecord::new(self.id, self.pose, self.speed, route, self.controllable)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorldState {
    pub t: f64,
    /// Time at step zero; `t` is recomputed from it to avoid drift.
    pub start: f64,
    pub steps: u64,
    pub vehicles: Vec<WorldVehicle>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpawnError {
    DuplicateId(VehicleId),
    Route(crate::envmodel::MapError),
    OffRoute { vehicle: VehicleId, offset: f64 },
}

impl fmt::Display for SpawnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpawnError::DuplicateId(id) => write!(f, "vehicle {id} already exists"),
            SpawnError::Route(e) => write!(f, "invalid route: {e}"),
            SpawnError::OffRoute { vehicle, offset } => write!(f, "vehicle {vehicle} is {offset:.2} m off its route"),
        }
    }
}

impl WorldState {
    pub fn new(t: f64) -> Self {
        Self { t, start: t, steps: 0, vehicles: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn spawn(
        &mut self,
        map: &LaneMap,
        id: VehicleId,
        pose: Pose,
        speed: f64,
        route: RouteSpec,
        route_known: bool,
        controllable: bool,
        behavior: Behavior,
    ) -> Result<(), SpawnError> {
        if self.vehicle(id).is_some() {
            return Err(SpawnError::DuplicateId(id));
        }
        let geometry = map.route_geometry(&route).map_err(SpawnError::Route)?;
        let pr = geometry.polyline().project(pose.position());
        if pr.distance > 3.0 {
            return Err(SpawnError::OffRoute { vehicle: id, offset: pr.distance });
        }
        let v = WorldVehicle {
            id,
            pose,
            speed,
            accel: 0.0,
            route,
            geometry,
            route_known,
            controllable,
            arc: pr.arc,
            behavior,
        };
        let at = self.vehicles.partition_point(|x| x.id < id);
        self.vehicles.insert(at, v);
        Ok(())
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&WorldVehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn vehicle_mut(&mut self, id: VehicleId) -> Option<&mut WorldVehicle> {
        self.vehicles.iter_mut().find(|v| v.id == id)
    }

    /// Environment model as perceived at the current time.
    pub fn snapshot(&self) -> Result<EnvironmentModel, ModelError> {
        let records = self.vehicles.iter().map(WorldVehicle::record).collect::<Result<Vec<_>, _>>()?;
        EnvironmentModel::new(self.t, records)
    }
}

fn regular_commands(state: &WorldState, map: &LaneMap, cfg: &ExecConfig) -> Vec<(VehicleId, f64)> {
    let routes: Vec<[RouteGeometry; 1]> = state.vehicles.iter().map(|v| [v.geometry.clone()]).collect();
    let views: Vec<VehicleView<'_>> = state
        .vehicles
        .iter()
        .zip(&routes)
        .map(|(v, r)| VehicleView {
            id: v.id,
            pose: v.pose,
            speed: v.speed,
            controllable: v.controllable,
            routes: r,
        })
        .collect();
    let action = build_from_views(&views, map, &cfg.scene).ok().map(|obs| cfg.regular.select_action(&obs));
    state
        .vehicles
        .iter()
        .filter(|v| matches!(v.behavior, Behavior::Heuristic { .. }))
        .map(|v| {
            let raw = action
                .as_ref()
                .and_then(|a| a.get(v.id))
                .unwrap_or(cfg.regular.tracking_gain * (v.geometry.speed_limit_at(v.arc) - v.speed));
            let advice = speed_advice(&v.geometry, v.arc, &cfg.advice);
            (v.id, raw.min((advice - v.speed) / cfg.regular_period).max(-MAX_ACCEL))
        })
        .collect()
}

/// Advances the world by one step and removes vehicles that reached the end
/// of their route; their ids are returned.
pub fn step_world(state: &mut WorldState, map: &LaneMap, cfg: &ExecConfig) -> Vec<VehicleId> {
    let dt = cfg.step;
    if state.steps.is_multiple_of(cfg.regular_every()) && state.vehicles.iter().any(|v| matches!(v.behavior, Behavior::Heuristic { .. })) {
        for (id, a) in regular_commands(state, map, cfg) {
            if let Some(Behavior::Heuristic { command }) = state.vehicle_mut(id).map(|v| &mut v.behavior) {
                *command = a;
            }
        }
    }
    let t = state.t;
    for v in &mut state.vehicles {
        let (accel, steer) = match &mut v.behavior {
            Behavior::Automated(Some(tr)) => {
                let path = tr.objective.path();
                tr.arc = path.project_near(v.pose.position(), tr.arc, 1.0, v.speed * dt + 2.0).arc;
                let (s_ref, v_ref, a_ref) = tr.trajectory.reference_at(t);
                let a = a_ref + cfg.position_gain * (s_ref - tr.arc) + cfg.speed_gain * (v_ref - v.speed);
                (a, cfg.pursuit.steer(v.pose, v.speed, path, tr.arc, &cfg.vehicle))
            }
            Behavior::Automated(None) => (0.0, cfg.pursuit.steer(v.pose, v.speed, v.geometry.polyline(), v.arc, &cfg.vehicle)),
            Behavior::Heuristic { command } => {
                (*command, cfg.pursuit.steer(v.pose, v.speed, v.geometry.polyline(), v.arc, &cfg.vehicle))
            }
            Behavior::Scripted(profile) => {
                let a = (profile.speed_at(t + dt) - v.speed) / dt;
                (a, cfg.pursuit.steer(v.pose, v.speed, v.geometry.polyline(), v.arc, &cfg.vehicle))
            }
        };
        let accel = if accel.is_finite() { accel.clamp(-cfg.max_accel, cfg.max_accel) } else { 0.0 };
        let (pose, speed) = bicycle_step(v.pose, v.speed, accel, steer, dt, &cfg.vehicle);
        v.accel = accel;
        v.pose = pose;
        v.speed = speed;
        v.arc = v.geometry.polyline().project_near(pose.position(), v.arc, 1.0, speed * dt + 2.0).arc;
    }
    state.steps += 1;
    state.t = state.start + state.steps as f64 * dt;
    let mut exited = Vec::new();
    state.vehicles.retain(|v| {
        let done = v.arc >= v.geometry.length() - 1e-3;
        if done {
            exited.push(v.id);
        }
        !done
    });
    exited
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub time: f64,
    /// Smaller id first.
    pub vehicles: (VehicleId, VehicleId),
    pub penetration: f64,
}

fn box_axes(p: &Pose) -> (Vec2, Vec2) {
    let u = Vec2::from_angle(p.heading);
    (u, u.perp())
}

/// Penetration depth of two footprints centered at the poses, or `None` if
/// a separating axis exists. Touching boxes do not collide.
pub fn box_overlap(a: &Pose, b: &Pose, params: &VehicleParams) -> Option<f64> {
    let (hl, hw) = (params.length / 2.0, params.width / 2.0);
    let (au, av) = box_axes(a);
    let (bu, bv) = box_axes(b);
    let d = b.position() - a.position();
    let mut depth = f64::INFINITY;
    for axis in [au, av, bu, bv] {
        let ra = hl * au.dot(axis).abs() + hw * av.dot(axis).abs();
        let rb = hl * bu.dot(axis).abs() + hw * bv.dot(axis).abs();
        let overlap = ra + rb - d.dot(axis).abs();
        if overlap <= 0.0 {
            return None;
        }
        depth = depth.min(overlap);
    }
    Some(depth)
}

pub fn box_corners(p: &Pose, params: &VehicleParams) -> [Vec2; 4] {
    let (u, v) = box_axes(p);
    let (l, w) = (u * (params.length / 2.0), v * (params.width / 2.0));
    let c = p.position();
    [c + l + w, c - l + w, c - l - w, c + l - w]
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = if ab.norm_sq() > 0.0 { ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(a + ab * t)
}

/// Distance between two footprints; the negated penetration when they overlap.
pub fn box_clearance(a: &Pose, b: &Pose, params: &VehicleParams) -> f64 {
    if let Some(depth) = box_overlap(a, b, params) {
        return -depth;
    }
    let (ca, cb) = (box_corners(a, params), box_corners(b, params));
    let mut best = f64::INFINITY;
    for (x, y) in [(&ca, &cb), (&cb, &ca)] {
        for p in x {
            for i in 0..4 {
                best = best.min(segment_distance(*p, y[i], y[(i + 1) % 4]));
            }
        }
    }
    best
}

/// Overlapping footprints in the current state, one event per pair.
pub fn detect_collisions(state: &WorldState, params: &VehicleParams) -> Vec<CollisionEvent> {
    let vs = &state.vehicles;
    let mut out = Vec::new();
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            if let Some(penetration) = box_overlap(&vs[i].pose, &vs[j].pose, params) {
                let (a, b) = if vs[i].id < vs[j].id { (vs[i].id, vs[j].id) } else { (vs[j].id, vs[i].id) };
                out.push(CollisionEvent { time: state.t, vehicles: (a, b), penetration });
            }
        }
    }
    out
}
