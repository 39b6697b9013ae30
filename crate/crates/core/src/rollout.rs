//! Built-in 5 Hz scene simulator. The environment model is rolled forward
//! under the behavior policy, every vehicle's trajectory is buffered, and one
//! motion-planning objective per controllable vehicle is read off the
//! buffers: its route, the lane speed limits, and an anchor at the
//! intersection entry.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;
use core::fmt;

use crate::envmodel::{
    AnchorPoint, EnvironmentModel, LaneMap, MapError, MotionPlanningObjective, Pose, Route,
    RouteGeometry, RouteSpec, VehicleId,
};
use crate::kinematics::{bicycle_step, PurePursuit, VehicleParams};
use crate::math;
use crate::policy::{HeuristicPolicy, Policy, MAX_ACCEL};
use crate::scenegraph::{build_from_views, SceneConfig, SceneError, VehicleView};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedAdvice {
    pub lateral_accel: f64,
    pub comfort_decel: f64,
    pub lookahead: f64,
    /// Sampling step along the lookahead window.
    pub resolution: f64,
}

impl Default for SpeedAdvice {
    fn default() -> Self {
        Self {
            lateral_accel: 2.5,
            comfort_decel: 2.0,
            lookahead: 30.0,
            resolution: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutConfig {
    pub step: f64,
    pub timeout: f64,
    pub vehicle: VehicleParams,
    pub pursuit: PurePursuit,
    pub advice: SpeedAdvice,
    pub scene: SceneConfig,
    /// Behavior of regular vehicles, whatever policy drives the others.
    pub regular: HeuristicPolicy,
    /// Lateral offset beyond which a candidate route of an unknown vehicle is dropped.
    pub route_prune_offset: f64,
    /// Distance past the intersection exit at which a vehicle is done.
    pub goal_clearance: f64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            step: 0.2,
            timeout: 30.0,
            vehicle: VehicleParams::default(),
            pursuit: PurePursuit::default(),
            advice: SpeedAdvice::default(),
            scene: SceneConfig::default(),
            regular: HeuristicPolicy::default(),
            route_prune_offset: 1.5,
            goal_clearance: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutSample {
    /// Seconds since the environment-model timestamp.
    pub t: f64,
    pub pose: Pose,
    pub speed: f64,
    /// Acceleration applied from this sample to the next.
    pub accel: f64,
    /// Progress along the driven route.
    pub arc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimVehicle {
    pub id: VehicleId,
    pub pose: Pose,
    pub speed: f64,
    pub controllable: bool,
    /// Assumed routes; the first is the one driven in the rollout.
    pub routes: Vec<RouteGeometry>,
    pub arc: f64,
    pub trajectory: Vec<RolloutSample>,
    pub done: bool,
}

impl SimVehicle {
    pub fn route(&self) -> &RouteGeometry {
        &self.routes[0]
    }

    fn goal(&self, cfg: &RolloutConfig) -> f64 {
        (self.route().exit_arc() + cfg.goal_clearance).min(self.route().length())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutState {
    pub t: f64,
    pub steps: u64,
    pub vehicles: Vec<SimVehicle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Continue,
    Done,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanWarning {
    /// The rollout ended before the vehicle reached its intersection entry.
    NoEntryCrossing(VehicleId),
    /// The entry crossing lies before the issue time.
    AnchorInPast(VehicleId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RolloutError {
    Scene(SceneError),
    Route { vehicle: VehicleId, error: MapError },
    EmptyModel,
}

impl fmt::Display for RolloutError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RolloutError::Scene(e) => write!(f, "{e}"),
            RolloutError::Route { vehicle, error } => write!(f, "route of vehicle {vehicle}: {error}"),
            RolloutError::EmptyModel => write!(f, "environment model has no vehicles"),
        }
    }
}

impl From<SceneError> for RolloutError {
    fn from(e: SceneError) -> Self {
        RolloutError::Scene(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    pub objectives: Vec<MotionPlanningObjective>,
    pub warnings: Vec<PlanWarning>,
    pub termination: Termination,
    /// Final rollout state with every buffered trajectory.
    pub state: RolloutState,
}

/// Upper speed bound at `arc` that anticipates curvature and lane limits
/// within the lookahead window and stays reachable with comfort braking.
pub fn speed_advice(route: &RouteGeometry, arc: f64, cfg: &SpeedAdvice) -> f64 {
    let line = route.polyline();
    let end = (arc + cfg.lookahead).min(line.length());
    let bound_at = |s: f64| {
        let k = line.curvature_at(s).abs();
        let curve = if k > 1e-9 { math::sqrt(cfg.lateral_accel / k) } else { f64::INFINITY };
        curve.min(route.speed_limit_at(s))
    };
    let mut best = bound_at(arc.clamp(0.0, line.length()));
    let mut consider = |s: f64| {
        let b = bound_at(s);
        let reach = math::sqrt(b * b + 2.0 * cfg.comfort_decel * (s - arc).max(0.0));
        best = best.min(reach);
    };
    let mut s = arc;
    while s < end {
        consider(s);
        s += cfg.resolution;
    }
    consider(end);
    for &v in line.vertex_arcs() {
        if v > arc && v < end {
            consider(v);
        }
    }
    best
}

/// Candidate routes of a vehicle whose destination is unknown: every route
/// continuing from the lane it is on, minus those it has already left by
/// more than the prune offset. Straighter routes come first.
pub fn worst_case_routes(pose: &Pose, map: &LaneMap, cfg: &RolloutConfig) -> Result<Vec<RouteSpec>, SceneError> {
    let p = pose.position();
    let mut current = Vec::new();
    let mut nearest: Option<(f64, crate::envmodel::LaneId)> = None;
    for lane in map.lanes() {
        let pr = lane.centerline().project(p);
        if nearest.is_none_or(|(d, _)| pr.distance < d) {
            nearest = Some((pr.distance, lane.id()));
        }
        let aligned = math::normalize_angle(lane.centerline().heading_at(pr.arc) - pose.heading).abs() < FRAC_PI_4;
        if aligned && pr.distance <= cfg.scene.off_map_offset && pr.arc > 1e-6 && pr.arc < lane.length() - 1e-6 {
            current.push(lane.id());
        }
    }
    let (d, lane) = nearest.ok_or(SceneError::OffMap { vehicle: VehicleId(0), offset: f64::INFINITY })?;
    if current.is_empty() {
        if d > cfg.scene.off_map_offset {
            return Err(SceneError::OffMap { vehicle: VehicleId(0), offset: d });
        }
        current.push(lane);
    }
    let mut routes: Vec<(f64, RouteSpec)> = Vec::new();
    for start in current {
        for r in map.routes_from(start) {
            let g = map.route_geometry(&r).expect("enumerated routes are connected");
            let pr = g.polyline().project(p);
            let line = g.polyline();
            let aligned = math::normalize_angle(line.heading_at(pr.arc) - pose.heading).abs() < FRAC_PI_4;
            if !aligned || pr.distance > cfg.route_prune_offset || routes.iter().any(|(_, x)| *x == r) {
                continue;
            }
            let turn = math::normalize_angle(line.heading_at(line.length()) - line.heading_at(0.0)).abs();
            routes.push((turn, r));
        }
    }
    // Routes entered from an upstream lane make the shorter continuations redundant.
    let all: Vec<RouteSpec> = routes.iter().map(|(_, r)| r.clone()).collect();
    routes.retain(|(_, r)| {
        !all.iter()
            .any(|o| o.lanes().len() > r.lanes().len() && o.lanes().ends_with(r.lanes()))
    });
    routes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.lanes().cmp(b.1.lanes())));
    if routes.is_empty() {
        return Err(SceneError::OffMap { vehicle: VehicleId(0), offset: d });
    }
    Ok(routes.into_iter().map(|(_, r)| r).collect())
}

/// Assumed routes of every vehicle: the declared one, or the worst-case set.
pub fn assumed_routes(
    em: &EnvironmentModel,
    map: &LaneMap,
    cfg: &RolloutConfig,
) -> Result<BTreeMap<VehicleId, Vec<RouteSpec>>, RolloutError> {
    let mut out = BTreeMap::new();
    for v in em.vehicles() {
        let routes = match v.route() {
            Route::Known(r) => alloc::vec![trim_to_current(r, &v.pose(), map, v.id())?],
            Route::Unknown => worst_case_routes(&v.pose(), map, cfg).map_err(|e| match e {
                SceneError::OffMap { offset, .. } => SceneError::OffMap { vehicle: v.id(), offset },
                other => other,
            })?,
        };
        out.insert(v.id(), routes);
    }
    Ok(out)
}

/// Drops the lanes the vehicle has already left.
fn trim_to_current(route: &RouteSpec, pose: &Pose, map: &LaneMap, id: VehicleId) -> Result<RouteSpec, RolloutError> {
    let g = map
        .route_geometry(route)
        .map_err(|error| RolloutError::Route { vehicle: id, error })?;
    let arc = g.polyline().project(pose.position()).arc;
    Ok(route.trimmed(g.lane_index_at(arc)))
}

pub fn initial_state(em: &EnvironmentModel, map: &LaneMap, cfg: &RolloutConfig) -> Result<RolloutState, RolloutError> {
    let assumed = assumed_routes(em, map, cfg)?;
    let mut vehicles = Vec::with_capacity(em.vehicles().len());
    for v in em.vehicles() {
        let routes = assumed[&v.id()]
            .iter()
            .map(|r| {
                map.route_geometry(r)
                    .map_err(|error| RolloutError::Route { vehicle: v.id(), error })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let pr = routes[0].polyline().project(v.pose().position());
        if pr.distance > cfg.scene.off_map_offset {
            return Err(SceneError::OffMap { vehicle: v.id(), offset: pr.offset }.into());
        }
        let mut sv = SimVehicle {
            id: v.id(),
            pose: v.pose(),
            speed: v.speed(),
            controllable: v.controllable(),
            routes,
            arc: pr.arc,
            trajectory: Vec::new(),
            done: false,
        };
        sv.done = sv.arc >= sv.goal(cfg);
        vehicles.push(sv);
    }
    Ok(RolloutState { t: 0.0, steps: 0, vehicles })
}

pub fn termination_check(state: &RolloutState, cfg: &RolloutConfig) -> Termination {
    if state.vehicles.iter().all(|v| v.done) {
        Termination::Done
    } else if state.t >= cfg.timeout - 1e-9 {
        Termination::Timeout
    } else {
        Termination::Continue
    }
}

/// One policy step: observe, act, clip to the speed advice, steer, integrate.
pub fn rollout_step<P: Policy + ?Sized>(
    state: &mut RolloutState,
    policy: &P,
    map: &LaneMap,
    cfg: &RolloutConfig,
) -> Result<(), RolloutError> {
    let views: Vec<VehicleView<'_>> = state
        .vehicles
        .iter()
        .filter(|v| !v.done)
        .map(|v| VehicleView {
            id: v.id,
            pose: v.pose,
            speed: v.speed,
            controllable: v.controllable,
            routes: &v.routes,
        })
        .collect();
    let obs = build_from_views(&views, map, &cfg.scene)?;
    let cav = policy.select_action(&obs);
    let regular = if state.vehicles.iter().any(|v| !v.done && !v.controllable) {
        Some(cfg.regular.select_action(&obs))
    } else {
        None
    };

    let dt = cfg.step;
    let max_limit = map.lanes().iter().map(|l| l.speed_limit()).fold(0.0, f64::max);
    for v in state.vehicles.iter_mut().filter(|v| !v.done) {
        let raw = if v.controllable {
            cav.get(v.id)
        } else {
            regular.as_ref().and_then(|a| a.get(v.id))
        }
        .unwrap_or(0.0);
        let advice = speed_advice(v.route(), v.arc, &cfg.advice);
        let accel = raw.min((advice - v.speed) / dt).max(-MAX_ACCEL);
        v.trajectory.push(RolloutSample {
            t: state.t,
            pose: v.pose,
            speed: v.speed,
            accel,
            arc: v.arc,
        });
        let steer = cfg.pursuit.steer(v.pose, v.speed, v.route().polyline(), v.arc, &cfg.vehicle);
        let (pose, speed) = bicycle_step(v.pose, v.speed, accel, steer, dt, &cfg.vehicle);
        assert!(
            speed <= 2.0 * max_limit.max(1.0),
            "rollout speed {speed} of vehicle {} diverged",
            v.id
        );
        v.pose = pose;
        v.speed = speed;
        let travelled = v.speed.max(1.0) * dt;
        v.arc = v.route().polyline().project_near(pose.position(), v.arc, 1.0, travelled + 2.0).arc;
        if v.routes.len() > 1 {
            let p = pose.position();
            let keep: Vec<bool> = v
                .routes
                .iter()
                .enumerate()
                .map(|(i, r)| i == 0 || r.polyline().project(p).distance <= cfg.route_prune_offset)
                .collect();
            let mut k = keep.iter();
            v.routes.retain(|_| *k.next().unwrap());
        }
    }
    state.steps += 1;
    state.t = state.steps as f64 * dt;
    for v in state.vehicles.iter_mut().filter(|v| !v.done) {
        if v.arc >= v.goal(cfg) {
            v.done = true;
            v.trajectory.push(RolloutSample {
                t: state.t,
                pose: v.pose,
                speed: v.speed,
                accel: 0.0,
                arc: v.arc,
            });
        }
    }
    Ok(())
}

/// Runs the rollout to completion without deriving objectives.
pub fn simulate<P: Policy + ?Sized>(
    em: &EnvironmentModel,
    map: &LaneMap,
    policy: &P,
    cfg: &RolloutConfig,
) -> Result<(RolloutState, Termination), RolloutError> {
    let mut state = initial_state(em, map, cfg)?;
    loop {
        match termination_check(&state, cfg) {
            Termination::Continue => rollout_step(&mut state, policy, map, cfg)?,
            end => {
                for v in state.vehicles.iter_mut().filter(|v| !v.done) {
                    v.trajectory.push(RolloutSample {
                        t: state.t,
                        pose: v.pose,
                        speed: v.speed,
                        accel: 0.0,
                        arc: v.arc,
                    });
                }
                return Ok((state, end));
            }
        }
    }
}

/// Time and speed at which a buffered trajectory first reaches `arc`,
/// linearly interpolated between samples.
pub fn crossing(trajectory: &[RolloutSample], arc: f64) -> Option<(f64, f64)> {
    trajectory.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        (a.arc < arc && b.arc >= arc).then(|| {
            let f = (arc - a.arc) / (b.arc - a.arc);
            (a.t + f * (b.t - a.t), a.speed + f * (b.speed - a.speed))
        })
    })
}

/// Derives objectives issued at the environment-model timestamp.
pub fn plan<P: Policy + ?Sized>(
    em: &EnvironmentModel,
    map: &LaneMap,
    policy: &P,
    cfg: &RolloutConfig,
) -> Result<PlanOutput, RolloutError> {
    plan_at(em, map, policy, cfg, em.timestamp())
}

/// Derives objectives that will be issued at `issue_time`; anchor times are
/// relative to it, which absorbs the planning latency.
pub fn plan_at<P: Policy + ?Sized>(
    em: &EnvironmentModel,
    map: &LaneMap,
    policy: &P,
    cfg: &RolloutConfig,
    issue_time: f64,
) -> Result<PlanOutput, RolloutError> {
    if em.is_empty() {
        return Err(RolloutError::EmptyModel);
    }
    let (state, termination) = simulate(em, map, policy, cfg)?;
    let mut objectives = Vec::new();
    let mut warnings = Vec::new();
    for v in state.vehicles.iter().filter(|v| v.controllable) {
        let route = v.route();
        let start = v.trajectory.first().map_or(v.arc, |s| s.arc);
        let mut anchors = Vec::new();
        if let Some(entry) = route.entry_arc().filter(|&e| e > start) {
            match crossing(&v.trajectory, entry) {
                Some((t, speed)) => {
                    let dt = em.timestamp() + t - issue_time;
                    if dt > 0.0 {
                        anchors.push(AnchorPoint {
                            position: route.polyline().point_at(entry),
                            dt,
                            speed,
                        });
                    } else {
                        warnings.push(PlanWarning::AnchorInPast(v.id));
                    }
                }
                None => warnings.push(PlanWarning::NoEntryCrossing(v.id)),
            }
        }
        let objective = MotionPlanningObjective::new(
            v.id,
            issue_time,
            route.polyline().clone(),
            route.segment_limits(),
            anchors,
        )
        .expect("objective built from a valid route");
        objectives.push(objective);
    }
    Ok(PlanOutput {
        objectives,
        warnings,
        termination,
        state,
    })
}
