//! Plan/execute loop. Planning runs are triggered at the episode start, when
//! vehicles appear, periodically (cyclic mode) and when a worst-case route
//! gets ruled out (cyclic mode). Every run reads a snapshot of the world;
//! its objectives are handed to the per-vehicle motion planners after the
//! configured latency, while the world keeps moving.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::envmodel::{LaneMap, MotionPlanningObjective, Pose, VehicleId};
use crate::execsim::{box_clearance, box_overlap, step_world, CollisionEvent, ExecConfig, Tracking, WorldState};
use crate::motionplan::{
    anchor_arc, find_lead, plan_trajectory, CandidateKind, CostWeights, EgoState, PlanError, PlannerConfig, Trajectory,
};
use crate::policy::Policy;
use crate::rollout::{plan_at, worst_case_routes, PlanWarning, RolloutConfig, Termination};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RunMode {
    Single,
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TriggerKind {
    Initial,
    NewVehicle(VehicleId),
    ConflictRuledOut(VehicleId),
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanningTrigger {
    pub kind: TriggerKind,
    pub time: f64,
    /// Dropped because a run was still in flight.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub timeout: f64,
    pub replan_period: f64,
    /// Time from snapshot to objective handover.
    pub latency: f64,
    /// Motion planners replan against their objective at this period.
    pub mp_period: f64,
    /// Anchors closer than this in time are dropped before planning.
    pub anchor_min_remaining: f64,
    /// A frame is logged every this many execution steps.
    pub frame_every: u64,
    pub keep_trajectories: bool,
    pub rollout: RolloutConfig,
    pub planner: PlannerConfig,
    pub weights: CostWeights,
    pub exec: ExecConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            timeout: 60.0,
            replan_period: 2.0,
            latency: 0.0,
            mp_period: 0.5,
            anchor_min_remaining: 0.3,
            frame_every: 5,
            keep_trajectories: false,
            rollout: RolloutConfig::default(),
            planner: PlannerConfig::default(),
            weights: CostWeights::default(),
            exec: ExecConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningRun {
    pub trigger: TriggerKind,
    pub snapshot_time: f64,
    pub issue_time: f64,
    pub vehicles: usize,
    pub objectives: Vec<MotionPlanningObjective>,
    pub warnings: Vec<PlanWarning>,
    pub termination: Termination,
    /// Objectives whose vehicle was gone or not controllable at handover.
    pub rejected: Vec<VehicleId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRecord {
    pub time: f64,
    pub vehicle: VehicleId,
    pub kind: CandidateKind,
    pub cost: f64,
    pub anchored: bool,
    pub infeasible: bool,
    pub follow: bool,
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameVehicle {
    pub id: VehicleId,
    pub pose: Pose,
    pub speed: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub vehicles: Vec<FrameVehicle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MpStats {
    pub plans: usize,
    pub infeasible: usize,
    pub follow: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    Timeout,
    PlannerFailure { time: f64, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub scenario: String,
    pub mode: RunMode,
    pub seed: u64,
    pub triggers: Vec<PlanningTrigger>,
    pub runs: Vec<PlanningRun>,
    pub plans: Vec<PlanRecord>,
    pub frames: Vec<Frame>,
    /// One event per contact episode of a pair, with its deepest penetration.
    pub collisions: Vec<CollisionEvent>,
    pub exits: Vec<(VehicleId, f64)>,
    /// Smallest footprint clearance seen per pair (negative when overlapping).
    pub min_clearance: Vec<(VehicleId, VehicleId, f64)>,
    pub mp: MpStats,
    pub outcome: Outcome,
    pub end_time: f64,
}

impl EpisodeLog {
    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }

    pub fn planner_failed(&self) -> bool {
        matches!(self.outcome, Outcome::PlannerFailure { .. })
    }

    /// Last anchored objective issued to each vehicle, as absolute anchor time.
    pub fn last_anchor_times(&self) -> BTreeMap<VehicleId, f64> {
        let mut out = BTreeMap::new();
        for run in &self.runs {
            for o in &run.objectives {
                if let Some(t) = o.anchor_time() {
                    out.insert(o.vehicle(), t);
                }
            }
        }
        out
    }

    pub fn clearance(&self, a: VehicleId, b: VehicleId) -> Option<f64> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.min_clearance.iter().find(|(x, y, _)| *x == a && *y == b).map(|c| c.2)
    }
}

/// What happened to a batch of objectives at handover.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Handover {
    pub applied: Vec<VehicleId>,
    pub rejected: Vec<VehicleId>,
    pub plans: Vec<PlanRecord>,
}

fn others(world: &WorldState, id: VehicleId) -> Vec<(Pose, f64)> {
    world.vehicles.iter().filter(|v| v.id != id).map(|v| (v.pose, v.speed)).collect()
}

/// Plans a trajectory for vehicle `id` against `objective` from its current
/// state. Anchors that are about to expire or already passed are dropped.
fn plan_vehicle(
    world: &WorldState,
    id: VehicleId,
    objective: MotionPlanningObjective,
    cfg: &EpisodeConfig,
) -> Result<(Tracking, PlanRecord), PlanError> {
    let v = world.vehicle(id).expect("vehicle exists");
    let now = world.t;
    let path = objective.path();
    let arc = path.project(v.pose.position()).arc;
    let objective = match (objective.anchor_time(), anchor_arc(&objective)) {
        (Some(t), Some(s)) if t - now < cfg.anchor_min_remaining || s <= arc => objective.without_anchors(),
        _ => objective,
    };
    let max = cfg.planner.max_accel;
    let ego = EgoState { arc, speed: v.speed, accel: v.accel.clamp(-max, max) };
    let lead = find_lead(objective.path(), arc, others(world, id), &cfg.planner);
    let r = plan_trajectory(&objective, now, &ego, lead, &cfg.weights, &cfg.planner)?;
    let record = PlanRecord {
        time: now,
        vehicle: id,
        kind: r.kind,
        cost: r.cost,
        anchored: !objective.anchors().is_empty(),
        infeasible: r.infeasible,
        follow: r.follow_engaged,
        trajectory: cfg.keep_trajectories.then(|| r.trajectory.clone()),
    };
    Ok((Tracking { objective, trajectory: r.trajectory, arc }, record))
}

/// Replaces the objective of every addressed connected vehicle and replans
/// its trajectory from the current state.
pub fn apply_objectives(
    objectives: &[MotionPlanningObjective],
    world: &mut WorldState,
    cfg: &EpisodeConfig,
) -> Result<Handover, PlanError> {
    let mut out = Handover::default();
    for o in objectives {
        let id = o.vehicle();
        if world.vehicle(id).and_then(|v| v.tracking()).is_none() && !world.vehicle(id).is_some_and(|v| v.controllable) {
            out.rejected.push(id);
            continue;
        }
        let (tracking, record) = plan_vehicle(world, id, o.clone(), cfg)?;
        *world.vehicle_mut(id).unwrap().tracking_mut().unwrap() = Some(tracking);
        out.applied.push(id);
        out.plans.push(record);
    }
    Ok(out)
}

struct Episode<'a, P: ?Sized> {
    scenario: &'a Scenario,
    map: &'a LaneMap,
    policy: &'a P,
    cfg: &'a EpisodeConfig,
    mode: RunMode,
    world: WorldState,
    log: EpisodeLog,
    in_flight: Option<(f64, usize)>,
    last_mp: BTreeMap<VehicleId, f64>,
    route_counts: BTreeMap<VehicleId, usize>,
    contacts: BTreeMap<(VehicleId, VehicleId), usize>,
    clearance: BTreeMap<(VehicleId, VehicleId), f64>,
}

const EPS: f64 = 1e-6;

impl<P: Policy + ?Sized> Episode<'_, P> {
    fn fail(&mut self, message: String) {
        self.log.outcome = Outcome::PlannerFailure { time: self.world.t, message };
    }

    fn start_run(&mut self, kind: TriggerKind) -> bool {
        let em = match self.world.snapshot() {
            Ok(em) => em,
            Err(e) => {
                self.fail(e.to_string());
                return false;
            }
        };
        if em.is_empty() {
            return true;
        }
        let issue = self.world.t + self.cfg.latency;
        match plan_at(&em, self.map, self.policy, &self.cfg.rollout, issue) {
            Ok(out) => {
                self.log.runs.push(PlanningRun {
                    trigger: kind,
                    snapshot_time: self.world.t,
                    issue_time: issue,
                    vehicles: em.vehicles().len(),
                    objectives: out.objectives,
                    warnings: out.warnings,
                    termination: out.termination,
                    rejected: Vec::new(),
                });
                self.in_flight = Some((issue, self.log.runs.len() - 1));
                true
            }
            Err(e) => {
                self.fail(e.to_string());
                false
            }
        }
    }

    fn handover(&mut self) -> bool {
        let Some((ready, run)) = self.in_flight else {
            return true;
        };
        if self.world.t < ready - EPS {
            return true;
        }
        self.in_flight = None;
        let objectives = self.log.runs[run].objectives.clone();
        match apply_objectives(&objectives, &mut self.world, self.cfg) {
            Ok(h) => {
                for id in &h.applied {
                    self.last_mp.insert(*id, self.world.t);
                }
                self.log.runs[run].rejected = h.rejected;
                self.record_plans(h.plans);
                true
            }
            Err(e) => {
                self.fail(e.to_string());
                false
            }
        }
    }

    fn record_plans(&mut self, plans: Vec<PlanRecord>) {
        for p in plans {
            self.log.mp.plans += 1;
            self.log.mp.infeasible += usize::from(p.infeasible);
            self.log.mp.follow += usize::from(p.follow);
            self.log.plans.push(p);
        }
    }

    fn periodic_replans(&mut self) -> bool {
        let now = self.world.t;
        let due: Vec<(VehicleId, MotionPlanningObjective)> = self
            .world
            .vehicles
            .iter()
            .filter_map(|v| v.tracking().map(|t| (v.id, t.objective.clone())))
            .filter(|(id, _)| self.last_mp.get(id).is_none_or(|t| now - t >= self.cfg.mp_period - EPS))
            .collect();
        for (id, objective) in due {
            match plan_vehicle(&self.world, id, objective, self.cfg) {
                Ok((tracking, record)) => {
                    *self.world.vehicle_mut(id).unwrap().tracking_mut().unwrap() = Some(tracking);
                    self.last_mp.insert(id, now);
                    self.record_plans(alloc::vec![record]);
                }
                Err(e) => {
                    self.fail(e.to_string());
                    return false;
                }
            }
        }
        true
    }

    fn ruled_out(&mut self) -> Vec<VehicleId> {
        let mut out = Vec::new();
        for v in self.world.vehicles.iter().filter(|v| !v.route_known) {
            let Ok(routes) = worst_case_routes(&v.pose, self.map, &self.cfg.rollout) else {
                continue;
            };
            let n = routes.len();
            if let Some(prev) = self.route_counts.insert(v.id, n) {
                if n < prev {
                    out.push(v.id);
                }
            }
        }
        out
    }

    fn observe(&mut self) {
        let params = &self.cfg.exec.vehicle;
        let vs = &self.world.vehicles;
        let mut touching = Vec::new();
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                let key = (vs[i].id, vs[j].id);
                let c = box_clearance(&vs[i].pose, &vs[j].pose, params);
                let e = self.clearance.entry(key).or_insert(f64::INFINITY);
                *e = e.min(c);
                if let Some(depth) = box_overlap(&vs[i].pose, &vs[j].pose, params) {
                    touching.push(key);
                    match self.contacts.get(&key) {
                        Some(&k) => {
                            let ev = &mut self.log.collisions[k];
                            ev.penetration = ev.penetration.max(depth);
                        }
                        None => {
                            self.contacts.insert(key, self.log.collisions.len());
                            self.log.collisions.push(CollisionEvent {
                                time: self.world.t,
                                vehicles: key,
                                penetration: depth,
                            });
                        }
                    }
                }
            }
        }
        self.contacts.retain(|k, _| touching.contains(k));
    }

    fn frame(&mut self) {
        self.log.frames.push(Frame {
            t: self.world.t,
            vehicles: self
                .world
                .vehicles
                .iter()
                .map(|v| FrameVehicle { id: v.id, pose: v.pose, speed: v.speed, accel: v.accel })
                .collect(),
        });
    }

    fn trigger(&mut self, kind: TriggerKind) -> bool {
        let skipped = self.in_flight.is_some() && kind == TriggerKind::Cyclic;
        self.log.triggers.push(PlanningTrigger { kind, time: self.world.t, skipped });
        if skipped {
            return true;
        }
        // A run in flight for a non-cyclic trigger is superseded by a fresh one.
        self.start_run(kind)
    }

    fn run(mut self) -> EpisodeLog {
        let mut pending: Vec<_> = self.scenario.vehicles.iter().collect();
        pending.sort_by(|a, b| a.spawn_time.total_cmp(&b.spawn_time).then(a.id.cmp(&b.id)));
        let mut pending = pending.into_iter().peekable();
        let mut cycles = 1u32;
        let check_every = (libm::round(self.cfg.rollout.step / self.cfg.exec.step) as u64).max(1);
        let mut first = true;
        loop {
            let t = self.world.t;
            let mut fresh = Vec::new();
            while let Some(v) = pending.next_if(|v| v.spawn_time <= t + EPS) {
                if let Err(e) = v.spawn(&mut self.world, self.map) {
                    self.fail(e.to_string());
                    return self.finish();
                }
                fresh.push(v.id);
            }
            if self.world.vehicles.is_empty() && pending.peek().is_none() {
                self.log.outcome = Outcome::Completed;
                return self.finish();
            }
            if t >= self.cfg.timeout - EPS {
                self.log.outcome = Outcome::Timeout;
                return self.finish();
            }

            let mut kinds = Vec::new();
            if first {
                kinds.push(TriggerKind::Initial);
                first = false;
            } else {
                kinds.extend(fresh.iter().map(|&id| TriggerKind::NewVehicle(id)));
            }
            if self.mode == RunMode::Cyclic {
                if self.world.steps.is_multiple_of(check_every) {
                    kinds.extend(self.ruled_out().into_iter().map(TriggerKind::ConflictRuledOut));
                }
                if t >= f64::from(cycles) * self.cfg.replan_period - EPS {
                    kinds.push(TriggerKind::Cyclic);
                    cycles += 1;
                }
            }
            // Simultaneous triggers share one run; the rest are logged.
            if let Some(&lead) = kinds.iter().min() {
                let ok = self.trigger(lead);
                for &k in kinds.iter().filter(|&&k| k != lead) {
                    self.log.triggers.push(PlanningTrigger { kind: k, time: t, skipped: true });
                }
                if !ok {
                    return self.finish();
                }
            }
            if !self.handover() || !self.periodic_replans() {
                return self.finish();
            }

            self.observe();
            if self.world.steps.is_multiple_of(self.cfg.frame_every.max(1)) {
                self.frame();
            }
            for id in step_world(&mut self.world, self.map, &self.cfg.exec) {
                self.log.exits.push((id, self.world.t));
                self.last_mp.remove(&id);
            }
        }
    }

    fn finish(mut self) -> EpisodeLog {
        if self.log.frames.last().is_none_or(|f| f.t < self.world.t) {
            self.frame();
        }
        self.log.end_time = self.world.t;
        self.log.min_clearance = self.clearance.iter().map(|(&(a, b), &c)| (a, b, c)).collect();
        self.log
    }
}

/// Runs one closed-loop episode. Episodes are deterministic in their inputs.
pub fn run_episode<P: Policy + ?Sized>(
    scenario: &Scenario,
    map: &LaneMap,
    mode: RunMode,
    policy: &P,
    cfg: &EpisodeConfig,
    seed: u64,
) -> EpisodeLog {
    let episode = Episode {
        scenario,
        map,
        policy,
        cfg,
        mode,
        world: WorldState::new(0.0),
        log: EpisodeLog {
            scenario: scenario.name.clone(),
            mode,
            seed,
            triggers: Vec::new(),
            runs: Vec::new(),
            plans: Vec::new(),
            frames: Vec::new(),
            collisions: Vec::new(),
            exits: Vec::new(),
            min_clearance: Vec::new(),
            mp: MpStats::default(),
            outcome: Outcome::Timeout,
            end_time: 0.0,
        },
        in_flight: None,
        last_mp: BTreeMap::new(),
        route_counts: BTreeMap::new(),
        contacts: BTreeMap::new(),
        clearance: BTreeMap::new(),
    };
    episode.run()
}
