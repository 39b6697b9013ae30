//! Sampling-based longitudinal planner along a fixed path.
//!
//! Candidates are polynomial speed profiles: quintics that end on the anchor
//! (position, speed, zero acceleration) over a small grid of terminal times
//! and speeds, or quartic velocity-keeping profiles when no anchor is set.
//! After the polynomial part every candidate continues with a simple
//! velocity-keeping law under a curvature-aware speed cap. Candidates
//! violating a hard limit are dropped, the cheapest survivor wins.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;
use core::fmt;

use crate::envmodel::{MotionPlanningObjective, Pose};
use crate::geometry::{Polyline, Vec2};
use crate::kinematics::{point_beyond, TimeGap};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub anchor_time: f64,
    pub anchor_speed: f64,
    pub accel: f64,
    pub jerk: f64,
    pub limit_deviation: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            anchor_time: 10.0,
            anchor_speed: 2.0,
            accel: 1.0,
            jerk: 1.0,
            limit_deviation: 5.0,
        }
    }
}

impl CostWeights {
    pub fn is_valid(&self) -> bool {
        let w = [self.anchor_time, self.anchor_speed, self.accel, self.jerk, self.limit_deviation];
        w.iter().all(|x| x.is_finite() && *x >= 0.0) && w.iter().any(|x| *x > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowConfig {
    pub range: f64,
    pub lateral: f64,
    pub law: TimeGap,
    /// Follow mode engages once the chosen plan gets this far ahead of the
    /// follow profile within the check window.
    pub margin: f64,
    pub window: f64,
}

impl Default for FollowConfig {
    fn default() -> Self {
        Self {
            range: 60.0,
            lateral: 2.0,
            law: TimeGap::default(),
            margin: 0.5,
            window: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub dt: f64,
    pub horizon: f64,
    pub max_accel: f64,
    pub max_lateral_accel: f64,
    /// Allowed overshoot of the speed bound.
    pub speed_tolerance: f64,
    pub anchor_time_offsets: Vec<f64>,
    pub anchor_speed_offsets: Vec<f64>,
    pub keep_times: Vec<f64>,
    pub keep_speed_step: f64,
    /// Speed cap used by the velocity-keeping tail.
    pub cap_lateral_accel: f64,
    pub cap_decel: f64,
    pub tail_gain: f64,
    pub tail_preview: f64,
    pub tail_max_accel: f64,
    pub tail_max_decel: f64,
    pub follow: FollowConfig,
    pub vehicle_length: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 10.0,
            max_accel: 3.5,
            max_lateral_accel: 3.0,
            speed_tolerance: 0.3,
            anchor_time_offsets: alloc::vec![0.0, -0.2, 0.2, -0.4, 0.4],
            anchor_speed_offsets: alloc::vec![0.0, -0.5, 0.5, -1.0, 1.0],
            keep_times: alloc::vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            keep_speed_step: 1.0,
            cap_lateral_accel: 2.5,
            cap_decel: 2.5,
            tail_gain: 0.5,
            tail_preview: 0.5,
            tail_max_accel: 1.5,
            tail_max_decel: 3.0,
            follow: FollowConfig::default(),
            vehicle_length: 5.0,
        }
    }
}

/// Ego state along the objective path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoState {
    pub arc: f64,
    pub speed: f64,
    pub accel: f64,
}

/// Vehicle ahead on the path: bumper-to-bumper gap and speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lead {
    pub gap: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub arc: f64,
    pub pose: Pose,
    pub speed: f64,
    pub accel: f64,
    pub curvature: f64,
}

/// Time-stamped samples at a fixed spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// `None` unless there are samples with strictly increasing times.
    pub fn new(samples: Vec<TrajectorySample>) -> Option<Self> {
        (!samples.is_empty() && samples.windows(2).all(|w| w[1].t > w[0].t)).then_some(Self { samples })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().unwrap().t
    }

    pub fn horizon(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Reference (arc, speed, accel) at time `t`; the acceleration of each
    /// sample is held until the next one, and the end is extrapolated at
    /// constant speed.
    pub fn reference_at(&self, t: f64) -> (f64, f64, f64) {
        let s = &self.samples;
        if t <= s[0].t {
            return (s[0].arc, s[0].speed, s[0].accel);
        }
        let last = s.last().unwrap();
        if t >= last.t {
            return (last.arc + last.speed * (t - last.t), last.speed, 0.0);
        }
        let i = s.partition_point(|x| x.t <= t) - 1;
        let (a, b) = (&s[i], &s[i + 1]);
        let f = (t - a.t) / (b.t - a.t);
        (
            a.arc + f * (b.arc - a.arc),
            a.speed + f * (b.speed - a.speed),
            a.accel + f * (b.accel - a.accel),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateKind {
    Anchored { duration: f64, speed: f64 },
    VelocityKeeping { duration: f64, speed: f64 },
    Cruise,
    Follow,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongSample {
    /// Seconds from the planning time.
    pub t: f64,
    pub s: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub profile: Vec<LongSample>,
    pub anchor_time_error: f64,
    pub anchor_speed_error: f64,
    /// Mean squared acceleration over the squared limit.
    pub accel_term: f64,
    /// Mean squared jerk over (10 m/s³)².
    pub jerk_term: f64,
    pub limit_term: f64,
    pub feasible: bool,
}

impl Candidate {
    pub fn cost(&self, w: &CostWeights) -> f64 {
        w.anchor_time * self.anchor_time_error * self.anchor_time_error
            + w.anchor_speed * self.anchor_speed_error * self.anchor_speed_error
            + w.accel * self.accel_term
            + w.jerk * self.jerk_term
            + w.limit_deviation * self.limit_term
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    pub kind: CandidateKind,
    pub cost: f64,
    /// No candidate met the hard limits (or the lead needs more braking
    /// than allowed).
    pub infeasible: bool,
    pub follow_engaged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanError {
    OffPath { arc: f64, length: f64 },
    AnchorBehind { anchor_arc: f64, ego_arc: f64 },
    AnchorExpired { remaining: f64 },
    InvalidState,
    InvalidWeights,
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::OffPath { arc, length } => write!(f, "ego arc {arc:.2} m outside path of length {length:.2} m"),
            PlanError::AnchorBehind { anchor_arc, ego_arc } => {
                write!(f, "anchor at {anchor_arc:.2} m lies behind the ego at {ego_arc:.2} m")
            }
            PlanError::AnchorExpired { remaining } => write!(f, "anchor time passed {:.2} s ago", -remaining),
            PlanError::InvalidState => write!(f, "ego state is not finite or has negative speed"),
            PlanError::InvalidWeights => write!(f, "cost weights must be non-negative with one positive"),
        }
    }
}

/// Per-path speed cap anticipating curvature and the speed bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedCap {
    step: f64,
    values: Vec<f64>,
}

impl SpeedCap {
    pub fn new(obj: &MotionPlanningObjective, lateral_accel: f64, decel: f64) -> Self {
        let path = obj.path();
        let step = 0.5;
        let n = (path.length() / step) as usize + 1;
        let mut values: Vec<f64> = (0..=n)
            .map(|i| {
                let s = (i as f64 * step).min(path.length());
                let k = path.curvature_at(s).abs();
                let curve = if k > 1e-9 { math::sqrt(lateral_accel / k) } else { f64::INFINITY };
                curve.min(obj.speed_bound_at(s))
            })
            .collect();
        for i in (0..n).rev() {
            values[i] = values[i].min(math::sqrt(values[i + 1] * values[i + 1] + 2.0 * decel * step));
        }
        Self { step, values }
    }

    pub fn at(&self, s: f64) -> f64 {
        let i = ((s.max(0.0) / self.step) as usize).min(self.values.len() - 1);
        self.values[i]
    }
}

struct Context<'a> {
    obj: &'a MotionPlanningObjective,
    cfg: &'a PlannerConfig,
    cap: SpeedCap,
    steps: usize,
}

impl Context<'_> {
    fn tail_accel(&self, s: f64, v: f64) -> f64 {
        let target = self.cap.at(s + v * self.cfg.tail_preview);
        (self.cfg.tail_gain * (target - v)).clamp(-self.cfg.tail_max_decel, self.cfg.tail_max_accel)
    }

    /// Completes `profile` up to the horizon with the velocity-keeping law,
    /// starting from the exact state (t, s, v) which may lie between grid times.
    fn extend(&self, profile: &mut Vec<LongSample>, mut t: f64, mut s: f64, mut v: f64, law: &dyn Fn(f64, f64, f64) -> f64) {
        let dt = self.cfg.dt;
        let mut k = profile.len();
        while k <= self.steps {
            let tk = k as f64 * dt;
            let a = law(t, s, v);
            let h = tk - t;
            if h > 1e-12 {
                let (ns, nv) = advance(s, v, a, h);
                s = ns;
                v = nv;
                t = tk;
            }
            let a_next = law(t, s, v);
            profile.push(LongSample { t: tk, s, v, a: a_next });
            k += 1;
        }
    }

    fn cruise_law(&self) -> impl Fn(f64, f64, f64) -> f64 + '_ {
        move |_, s, v| self.tail_accel(s, v)
    }

    fn evaluate(&self, kind: CandidateKind, profile: Vec<LongSample>, anchor: Option<(f64, f64, f64, f64)>) -> Candidate {
        let cfg = self.cfg;
        let path = self.obj.path();
        let mut feasible = true;
        let (mut a2, mut j2, mut lim) = (0.0, 0.0, 0.0);
        for (i, x) in profile.iter().enumerate() {
            let k = path.curvature_at(x.s.min(path.length())).abs();
            let bound = self.obj.speed_bound_at(x.s.min(path.length()));
            if x.a.abs() > cfg.max_accel + 1e-9
                || x.v < -1e-9
                || x.v > bound + cfg.speed_tolerance
                || x.v * x.v * k > cfg.max_lateral_accel + 1e-9
                || !x.s.is_finite()
            {
                feasible = false;
            }
            a2 += x.a * x.a;
            if i > 0 {
                let j = (x.a - profile[i - 1].a) / cfg.dt;
                j2 += j * j;
            }
            let c = self.cap.at(x.s).max(1.0);
            lim += ((c - x.v) / c) * ((c - x.v) / c);
        }
        let n = profile.len() as f64;
        let (te, ve, with_anchor) = match anchor {
            Some((t_target, v_target, t, v)) => (t - t_target, v - v_target, true),
            None => (0.0, 0.0, false),
        };
        Candidate {
            kind,
            profile,
            anchor_time_error: te,
            anchor_speed_error: ve,
            accel_term: a2 / n / (cfg.max_accel * cfg.max_accel),
            jerk_term: j2 / n.max(2.0) / 100.0,
            limit_term: if with_anchor { 0.0 } else { lim / n },
            feasible,
        }
    }
}

fn advance(s: f64, v: f64, a: f64, h: f64) -> (f64, f64) {
    if v + a * h >= 0.0 {
        (s + v * h + 0.5 * a * h * h, v + a * h)
    } else {
        // Comes to rest within the step.
        (s + v * v / (2.0 * -a), 0.0)
    }
}

/// Quintic s(t) with the given boundary positions, speeds and accelerations.
pub fn quintic(s0: f64, v0: f64, a0: f64, s1: f64, v1: f64, a1: f64, t: f64) -> [f64; 6] {
    let ds = s1 - s0;
    let (t2, t3) = (t * t, t * t * t);
    let c3 = (20.0 * ds - (8.0 * v1 + 12.0 * v0) * t - (3.0 * a0 - a1) * t2) / (2.0 * t3);
    let c4 = (-30.0 * ds + (14.0 * v1 + 16.0 * v0) * t + (3.0 * a0 - 2.0 * a1) * t2) / (2.0 * t3 * t);
    let c5 = (12.0 * ds - 6.0 * (v1 + v0) * t + (a1 - a0) * t2) / (2.0 * t3 * t2);
    [s0, v0, a0 / 2.0, c3, c4, c5]
}

/// Quartic s(t) reaching speed `v1` with zero acceleration at `t`.
pub fn quartic(s0: f64, v0: f64, a0: f64, v1: f64, t: f64) -> [f64; 6] {
    let a = v1 - v0 - a0 * t;
    let b = -a0;
    let c3 = a / (t * t) - b / (3.0 * t);
    let c4 = (b - 6.0 * c3 * t) / (12.0 * t * t);
    [s0, v0, a0 / 2.0, c3, c4, 0.0]
}

/// Position, speed and acceleration of a polynomial at `t`.
pub fn poly_eval(c: &[f64; 6], t: f64) -> (f64, f64, f64) {
    let s = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
    let v = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
    let a = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
    (s, v, a)
}

/// Arc of the first anchor on the objective path.
pub fn anchor_arc(obj: &MotionPlanningObjective) -> Option<f64> {
    obj.anchors().first().map(|a| obj.path().project(a.position).arc)
}

fn context<'a>(obj: &'a MotionPlanningObjective, now: f64, ego: &EgoState, cfg: &'a PlannerConfig) -> Result<Context<'a>, PlanError> {
    if !(ego.arc.is_finite() && ego.speed.is_finite() && ego.accel.is_finite()) || ego.speed < 0.0 {
        return Err(PlanError::InvalidState);
    }
    let length = obj.path().length();
    if ego.arc < -1e-6 || ego.arc > length + 1e-6 {
        return Err(PlanError::OffPath { arc: ego.arc, length });
    }
    let mut horizon = cfg.horizon;
    if let (Some(t_abs), Some(s_a)) = (obj.anchor_time(), anchor_arc(obj)) {
        let remaining = t_abs - now;
        if remaining <= 0.0 {
            return Err(PlanError::AnchorExpired { remaining });
        }
        if s_a <= ego.arc {
            return Err(PlanError::AnchorBehind { anchor_arc: s_a, ego_arc: ego.arc });
        }
        let longest = remaining + cfg.anchor_time_offsets.iter().copied().fold(0.0, f64::max);
        horizon = horizon.max(longest + 1.0);
    }
    let steps = math::round(horizon / cfg.dt) as usize;
    Ok(Context {
        obj,
        cfg,
        cap: SpeedCap::new(obj, cfg.cap_lateral_accel, cfg.cap_decel),
        steps,
    })
}

fn polynomial_candidate(ctx: &Context<'_>, kind: CandidateKind, c: &[f64; 6], duration: f64, anchor: Option<(f64, f64)>) -> Candidate {
    let dt = ctx.cfg.dt;
    let mut profile = Vec::with_capacity(ctx.steps + 1);
    let mut k = 0;
    while k <= ctx.steps && (k as f64 * dt) <= duration + 1e-9 {
        let t = k as f64 * dt;
        let (s, v, a) = poly_eval(c, t);
        profile.push(LongSample { t, s, v, a });
        k += 1;
    }
    let (s1, v1, _) = poly_eval(c, duration);
    let law = ctx.cruise_law();
    ctx.extend(&mut profile, duration, s1, v1.max(0.0), &law);
    let anchor = anchor.map(|(t_target, v_target)| (t_target, v_target, duration, v1));
    let mut cand = ctx.evaluate(kind, profile, anchor);
    cand.feasible &= dense_feasible(ctx, c, duration);
    cand
}

/// Checks the hard limits of the polynomial part between grid samples.
fn dense_feasible(ctx: &Context<'_>, c: &[f64; 6], duration: f64) -> bool {
    let cfg = ctx.cfg;
    let path = ctx.obj.path();
    let n = ((duration / cfg.dt) * 10.0) as usize + 10;
    (0..=n).all(|i| {
        let (s, v, a) = poly_eval(c, duration * i as f64 / n as f64);
        let sc = s.clamp(0.0, path.length());
        a.abs() <= cfg.max_accel + 1e-9
            && v >= -1e-9
            && v <= ctx.obj.speed_bound_at(sc) + cfg.speed_tolerance
            && v * v * path.curvature_at(sc).abs() <= cfg.max_lateral_accel + 1e-9
    })
}

/// Every candidate the planner considers for this objective, in a fixed order.
pub fn candidates(obj: &MotionPlanningObjective, now: f64, ego: &EgoState, cfg: &PlannerConfig) -> Result<Vec<Candidate>, PlanError> {
    let ctx = context(obj, now, ego, cfg)?;
    Ok(candidates_in(&ctx, ego, now))
}

fn candidates_in(ctx: &Context<'_>, ego: &EgoState, now: f64) -> Vec<Candidate> {
    let cfg = ctx.cfg;
    let obj = ctx.obj;
    let mut out = Vec::new();
    if let (Some(anchor), Some(s_a)) = (obj.anchors().first(), anchor_arc(obj)) {
        let remaining = obj.anchor_time().unwrap() - now;
        for &dt_off in &cfg.anchor_time_offsets {
            let duration = remaining + dt_off;
            if duration <= 0.05 {
                continue;
            }
            let cap_a = ctx.cap.at(s_a);
            let mut ends: Vec<f64> = cfg.anchor_speed_offsets.iter().map(|dv| (anchor.speed + dv).min(cap_a)).collect();
            ends.sort_by(f64::total_cmp);
            ends.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            for &v1 in &ends {
                if v1 < 0.0 {
                    continue;
                }
                let c = quintic(ego.arc, ego.speed, ego.accel, s_a, v1, 0.0, duration);
                out.push(polynomial_candidate(
                    ctx,
                    CandidateKind::Anchored { duration, speed: v1 },
                    &c,
                    duration,
                    Some((remaining, anchor.speed)),
                ));
            }
        }
        // The anchor is soft: profiles that miss it exactly still compete,
        // scored by when and how fast they pass the anchor arc.
        let target = (remaining, anchor.speed);
        for mut c in unanchored(ctx, ego) {
            let (te, ve) = match crossing(&c.profile, s_a) {
                Some((t, v)) => (t - target.0, v - target.1),
                None => (ctx.steps as f64 * cfg.dt + MISSED_ANCHOR_PENALTY - target.0, -target.1),
            };
            c.anchor_time_error = te;
            c.anchor_speed_error = ve;
            c.limit_term = 0.0;
            out.push(c);
        }
        return out;
    }
    unanchored(ctx, ego)
}

/// Extra seconds charged to a profile that never reaches the anchor arc.
const MISSED_ANCHOR_PENALTY: f64 = 5.0;

/// Time and speed at which `profile` first reaches arc `s`.
fn crossing(profile: &[LongSample], s: f64) -> Option<(f64, f64)> {
    profile.windows(2).find(|w| w[1].s >= s && w[0].s < s).map(|w| {
        let f = (s - w[0].s) / (w[1].s - w[0].s);
        (w[0].t + f * (w[1].t - w[0].t), w[0].v + f * (w[1].v - w[0].v))
    })
}

fn unanchored(ctx: &Context<'_>, ego: &EgoState) -> Vec<Candidate> {
    let cfg = ctx.cfg;
    let obj = ctx.obj;
    let mut out = Vec::new();
    let bound = obj.speed_bound_at(ego.arc);
    let mut speeds = Vec::new();
    let mut v = 0.0;
    while v < bound - 1e-9 {
        speeds.push(v);
        v += cfg.keep_speed_step;
    }
    speeds.push(bound);
    let cap_here = ctx.cap.at(ego.arc);
    if speeds.iter().all(|x| (x - cap_here).abs() > 1e-6) {
        speeds.push(cap_here);
    }
    for &duration in &cfg.keep_times {
        for &v1 in &speeds {
            let c = quartic(ego.arc, ego.speed, ego.accel, v1, duration);
            out.push(polynomial_candidate(ctx, CandidateKind::VelocityKeeping { duration, speed: v1 }, &c, duration, None));
        }
    }
    let mut profile = Vec::with_capacity(ctx.steps + 1);
    let law = ctx.cruise_law();
    profile.push(LongSample { t: 0.0, s: ego.arc, v: ego.speed, a: law(0.0, ego.arc, ego.speed) });
    ctx.extend(&mut profile, 0.0, ego.arc, ego.speed, &law);
    out.push(ctx.evaluate(CandidateKind::Cruise, profile, None));
    out
}

/// Profile regulating the time gap to `lead`, which is predicted at constant speed.
fn follow_profile(ctx: &Context<'_>, ego: &EgoState, lead: Lead) -> Vec<LongSample> {
    let cfg = ctx.cfg;
    let law = move |t: f64, s: f64, v: f64| {
        let gap = lead.gap + lead.speed * t - (s - ego.arc);
        cfg.follow
            .law
            .accel(gap, v, lead.speed, cfg.max_accel)
            .min(ctx.tail_accel(s, v))
            .max(-cfg.max_accel)
    };
    let mut profile = Vec::with_capacity(ctx.steps + 1);
    profile.push(LongSample { t: 0.0, s: ego.arc, v: ego.speed, a: law(0.0, ego.arc, ego.speed) });
    ctx.extend(&mut profile, 0.0, ego.arc, ego.speed, &law);
    profile
}

/// Standalone time-gap law: commanded acceleration and whether the
/// required braking exceeds the limit.
pub fn follow_mode(lead: Lead, ego_speed: f64, cfg: &PlannerConfig) -> (f64, bool) {
    assert!(lead.gap >= 0.0, "negative gap to the lead vehicle");
    let law = &cfg.follow.law;
    let a = law.accel(lead.gap, ego_speed, lead.speed, cfg.max_accel);
    (a, law.required_decel(lead.gap, ego_speed, lead.speed) > cfg.max_accel)
}

fn fallback(ctx: &Context<'_>, ego: &EgoState) -> Vec<LongSample> {
    let a_max = ctx.cfg.max_accel;
    let law = move |_: f64, _: f64, v: f64| if v > 0.0 { -a_max } else { 0.0 };
    let mut profile = Vec::with_capacity(ctx.steps + 1);
    profile.push(LongSample { t: 0.0, s: ego.arc, v: ego.speed, a: law(0.0, 0.0, ego.speed) });
    ctx.extend(&mut profile, 0.0, ego.arc, ego.speed, &law);
    profile
}

pub fn plan_trajectory(
    obj: &MotionPlanningObjective,
    now: f64,
    ego: &EgoState,
    lead: Option<Lead>,
    weights: &CostWeights,
    cfg: &PlannerConfig,
) -> Result<PlanResult, PlanError> {
    if !weights.is_valid() {
        return Err(PlanError::InvalidWeights);
    }
    let ctx = context(obj, now, ego, cfg)?;
    let cands = candidates_in(&ctx, ego, now);
    let best = cands
        .iter()
        .filter(|c| c.feasible)
        .map(|c| (c.cost(weights), c))
        .fold(None::<(f64, &Candidate)>, |acc, (cost, c)| match acc {
            Some((b, _)) if b <= cost => acc,
            _ => Some((cost, c)),
        });

    let lead = lead.filter(|l| l.gap <= cfg.follow.range);
    if let Some(lead) = lead {
        let follow = follow_profile(&ctx, ego, lead);
        let ahead = |p: &[LongSample]| {
            p.iter()
                .zip(&follow)
                .take_while(|(x, _)| x.t <= cfg.follow.window + 1e-9)
                .any(|(x, f)| x.s > f.s + cfg.follow.margin)
        };
        if best.is_none_or(|(_, c)| ahead(&c.profile)) {
            let (_, infeasible) = follow_mode(Lead { gap: lead.gap.max(0.0), ..lead }, ego.speed, cfg);
            let cand = ctx.evaluate(CandidateKind::Follow, follow, None);
            return Ok(PlanResult {
                trajectory: to_trajectory(obj.path(), now, &cand.profile),
                kind: CandidateKind::Follow,
                cost: cand.cost(weights),
                infeasible,
                follow_engaged: true,
            });
        }
    }

    Ok(match best {
        Some((cost, c)) => PlanResult {
            trajectory: to_trajectory(obj.path(), now, &c.profile),
            kind: c.kind,
            cost,
            infeasible: false,
            follow_engaged: false,
        },
        None => PlanResult {
            trajectory: to_trajectory(obj.path(), now, &fallback(&ctx, ego)),
            kind: CandidateKind::Fallback,
            cost: f64::INFINITY,
            infeasible: true,
            follow_engaged: false,
        },
    })
}

fn to_trajectory(path: &Polyline, now: f64, profile: &[LongSample]) -> Trajectory {
    let len = path.length();
    let samples = profile
        .iter()
        .map(|x| {
            let p = point_beyond(path, x.s);
            let sc = x.s.clamp(0.0, len);
            TrajectorySample {
                t: now + x.t,
                arc: x.s,
                pose: Pose::new(p.x, p.y, path.heading_at(sc)),
                speed: x.v.max(0.0),
                accel: x.a,
                curvature: if x.s > len { 0.0 } else { path.curvature_at(sc) },
            }
        })
        .collect();
    Trajectory::new(samples).expect("profile times increase")
}

/// Nearest vehicle ahead on `path` within range, aligned with the path and
/// laterally inside the follow corridor. `others` yields (pose, speed).
pub fn find_lead<I>(path: &Polyline, ego_arc: f64, others: I, cfg: &PlannerConfig) -> Option<Lead>
where
    I: IntoIterator<Item = (Pose, f64)>,
{
    let mut best: Option<Lead> = None;
    for (pose, speed) in others {
        let pr = path.project(pose.position());
        let ahead = pr.arc - ego_arc;
        let aligned = math::normalize_angle(path.heading_at(pr.arc) - pose.heading).abs() < FRAC_PI_4;
        let beyond_end = pr.arc >= path.length() - 1e-9 && pose.position().distance(path.point_at(pr.arc)) > cfg.follow.lateral;
        if ahead <= 0.0 || pr.distance > cfg.follow.lateral || !aligned || beyond_end {
            continue;
        }
        let gap = ahead - cfg.vehicle_length;
        if gap > cfg.follow.range {
            continue;
        }
        if best.is_none_or(|b| gap < b.gap) {
            best = Some(Lead { gap: gap.max(0.0), speed });
        }
    }
    best
}

/// Unit helper for tests and callers that need positions along a path.
pub fn path_point(path: &Polyline, arc: f64) -> Vec2 {
    point_beyond(path, arc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envmodel::{AnchorPoint, VehicleId};
    use alloc::vec;

    fn straight(len: f64) -> Polyline {
        Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(len, 0.0)]).unwrap()
    }

    fn objective(anchor: Option<(f64, f64, f64)>) -> MotionPlanningObjective {
        let anchors = anchor
            .map(|(s, dt, v)| vec![AnchorPoint { position: Vec2::new(s, 0.0), dt, speed: v }])
            .unwrap_or_default();
        MotionPlanningObjective::new(VehicleId(1), 0.0, straight(200.0), vec![10.0], anchors).unwrap()
    }

    fn check_limits(tr: &Trajectory, cfg: &PlannerConfig, bound: f64) {
        for x in tr.samples() {
            assert!(x.accel.abs() <= cfg.max_accel + 1e-9);
            assert!(x.speed >= 0.0 && x.speed <= bound + cfg.speed_tolerance);
            assert!(x.speed * x.speed * x.curvature.abs() <= cfg.max_lateral_accel + 1e-9);
        }
    }

    /// Solves the 6x6 boundary-value system by Gaussian elimination.
    #[allow(clippy::needless_range_loop)]
    fn quintic_oracle(b: [f64; 6], t: f64) -> [f64; 6] {
        let row = |t: f64, d: usize| -> [f64; 6] {
            let mut r = [0.0; 6];
            for (k, x) in r.iter_mut().enumerate() {
                if k >= d {
                    let mut c = 1.0;
                    for m in 0..d {
                        c *= (k - m) as f64;
                    }
                    *x = c * libm::pow(t, (k - d) as f64);
                }
            }
            r
        };
        let mut m = [row(0.0, 0), row(0.0, 1), row(0.0, 2), row(t, 0), row(t, 1), row(t, 2)];
        let mut rhs = b;
        for col in 0..6 {
            let p = (col..6).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
            m.swap(col, p);
            rhs.swap(col, p);
            for r in 0..6 {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    for c in 0..6 {
                        m[r][c] -= f * m[col][c];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
        let mut x = [0.0; 6];
        for i in 0..6 {
            x[i] = rhs[i] / m[i][i];
        }
        x
    }

    #[test]
    fn quintic_matches_linear_solve() {
        let c = quintic(0.0, 10.0, 0.0, 50.0, 10.0, 0.0, 6.0);
        let o = quintic_oracle([0.0, 10.0, 0.0, 50.0, 10.0, 0.0], 6.0);
        for (a, b) in c.iter().zip(&o) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn anchor_hit_with_quintic_oracle() {
        let cfg = PlannerConfig::default();
        let obj = objective(Some((50.0, 6.0, 10.0)));
        let ego = EgoState { arc: 0.0, speed: 10.0, accel: 0.0 };
        let r = plan_trajectory(&obj, 0.0, &ego, None, &CostWeights::default(), &cfg).unwrap();
        assert!(!r.infeasible);
        check_limits(&r.trajectory, &cfg, 10.0);
        let (s, v, _) = r.trajectory.reference_at(6.0);
        assert!((s - 50.0).abs() <= 0.5 && (v - 10.0).abs() <= 0.2, "{s} {v}");
        let o = quintic_oracle([0.0, 10.0, 0.0, 50.0, 10.0, 0.0], 6.0);
        let mut c = [0.0; 6];
        c.copy_from_slice(&o);
        let (so, vo, _) = poly_eval(&c, 6.0);
        assert!((s - so).abs() <= 0.5 && (v - vo).abs() <= 0.2);
    }

    #[test]
    fn at_the_anchor_moment_cost_vanishes() {
        let cfg = PlannerConfig::default();
        // Anchor 0.1 m ahead, reached in 0.01 s at constant speed.
        let obj = objective(Some((50.1, 0.01, 10.0)));
        let ego = EgoState { arc: 50.0, speed: 10.0, accel: 0.0 };
        let r = candidates(&obj, 0.0, &ego, &cfg).unwrap();
        assert!(r.iter().all(|c| !matches!(c.kind, CandidateKind::Anchored { duration, .. } if duration <= 0.05)));
        let obj = objective(Some((51.0, 0.1, 10.0)));
        let r = plan_trajectory(&obj, 0.0, &ego, None, &CostWeights::default(), &cfg).unwrap();
        assert!(r.cost < 1e-6, "{}", r.cost);
        assert!(r.trajectory.samples().iter().take(2).all(|x| (x.speed - 10.0).abs() < 1e-9));
    }

    #[test]
    fn unreachable_anchor_is_missed_within_limits() {
        let cfg = PlannerConfig::default();
        let obj = objective(Some((5.0, 0.1, 0.0)));
        let ego = EgoState { arc: 0.0, speed: 0.0, accel: 0.0 };
        let r = plan_trajectory(&obj, 0.0, &ego, None, &CostWeights::default(), &cfg).unwrap();
        assert!(!r.infeasible);
        assert!(!matches!(r.kind, CandidateKind::Anchored { .. }));
        check_limits(&r.trajectory, &cfg, 10.0);
    }

    #[test]
    fn overspeed_falls_back_to_braking() {
        let cfg = PlannerConfig::default();
        let obj = objective(Some((80.0, 4.0, 10.0)));
        let ego = EgoState { arc: 0.0, speed: 15.0, accel: 0.0 };
        let r = plan_trajectory(&obj, 0.0, &ego, None, &CostWeights::default(), &cfg).unwrap();
        assert!(r.infeasible);
        assert_eq!(r.kind, CandidateKind::Fallback);
        let s = r.trajectory.samples();
        assert!(s.windows(2).all(|w| w[1].speed <= w[0].speed));
        assert!((s[1].speed - (15.0 - cfg.max_accel * cfg.dt)).abs() < 1e-9);
    }

    #[test]
    fn unanchored_reaches_the_limit() {
        let cfg = PlannerConfig::default();
        let obj = objective(None);
        let ego = EgoState { arc: 0.0, speed: 5.0, accel: 0.0 };
        let r = plan_trajectory(&obj, 0.0, &ego, None, &CostWeights::default(), &cfg).unwrap();
        check_limits(&r.trajectory, &cfg, 10.0);
        assert!(r.trajectory.samples().last().unwrap().speed > 9.5);
    }

    #[test]
    fn follow_mode_cases() {
        let cfg = PlannerConfig::default();
        let law = cfg.follow.law;
        assert_eq!(follow_mode(Lead { gap: law.desired_gap(7.0), speed: 7.0 }, 7.0, &cfg), (0.0, false));
        assert_eq!(follow_mode(Lead { gap: 10.0, speed: 0.0 }, 10.0, &cfg), (-3.5, true));

        let obj = objective(None);
        let ego = EgoState { arc: 20.0, speed: 10.0, accel: 0.0 };
        let r = plan_trajectory(&obj, 0.0, &ego, Some(Lead { gap: 10.0, speed: 0.0 }), &CostWeights::default(), &cfg)
            .unwrap();
        assert!(r.follow_engaged && r.infeasible);
        assert!(r.trajectory.samples()[0].accel <= -3.0);

        let far = Some(Lead { gap: 80.0, speed: 0.0 });
        let r = plan_trajectory(&obj, 0.0, &ego, far, &CostWeights::default(), &cfg).unwrap();
        assert!(!r.follow_engaged);
    }

    #[test]
    fn expired_and_passed_anchors_are_rejected() {
        let cfg = PlannerConfig::default();
        let obj = objective(Some((50.0, 3.0, 10.0)));
        let ego = EgoState { arc: 10.0, speed: 10.0, accel: 0.0 };
        assert!(matches!(
            plan_trajectory(&obj, 3.5, &ego, None, &CostWeights::default(), &cfg),
            Err(PlanError::AnchorExpired { .. })
        ));
        let ego = EgoState { arc: 60.0, ..ego };
        assert!(matches!(
            plan_trajectory(&obj, 1.0, &ego, None, &CostWeights::default(), &cfg),
            Err(PlanError::AnchorBehind { .. })
        ));
    }

    #[test]
    fn replanning_from_the_plan_is_continuous() {
        let cfg = PlannerConfig::default();
        let w = CostWeights::default();
        let obj = objective(Some((60.0, 7.0, 6.0)));
        let first = plan_trajectory(&obj, 0.0, &EgoState { arc: 0.0, speed: 10.0, accel: 0.0 }, None, &w, &cfg).unwrap();
        let (s, v, a) = first.trajectory.reference_at(1.0);
        let second = plan_trajectory(&obj, 1.0, &EgoState { arc: s, speed: v, accel: a }, None, &w, &cfg).unwrap();
        for x in second.trajectory.samples().iter().take_while(|x| x.t <= 1.5 + 1e-9) {
            let (s_old, _, _) = first.trajectory.reference_at(x.t);
            assert!((x.arc - s_old).abs() < 0.3, "{} vs {s_old}", x.arc);
        }
    }

    #[test]
    fn lead_detection() {
        let cfg = PlannerConfig::default();
        let path = straight(200.0);
        let others = vec![
            (Pose::new(40.0, 0.5, 0.0), 5.0),
            (Pose::new(30.0, 3.0, 0.0), 5.0),
            (Pose::new(35.0, 0.0, core::f64::consts::FRAC_PI_2), 5.0),
            (Pose::new(5.0, 0.0, 0.0), 5.0),
        ];
        let lead = find_lead(&path, 10.0, others, &cfg).unwrap();
        assert_eq!(lead, Lead { gap: 25.0, speed: 5.0 });
    }
}
