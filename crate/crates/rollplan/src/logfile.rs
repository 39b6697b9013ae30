//! Episode logs as comma-separated records; objectives go to a companion
//! stream of wire records.

use std::fmt::Write as _;

use rollplan_core::execsim::CollisionEvent;
use rollplan_core::motionplan::CandidateKind;
use rollplan_core::orchestrator::{
    EpisodeLog, Frame, FrameVehicle, MpStats, Outcome, PlanRecord, PlanningRun, PlanningTrigger, RunMode, TriggerKind,
};
use rollplan_core::rollout::{PlanWarning, Termination};
use rollplan_core::{Pose, VehicleId};

use crate::wire::{decode_stream, encode_objective, WireError};

pub const LOG_HEADER: &str = "\
# rollplan episode log, format 1
# One record per line, fields separated by commas, the first names the record.
# Times in seconds, distances in metres, speeds in m/s, accelerations in m/s^2.
#   meta,<key>,<value>           scenario, mode, seed, outcome, end_time, failure_time, failure
#   trigger,<time>,<kind>,<vehicle>,<skipped>
#   run,<trigger kind>,<trigger vehicle>,<snapshot>,<issue>,<vehicles>,<objectives>,<termination>
#   warning,<run index>,<kind>,<vehicle>
#   rejected,<run index>,<vehicle>
#   plan,<time>,<vehicle>,<kind>,<duration>,<speed>,<cost>,<anchored>,<infeasible>,<follow>
#   frame,<t>,<vehicle>,<x>,<y>,<heading>,<speed>,<accel>   (frame,<t> for an empty frame)
#   collision,<time>,<vehicle a>,<vehicle b>,<penetration>
#   exit,<vehicle>,<time>
#   clearance,<vehicle a>,<vehicle b>,<minimum clearance>
#   mp,<plans>,<infeasible plans>,<follow-mode plans>
# The objectives of every run follow, in run order, in the companion .mpo stream.
";

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("log line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("objective stream: {0}")]
    Objectives(#[from] WireError),
    #[error("objective stream holds {found} records, runs reference {expected}")]
    ObjectiveCount { expected: usize, found: usize },
}

pub fn mode_name(m: RunMode) -> &'static str {
    match m {
        RunMode::Single => "single",
        RunMode::Cyclic => "cyclic",
    }
}

pub fn parse_mode(s: &str) -> Option<RunMode> {
    match s {
        "single" => Some(RunMode::Single),
        "cyclic" => Some(RunMode::Cyclic),
        _ => None,
    }
}

fn trigger_fields(k: TriggerKind) -> (&'static str, String) {
    match k {
        TriggerKind::Initial => ("initial", String::new()),
        TriggerKind::NewVehicle(id) => ("new-vehicle", id.to_string()),
        TriggerKind::ConflictRuledOut(id) => ("conflict-ruled-out", id.to_string()),
        TriggerKind::Cyclic => ("cyclic", String::new()),
    }
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Continue => "continue",
        Termination::Done => "done",
        Termination::Timeout => "timeout",
    }
}

/// Log text and objective stream for one episode.
pub fn write_episode(log: &EpisodeLog) -> (String, String) {
    let mut o = String::from(LOG_HEADER);
    let mut mpo = String::new();
    writeln!(o, "meta,scenario,{}", log.scenario.replace([',', '\n'], " ")).unwrap();
    writeln!(o, "meta,mode,{}", mode_name(log.mode)).unwrap();
    writeln!(o, "meta,seed,{}", log.seed).unwrap();
    match &log.outcome {
        Outcome::Completed => writeln!(o, "meta,outcome,completed").unwrap(),
        Outcome::Timeout => writeln!(o, "meta,outcome,timeout").unwrap(),
        Outcome::PlannerFailure { time, message } => {
            writeln!(o, "meta,outcome,planner-failure").unwrap();
            writeln!(o, "meta,failure_time,{time}").unwrap();
            writeln!(o, "meta,failure,{}", message.replace('\n', " ")).unwrap();
        }
    }
    writeln!(o, "meta,end_time,{}", log.end_time).unwrap();
    for t in &log.triggers {
        let (k, v) = trigger_fields(t.kind);
        writeln!(o, "trigger,{},{k},{v},{}", t.time, t.skipped as u8).unwrap();
    }
    for (i, r) in log.runs.iter().enumerate() {
        let (k, v) = trigger_fields(r.trigger);
        writeln!(
            o,
            "run,{k},{v},{},{},{},{},{}",
            r.snapshot_time,
            r.issue_time,
            r.vehicles,
            r.objectives.len(),
            termination_name(r.termination)
        )
        .unwrap();
        for w in &r.warnings {
            match w {
                PlanWarning::NoEntryCrossing(id) => writeln!(o, "warning,{i},no-entry-crossing,{id}").unwrap(),
                PlanWarning::AnchorInPast(id) => writeln!(o, "warning,{i},anchor-in-past,{id}").unwrap(),
            }
        }
        for id in &r.rejected {
            writeln!(o, "rejected,{i},{id}").unwrap();
        }
        for obj in &r.objectives {
            mpo.push_str(&encode_objective(obj));
        }
    }
    for p in &log.plans {
        let (k, d, s) = match p.kind {
            CandidateKind::Anchored { duration, speed } => ("anchored", duration.to_string(), speed.to_string()),
            CandidateKind::VelocityKeeping { duration, speed } => ("velocity-keeping", duration.to_string(), speed.to_string()),
            CandidateKind::Cruise => ("cruise", String::new(), String::new()),
            CandidateKind::Follow => ("follow", String::new(), String::new()),
            CandidateKind::Fallback => ("fallback", String::new(), String::new()),
        };
        writeln!(
            o,
            "plan,{},{},{k},{d},{s},{},{},{},{}",
            p.time, p.vehicle, p.cost, p.anchored as u8, p.infeasible as u8, p.follow as u8
        )
        .unwrap();
    }
    for f in &log.frames {
        if f.vehicles.is_empty() {
            writeln!(o, "frame,{}", f.t).unwrap();
        }
        for v in &f.vehicles {
            writeln!(o, "frame,{},{},{},{},{},{},{}", f.t, v.id, v.pose.x, v.pose.y, v.pose.heading, v.speed, v.accel).unwrap();
        }
    }
    for c in &log.collisions {
        writeln!(o, "collision,{},{},{},{}", c.time, c.vehicles.0, c.vehicles.1, c.penetration).unwrap();
    }
    for (id, t) in &log.exits {
        writeln!(o, "exit,{id},{t}").unwrap();
    }
    for (a, b, c) in &log.min_clearance {
        writeln!(o, "clearance,{a},{b},{c}").unwrap();
    }
    writeln!(o, "mp,{},{},{}", log.mp.plans, log.mp.infeasible, log.mp.follow).unwrap();
    (o, mpo)
}

struct Fields<'a> {
    line: usize,
    it: std::str::Split<'a, char>,
}

impl<'a> Fields<'a> {
    fn err(&self, message: impl Into<String>) -> LogError {
        LogError::Record { line: self.line, message: message.into() }
    }

    fn str(&mut self, what: &str) -> Result<&'a str, LogError> {
        self.it.next().ok_or_else(|| self.err(format!("missing {what}")))
    }

    fn num<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, LogError> {
        let s = self.str(what)?;
        s.parse().map_err(|_| self.err(format!("bad {what} `{s}`")))
    }

    fn id(&mut self, what: &str) -> Result<VehicleId, LogError> {
        self.num(what).map(VehicleId)
    }

    fn flag(&mut self, what: &str) -> Result<bool, LogError> {
        match self.str(what)? {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err(self.err(format!("bad {what} `{s}`"))),
        }
    }

    fn trigger(&mut self) -> Result<TriggerKind, LogError> {
        let kind = self.str("trigger kind")?;
        let vehicle = self.str("trigger vehicle")?;
        let id = || vehicle.parse().map(VehicleId).map_err(|_| self.err(format!("bad trigger vehicle `{vehicle}`")));
        Ok(match kind {
            "initial" => TriggerKind::Initial,
            "cyclic" => TriggerKind::Cyclic,
            "new-vehicle" => TriggerKind::NewVehicle(id()?),
            "conflict-ruled-out" => TriggerKind::ConflictRuledOut(id()?),
            k => return Err(self.err(format!("unknown trigger kind `{k}`"))),
        })
    }

    /// Everything left on the line, commas included.
    fn rest(&mut self) -> String {
        self.it.by_ref().collect::<Vec<_>>().join(",")
    }
}

/// Rebuilds an episode log from `write_episode` output.
pub fn read_episode(text: &str, objectives: &str) -> Result<EpisodeLog, LogError> {
    let mut objs = decode_stream(objectives)?.into_iter();
    let mut log = EpisodeLog {
        scenario: String::new(),
        mode: RunMode::Single,
        seed: 0,
        triggers: Vec::new(),
        runs: Vec::new(),
        plans: Vec::new(),
        frames: Vec::new(),
        collisions: Vec::new(),
        exits: Vec::new(),
        min_clearance: Vec::new(),
        mp: MpStats::default(),
        outcome: Outcome::Completed,
        end_time: 0.0,
    };
    let (mut expected, mut failure_time) = (0usize, 0.0);
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = Fields { line: i + 1, it: line.split(',') };
        match f.str("record")? {
            "meta" => match f.str("key")? {
                "scenario" => log.scenario = f.rest(),
                "mode" => {
                    let m = f.str("mode")?;
                    log.mode = parse_mode(m).ok_or_else(|| f.err(format!("unknown mode `{m}`")))?;
                }
                "seed" => log.seed = f.num("seed")?,
                "outcome" => {
                    log.outcome = match f.str("outcome")? {
                        "completed" => Outcome::Completed,
                        "timeout" => Outcome::Timeout,
                        "planner-failure" => Outcome::PlannerFailure { time: 0.0, message: String::new() },
                        o => return Err(f.err(format!("unknown outcome `{o}`"))),
                    }
                }
                "failure_time" => failure_time = f.num("failure time")?,
                "failure" => log.outcome = Outcome::PlannerFailure { time: failure_time, message: f.rest() },
                "end_time" => log.end_time = f.num("end time")?,
                k => return Err(f.err(format!("unknown meta key `{k}`"))),
            },
            "trigger" => {
                let time = f.num("time")?;
                let kind = f.trigger()?;
                let skipped = f.flag("skipped")?;
                log.triggers.push(PlanningTrigger { kind, time, skipped });
            }
            "run" => {
                let trigger = f.trigger()?;
                let snapshot_time = f.num("snapshot time")?;
                let issue_time = f.num("issue time")?;
                let vehicles = f.num("vehicle count")?;
                let n: usize = f.num("objective count")?;
                let termination = match f.str("termination")? {
                    "continue" => Termination::Continue,
                    "done" => Termination::Done,
                    "timeout" => Termination::Timeout,
                    t => return Err(f.err(format!("unknown termination `{t}`"))),
                };
                expected += n;
                let objectives: Vec<_> = objs.by_ref().take(n).collect();
                if objectives.len() != n {
                    return Err(LogError::ObjectiveCount { expected, found: expected - n + objectives.len() });
                }
                log.runs.push(PlanningRun {
                    trigger,
                    snapshot_time,
                    issue_time,
                    vehicles,
                    objectives,
                    warnings: Vec::new(),
                    termination,
                    rejected: Vec::new(),
                });
            }
            rec @ ("warning" | "rejected") => {
                let idx: usize = f.num("run index")?;
                let err = f.err(format!("run index {idx} out of range"));
                let run = log.runs.get_mut(idx).ok_or(err)?;
                if rec == "rejected" {
                    run.rejected.push(f.id("vehicle")?);
                } else {
                    let kind = f.str("warning kind")?;
                    let id = f.id("vehicle")?;
                    run.warnings.push(match kind {
                        "no-entry-crossing" => PlanWarning::NoEntryCrossing(id),
                        "anchor-in-past" => PlanWarning::AnchorInPast(id),
                        k => return Err(f.err(format!("unknown warning `{k}`"))),
                    });
                }
            }
            "plan" => {
                let time = f.num("time")?;
                let vehicle = f.id("vehicle")?;
                let kind = f.str("plan kind")?;
                let (d, s) = (f.str("duration")?, f.str("speed")?);
                let pair = |f: &Fields| -> Result<(f64, f64), LogError> {
                    Ok((
                        d.parse().map_err(|_| f.err(format!("bad duration `{d}`")))?,
                        s.parse().map_err(|_| f.err(format!("bad speed `{s}`")))?,
                    ))
                };
                let kind = match kind {
                    "anchored" => {
                        let (duration, speed) = pair(&f)?;
                        CandidateKind::Anchored { duration, speed }
                    }
                    "velocity-keeping" => {
                        let (duration, speed) = pair(&f)?;
                        CandidateKind::VelocityKeeping { duration, speed }
                    }
                    "cruise" => CandidateKind::Cruise,
                    "follow" => CandidateKind::Follow,
                    "fallback" => CandidateKind::Fallback,
                    k => return Err(f.err(format!("unknown plan kind `{k}`"))),
                };
                log.plans.push(PlanRecord {
                    time,
                    vehicle,
                    kind,
                    cost: f.num("cost")?,
                    anchored: f.flag("anchored")?,
                    infeasible: f.flag("infeasible")?,
                    follow: f.flag("follow")?,
                    trajectory: None,
                });
            }
            "frame" => {
                let t: f64 = f.num("time")?;
                if line.matches(',').count() == 1 {
                    log.frames.push(Frame { t, vehicles: Vec::new() });
                    continue;
                }
                let v = FrameVehicle {
                    id: f.id("vehicle")?,
                    pose: Pose { x: f.num("x")?, y: f.num("y")?, heading: f.num("heading")? },
                    speed: f.num("speed")?,
                    accel: f.num("accel")?,
                };
                match log.frames.last_mut() {
                    Some(last) if last.t.to_bits() == t.to_bits() => last.vehicles.push(v),
                    _ => log.frames.push(Frame { t, vehicles: vec![v] }),
                }
            }
            "collision" => log.collisions.push(CollisionEvent {
                time: f.num("time")?,
                vehicles: (f.id("vehicle a")?, f.id("vehicle b")?),
                penetration: f.num("penetration")?,
            }),
            "exit" => log.exits.push((f.id("vehicle")?, f.num("time")?)),
            "clearance" => log.min_clearance.push((f.id("vehicle a")?, f.id("vehicle b")?, f.num("clearance")?)),
            "mp" => log.mp = MpStats { plans: f.num("plans")?, infeasible: f.num("infeasible")?, follow: f.num("follow")? },
            r => return Err(f.err(format!("unknown record `{r}`"))),
        }
    }
    let rest = objs.count();
    if rest > 0 {
        return Err(LogError::ObjectiveCount { expected, found: expected + rest });
    }
    Ok(log)
}
