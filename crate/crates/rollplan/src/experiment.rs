//! Episode and batch execution on top of the core orchestrator.

use std::fmt::Write as _;

use rayon::prelude::*;
use rollplan_core::envmodel::{Arm, FourArmLayout};
use rollplan_core::execsim::WorldState;
use rollplan_core::orchestrator::{run_episode, EpisodeConfig, EpisodeLog, RunMode};
use rollplan_core::policy::{GnnPolicy, HeuristicPolicy, JointAction, Policy};
use rollplan_core::rollout::{plan, PlanOutput};
use rollplan_core::scenario::{vil_crossing, Scenario};
use rollplan_core::scenegraph::ObservationGraph;
use rollplan_core::LaneMap;

use crate::weightsfile::{parse_weights, WeightsFileError};

/// Behavior policy selected on the command line.
#[derive(Debug, Clone)]
pub enum PolicyChoice {
    Heuristic(HeuristicPolicy),
    Gnn(GnnPolicy),
}

impl Default for PolicyChoice {
    fn default() -> Self {
        PolicyChoice::Heuristic(HeuristicPolicy::default())
    }
}

impl Policy for PolicyChoice {
    fn select_action(&self, obs: &ObservationGraph) -> JointAction {
        match self {
            PolicyChoice::Heuristic(p) => p.select_action(obs),
            PolicyChoice::Gnn(p) => p.select_action(obs),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolicySpecError {
    #[error("unknown policy `{0}`, expected `heuristic` or `gnn:<weights file>`")]
    Unknown(String),
    #[error("cannot read weights file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("weights file {path}: {source}")]
    Weights { path: String, source: WeightsFileError },
}

/// Parses `heuristic` or `gnn:<weights path>`.
pub fn load_policy(spec: &str) -> Result<PolicyChoice, PolicySpecError> {
    if spec == "heuristic" {
        return Ok(PolicyChoice::default());
    }
    let Some(path) = spec.strip_prefix("gnn:") else {
        return Err(PolicySpecError::Unknown(spec.to_string()));
    };
    let text = std::fs::read_to_string(path).map_err(|source| PolicySpecError::Io { path: path.to_string(), source })?;
    let w = parse_weights(&text).map_err(|source| PolicySpecError::Weights { path: path.to_string(), source })?;
    Ok(PolicyChoice::Gnn(GnnPolicy::new(w)))
}

/// The two replanning analyses with a scripted, prioritized crossing object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VilPreset {
    /// Both vehicles 75 m before the conflict point at 10 m/s.
    Easy,
    /// Ego taken over 55 m before the conflict at 8 m/s, object at 8 m/s.
    Late,
}

impl VilPreset {
    pub fn name(self) -> &'static str {
        match self {
            VilPreset::Easy => "vil-easy",
            VilPreset::Late => "vil-late",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "easy" | "vil-easy" => Some(VilPreset::Easy),
            "late" | "vil-late" => Some(VilPreset::Late),
            _ => None,
        }
    }

    /// Ego from the west, object from the south (it comes from the ego's right).
    pub fn scenario(self, layout: &FourArmLayout, map: &LaneMap) -> Option<Scenario> {
        let (ego, object) = match self {
            VilPreset::Easy => ((-75.0, 10.0), (-75.0, 10.0)),
            VilPreset::Late => ((-55.0, 8.0), (-60.0, 8.0)),
        };
        let mut s = vil_crossing(map, layout.straight_route(Arm::West), layout.straight_route(Arm::South), ego, object)?;
        s.name = self.name().to_string();
        s.map = String::from("four_arm");
        Some(s)
    }
}

/// Single-shot and cyclic logs of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedLogs {
    pub scenario: Scenario,
    pub single: EpisodeLog,
    pub cyclic: EpisodeLog,
}

/// Runs every scenario in both modes; scenarios run in parallel, results
/// keep the input order.
pub fn run_batch<P: Policy>(map: &LaneMap, scenarios: &[Scenario], policy: &P, cfg: &EpisodeConfig) -> Vec<PairedLogs> {
    scenarios
        .par_iter()
        .map(|s| PairedLogs {
            scenario: s.clone(),
            single: run_episode(s, map, RunMode::Single, policy, cfg, s.seed),
            cyclic: run_episode(s, map, RunMode::Cyclic, policy, cfg, s.seed),
        })
        .collect()
}

/// Rollout of the scenario's initial environment model, as used by the
/// first planning run.
pub fn initial_rollout<P: Policy + ?Sized>(
    scenario: &Scenario,
    map: &LaneMap,
    policy: &P,
    cfg: &EpisodeConfig,
) -> Result<PlanOutput, String> {
    let mut world = WorldState::new(0.0);
    for v in scenario.vehicles.iter().filter(|v| v.spawn_time == 0.0) {
        v.spawn(&mut world, map).map_err(|e| format!("vehicle {}: {e}", v.id))?;
    }
    let em = world.snapshot().map_err(|e| e.to_string())?;
    plan(&em, map, policy, &cfg.rollout).map_err(|e| e.to_string())
}

/// Per-step rollout samples as delimited text.
pub fn rollout_trace(out: &PlanOutput) -> String {
    let mut o = String::from(
        "# rollout trace: one line per vehicle and 0.2 s step\n# vehicle,t,x,y,heading,speed,accel,arc\n",
    );
    for v in &out.state.vehicles {
        for s in &v.trajectory {
            writeln!(o, "{},{},{},{},{},{},{},{}", v.id, s.t, s.pose.x, s.pose.y, s.pose.heading, s.speed, s.accel, s.arc)
                .unwrap();
        }
    }
    o
}
