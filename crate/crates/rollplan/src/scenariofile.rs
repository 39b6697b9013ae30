//! TOML scenario documents, one `[[vehicles]]` table per vehicle.
//!
//! ```toml
//! format_version = 1
//! name = "s007-03"
//! map = "four_arm"
//! kind = "random"            # or "vil-script"
//! seed = 7
//!
//! [[vehicles]]
//! id = 1
//! lane = 1
//! arc = 48.5
//! speed = 8.25
//! route = [1, 102, 13]
//! route_known = true
//! controllable = true
//! spawn_time = 0.0
//! script = [[0.0, 8.0]]      # (time, speed) points, scripted regular vehicles only
//! ```

use rollplan_core::execsim::SpeedProfile;
use rollplan_core::scenario::{Scenario, ScenarioKind, ScenarioVehicle};
use rollplan_core::{LaneId, RouteSpec, VehicleId};
use serde::{Deserialize, Serialize};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("scenario document: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("scenario format_version {0} is not supported (expected {SCENARIO_FORMAT_VERSION})")]
    Version(u32),
    #[error("vehicle {0}: route is empty")]
    EmptyRoute(u32),
    #[error("vehicle {0}: script needs increasing times and non-negative speeds")]
    Script(u32),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    format_version: u32,
    name: String,
    map: String,
    kind: KindDoc,
    seed: u64,
    vehicles: Vec<VehicleDoc>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum KindDoc {
    Random,
    VilScript,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleDoc {
    id: u32,
    lane: u32,
    arc: f64,
    speed: f64,
    route: Vec<u32>,
    route_known: bool,
    controllable: bool,
    spawn_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    script: Option<Vec<[f64; 2]>>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioFileError> {
    let doc: ScenarioDoc = toml::from_str(text)?;
    if doc.format_version != SCENARIO_FORMAT_VERSION {
        return Err(ScenarioFileError::Version(doc.format_version));
    }
    let vehicles = doc
        .vehicles
        .into_iter()
        .map(|v| {
            let route = RouteSpec::new(v.route.into_iter().map(LaneId).collect()).ok_or(ScenarioFileError::EmptyRoute(v.id))?;
            let script = match v.script {
                None => None,
                Some(points) => Some(
                    SpeedProfile::new(points.into_iter().map(|p| (p[0], p[1])).collect())
                        .ok_or(ScenarioFileError::Script(v.id))?,
                ),
            };
            Ok(ScenarioVehicle {
                id: VehicleId(v.id),
                lane: LaneId(v.lane),
                arc: v.arc,
                speed: v.speed,
                route,
                route_known: v.route_known,
                controllable: v.controllable,
                spawn_time: v.spawn_time,
                script,
            })
        })
        .collect::<Result<_, ScenarioFileError>>()?;
    Ok(Scenario {
        name: doc.name,
        map: doc.map,
        kind: match doc.kind {
            KindDoc::Random => ScenarioKind::Random,
            KindDoc::VilScript => ScenarioKind::VilScript,
        },
        seed: doc.seed,
        vehicles,
    })
}

pub fn scenario_to_toml(s: &Scenario) -> String {
    let doc = ScenarioDoc {
        format_version: SCENARIO_FORMAT_VERSION,
        name: s.name.clone(),
        map: s.map.clone(),
        kind: match s.kind {
            ScenarioKind::Random => KindDoc::Random,
            ScenarioKind::VilScript => KindDoc::VilScript,
        },
        seed: s.seed,
        vehicles: s
            .vehicles
            .iter()
            .map(|v| VehicleDoc {
                id: v.id.0,
                lane: v.lane.0,
                arc: v.arc,
                speed: v.speed,
                route: v.route.lanes().iter().map(|l| l.0).collect(),
                route_known: v.route_known,
                controllable: v.controllable,
                spawn_time: v.spawn_time,
                script: v.script.as_ref().map(|p| p.points().iter().map(|&(t, v)| [t, v]).collect()),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("scenario document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rollplan_core::envmodel::{Arm, FourArmLayout};
    use rollplan_core::scenario::vil_crossing;

    #[test]
    fn vil_scenario_round_trips() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let s = vil_crossing(&map, layout.straight_route(Arm::West), layout.straight_route(Arm::South), (-55.0, 8.0), (-60.0, 8.0)).unwrap();
        let text = scenario_to_toml(&s);
        assert!(text.contains("vil-script"));
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }

    #[test]
    fn bad_script_is_rejected() {
        let text = r#"
            format_version = 1
            name = "x"
            map = "four_arm"
            kind = "random"
            seed = 0
            [[vehicles]]
            id = 4
            lane = 1
            arc = 10.0
            speed = 5.0
            route = [1]
            route_known = true
            controllable = false
            spawn_time = 0.0
            script = [[1.0, 5.0], [0.5, 5.0]]
        "#;
        assert!(matches!(parse_scenario(text), Err(ScenarioFileError::Script(4))));
    }
}
