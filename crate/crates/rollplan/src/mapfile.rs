//! TOML map documents.
//!
//! ```toml
//! format_version = 1
//!
//! [right_of_way]
//! rule = "priority-road"      # or "right-before-left"
//! priority_lanes = [1, 3]
//!
//! [[lanes]]
//! id = 1
//! speed_limit = 10.0
//! successors = [101, 102]
//! entry = 100.0               # intersection entry arc, access lanes only
//! points = [[-110.0, -1.75], [-10.0, -1.75]]
//!
//! [[conflicts]]               # optional; derived from geometry when absent
//! lanes = [101, 120]
//! arcs = [8.25, 11.75]
//! kind = "crossing"
//! ```

use std::collections::BTreeMap;

use rollplan_core::envmodel::MapError;
use rollplan_core::geometry::{Polyline, Vec2};
use rollplan_core::{ConflictKind, ConflictPoint, Lane, LaneId, LaneMap, RightOfWay};
use serde::{Deserialize, Serialize};

pub const MAP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum MapFileError {
    #[error("map document: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("map format_version {0} is not supported (expected {MAP_FORMAT_VERSION})")]
    Version(u32),
    #[error("lane {lane}: {message}")]
    Lane { lane: u32, message: String },
    #[error("invalid map: {0}")]
    Map(MapError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    format_version: u32,
    right_of_way: RightOfWayDoc,
    lanes: Vec<LaneDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conflicts: Option<Vec<ConflictDoc>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RightOfWayDoc {
    rule: RuleDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    priority_lanes: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RuleDoc {
    RightBeforeLeft,
    PriorityRoad,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaneDoc {
    id: u32,
    speed_limit: f64,
    successors: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entry: Option<f64>,
    points: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConflictDoc {
    lanes: [u32; 2],
    arcs: [f64; 2],
    kind: KindDoc,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum KindDoc {
    Crossing,
    Merging,
}

pub fn parse_map(text: &str) -> Result<LaneMap, MapFileError> {
    let doc: MapDoc = toml::from_str(text)?;
    if doc.format_version != MAP_FORMAT_VERSION {
        return Err(MapFileError::Version(doc.format_version));
    }
    let mut lanes = Vec::with_capacity(doc.lanes.len());
    let mut entries = BTreeMap::new();
    for l in doc.lanes {
        let id = LaneId(l.id);
        let points = l.points.iter().map(|p| Vec2::new(p[0], p[1])).collect();
        let line = Polyline::new(points).map_err(|e| MapFileError::Lane { lane: l.id, message: e.to_string() })?;
        let succ = l.successors.into_iter().map(LaneId).collect();
        lanes.push(Lane::new(id, line, l.speed_limit, succ).map_err(MapFileError::Map)?);
        if let Some(e) = l.entry {
            entries.insert(id, e);
        }
    }
    let conflicts = doc.conflicts.map(|cs| {
        cs.into_iter()
            .map(|c| ConflictPoint {
                lanes: (LaneId(c.lanes[0]), LaneId(c.lanes[1])),
                arcs: (c.arcs[0], c.arcs[1]),
                kind: match c.kind {
                    KindDoc::Crossing => ConflictKind::Crossing,
                    KindDoc::Merging => ConflictKind::Merging,
                },
            })
            .collect()
    });
    let right_of_way = match doc.right_of_way.rule {
        RuleDoc::RightBeforeLeft => RightOfWay::RightBeforeLeft,
        RuleDoc::PriorityRoad => RightOfWay::PriorityRoad(doc.right_of_way.priority_lanes.into_iter().map(LaneId).collect()),
    };
    LaneMap::new(lanes, entries, conflicts, right_of_way).map_err(MapFileError::Map)
}

/// Writes every conflict point explicitly so the document reloads to the same map.
pub fn map_to_toml(map: &LaneMap) -> String {
    let (rule, priority_lanes) = match map.right_of_way() {
        RightOfWay::RightBeforeLeft => (RuleDoc::RightBeforeLeft, Vec::new()),
        RightOfWay::PriorityRoad(ids) => (RuleDoc::PriorityRoad, ids.iter().map(|l| l.0).collect()),
    };
    let doc = MapDoc {
        format_version: MAP_FORMAT_VERSION,
        right_of_way: RightOfWayDoc { rule, priority_lanes },
        lanes: map
            .lanes()
            .iter()
            .map(|l| LaneDoc {
                id: l.id().0,
                speed_limit: l.speed_limit(),
                successors: l.successors().iter().map(|s| s.0).collect(),
                entry: map.entry(l.id()),
                points: l.centerline().points().iter().map(|p| [p.x, p.y]).collect(),
            })
            .collect(),
        conflicts: Some(
            map.conflicts()
                .iter()
                .map(|c| ConflictDoc {
                    lanes: [c.lanes.0 .0, c.lanes.1 .0],
                    arcs: [c.arcs.0, c.arcs.1],
                    kind: match c.kind {
                        ConflictKind::Crossing => KindDoc::Crossing,
                        ConflictKind::Merging => KindDoc::Merging,
                    },
                })
                .collect(),
        ),
    };
    toml::to_string(&doc).expect("map document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rollplan_core::envmodel::FourArmLayout;

    #[test]
    fn default_layout_round_trips() {
        let map = FourArmLayout::default().build();
        let text = map_to_toml(&map);
        assert_eq!(parse_map(&text).unwrap(), map);
    }

    #[test]
    fn dangling_successor_names_the_lane() {
        let text = r#"
            format_version = 1
            [right_of_way]
            rule = "right-before-left"
            [[lanes]]
            id = 7
            speed_limit = 10.0
            successors = [99]
            points = [[0.0, 0.0], [10.0, 0.0]]
        "#;
        let err = parse_map(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("lane 7") && msg.contains("99"), "{msg}");
    }

    #[test]
    fn conflicts_are_derived_when_absent() {
        let map = FourArmLayout::default().build();
        let text = map_to_toml(&map);
        let cut = text.find("[[conflicts]]").unwrap();
        let derived = parse_map(&text[..cut]).unwrap();
        assert_eq!(derived.conflicts().len(), map.conflicts().len());
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = map_to_toml(&FourArmLayout::default().build()).replace("format_version = 1", "format_version = 2");
        assert!(matches!(parse_map(&text), Err(MapFileError::Version(2))));
    }
}
