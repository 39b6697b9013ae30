//! Generators shared by the round-trip suites.

use std::f64::consts::PI;

use proptest::prelude::*;
use rollplan_core::envmodel::{Arm, FourArmLayout, LaneId, RightOfWay, RouteSpec};
use rollplan_core::execsim::SpeedProfile;
use rollplan_core::geometry::{Polyline, Vec2};
use rollplan_core::scenario::{Scenario, ScenarioKind, ScenarioVehicle};
use rollplan_core::{AnchorPoint, MotionPlanningObjective, VehicleId};

fn polyline() -> impl Strategy<Value = Polyline> {
    (
        (-1e3..1e3f64, -1e3..1e3f64),
        proptest::collection::vec((0.05..50.0f64, -PI..PI), 1..12),
    )
        .prop_map(|(start, steps)| {
            let mut p = Vec2::new(start.0, start.1);
            let mut pts = vec![p];
            for (len, dir) in steps {
                p = p + Vec2::from_angle(dir) * len;
                pts.push(p);
            }
            Polyline::new(pts).unwrap()
        })
}

pub fn objective() -> impl Strategy<Value = MotionPlanningObjective> {
    (
        any::<u32>(),
        -1e4..1e4f64,
        polyline(),
        proptest::collection::vec((0.0..1.0f64, 0.01..60.0f64, 0.0..20.0f64), 0..4),
        proptest::collection::vec(0.01..40.0f64, 12),
    )
        .prop_map(|(id, issued, path, anchors, bounds)| {
            let anchors = anchors
                .into_iter()
                .map(|(f, dt, speed)| AnchorPoint { position: path.point_at(f * path.length()), dt, speed })
                .collect();
            let bounds = bounds[..path.segment_count()].to_vec();
            MotionPlanningObjective::new(VehicleId(id), issued, path, bounds, anchors).unwrap()
        })
}

fn script() -> impl Strategy<Value = SpeedProfile> {
    proptest::collection::vec((0.01..5.0f64, 0.0..15.0f64), 1..6).prop_map(|pts| {
        let mut t = 0.0;
        let pts = pts
            .into_iter()
            .map(|(dt, v)| {
                t += dt;
                (t, v)
            })
            .collect();
        SpeedProfile::new(pts).unwrap()
    })
}

fn scenario_vehicle() -> impl Strategy<Value = ScenarioVehicle> {
    (
        any::<u32>(),
        proptest::collection::vec(any::<u32>(), 1..5),
        (0.0..500.0f64, 0.0..20.0f64, 0.0..30.0f64),
        (any::<bool>(), any::<bool>()),
        proptest::option::of(script()),
    )
        .prop_map(|(id, lanes, (arc, speed, spawn_time), (route_known, controllable), script)| ScenarioVehicle {
            id: VehicleId(id),
            lane: LaneId(lanes[0]),
            arc,
            speed,
            route: RouteSpec::new(lanes.into_iter().map(LaneId).collect()).unwrap(),
            route_known,
            controllable,
            spawn_time,
            script,
        })
}

pub fn scenario() -> impl Strategy<Value = Scenario> {
    (
        "[a-zA-Z0-9 _\\-\"\\\\é]{0,24}",
        "[a-z_]{1,12}",
        any::<bool>(),
        0..=i64::MAX as u64,
        proptest::collection::vec(scenario_vehicle(), 0..8),
    )
        .prop_map(|(name, map, vil, seed, vehicles)| Scenario {
            name,
            map,
            kind: if vil { ScenarioKind::VilScript } else { ScenarioKind::Random },
            seed,
            vehicles,
        })
}

pub fn layout() -> impl Strategy<Value = FourArmLayout> {
    (
        (6.0..20.0f64, 1.0..3.0f64),
        (30.0..150.0f64, 30.0..100.0f64),
        (3.0..20.0f64, 0.2..1.5f64),
        proptest::sample::subsequence(Arm::ALL.to_vec(), 2..=4),
        proptest::option::of(proptest::sample::subsequence(Arm::ALL.to_vec(), 1..=2)),
    )
        .prop_map(|((half_size, lane_offset), (access_length, exit_length), (speed_limit, arc_spacing), access_arms, main)| {
            let mut l = FourArmLayout {
                half_size,
                lane_offset,
                access_length,
                exit_length,
                speed_limit,
                arc_spacing,
                access_arms,
                right_of_way: RightOfWay::RightBeforeLeft,
            };
            let main: Vec<LaneId> = main
                .unwrap_or_default()
                .iter()
                .filter(|a| l.access_arms.contains(a))
                .map(|a| l.access_lane(*a))
                .collect();
            if !main.is_empty() {
                l.right_of_way = RightOfWay::PriorityRoad(main);
            }
            l
        })
}
