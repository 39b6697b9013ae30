use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use super::{Lane, LaneId, LaneMap, RightOfWay, RouteSpec};
use crate::geometry::{Polyline, Vec2};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Arm {
    West,
    South,
    East,
    North,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::West, Arm::South, Arm::East, Arm::North];

    fn index(self) -> u32 {
        match self {
            Arm::West => 0,
            Arm::South => 1,
            Arm::East => 2,
            Arm::North => 3,
        }
    }

    /// Direction from the intersection center towards the arm.
    fn direction(self) -> f64 {
        match self {
            Arm::West => PI,
            Arm::South => -FRAC_PI_2,
            Arm::East => 0.0,
            Arm::North => FRAC_PI_2,
        }
    }

    pub fn opposite(self) -> Arm {
        match self {
            Arm::West => Arm::East,
            Arm::South => Arm::North,
            Arm::East => Arm::West,
            Arm::North => Arm::South,
        }
    }
}

/// Four-arm, one-lane-per-direction intersection with right-hand traffic.
///
/// Arms listed in `access_arms` carry an incoming lane; every arm has an
/// outgoing lane. Connectors are straight segments or quarter-circle arcs.
/// The default leaves the north arm as a one-way exit, which gives three
/// access lanes.
#[derive(Debug, Clone, PartialEq)]
pub struct FourArmLayout {
    /// Distance from the center to the stop line of each arm.
    pub half_size: f64,
    /// Lateral distance of each lane centerline from the road axis.
    pub lane_offset: f64,
    pub access_length: f64,
    pub exit_length: f64,
    pub speed_limit: f64,
    /// Chord length used to sample turning connectors.
    pub arc_spacing: f64,
    pub access_arms: Vec<Arm>,
    pub right_of_way: RightOfWay,
}

impl Default for FourArmLayout {
    fn default() -> Self {
        Self {
            half_size: 10.0,
            lane_offset: 1.75,
            access_length: 100.0,
            exit_length: 60.0,
            speed_limit: 10.0,
            arc_spacing: 0.5,
            access_arms: alloc::vec![Arm::West, Arm::South, Arm::East],
            right_of_way: RightOfWay::RightBeforeLeft,
        }
    }
}

impl FourArmLayout {
    pub fn access_lane(&self, arm: Arm) -> LaneId {
        LaneId(1 + arm.index())
    }

    pub fn exit_lane(&self, arm: Arm) -> LaneId {
        LaneId(11 + arm.index())
    }

    pub fn connector(&self, from: Arm, to: Arm) -> LaneId {
        LaneId(100 + 10 * from.index() + to.index())
    }

    pub fn route(&self, from: Arm, to: Arm) -> RouteSpec {
        RouteSpec::new(alloc::vec![
            self.access_lane(from),
            self.connector(from, to),
            self.exit_lane(to),
        ])
        .unwrap()
    }

    pub fn straight_route(&self, from: Arm) -> RouteSpec {
        self.route(from, from.opposite())
    }

    fn incoming(&self, arm: Arm) -> (Vec2, Vec2, f64) {
        let out = Vec2::from_angle(arm.direction());
        let heading = math::normalize_angle(arm.direction() + PI);
        let side = Vec2::from_angle(heading - FRAC_PI_2) * self.lane_offset;
        let start = out * (self.half_size + self.access_length) + side;
        let end = out * self.half_size + side;
        (start, end, heading)
    }

    fn outgoing(&self, arm: Arm) -> (Vec2, Vec2, f64) {
        let out = Vec2::from_angle(arm.direction());
        let heading = arm.direction();
        let side = Vec2::from_angle(heading - FRAC_PI_2) * self.lane_offset;
        let start = out * self.half_size + side;
        let end = out * (self.half_size + self.exit_length) + side;
        (start, end, heading)
    }

    fn connector_points(&self, from: Arm, to: Arm) -> Vec<Vec2> {
        let (_, p0, h0) = self.incoming(from);
        let (p1, _, h1) = self.outgoing(to);
        let turn = math::normalize_angle(h1 - h0);
        if turn.abs() < 1e-6 {
            return alloc::vec![p0, p1];
        }
        // Quarter arc: the center sits on the inner side of the start pose.
        let sign = if turn > 0.0 { 1.0 } else { -1.0 };
        let normal = Vec2::from_angle(h0 + sign * FRAC_PI_2);
        let radius = (p1 - p0).dot(normal);
        let center = p0 + normal * radius;
        let sweep = turn.abs();
        let n = (libm::ceil(radius * sweep / self.arc_spacing) as usize).max(2);
        (0..=n)
            .map(|k| {
                let phi = sweep * k as f64 / n as f64;
                let from_center = -normal;
                let rotated = rotate(from_center, sign * phi);
                center + rotated * radius
            })
            .collect()
    }

    pub fn build(&self) -> LaneMap {
        let mut lanes = Vec::new();
        let mut entries = BTreeMap::new();
        for &arm in &Arm::ALL {
            let (s, e, _) = self.outgoing(arm);
            lanes.push(lane(self.exit_lane(arm), alloc::vec![s, e], self.speed_limit, Vec::new()));
        }
        for &from in &self.access_arms {
            let (s, e, _) = self.incoming(from);
            let targets: Vec<Arm> = Arm::ALL.iter().copied().filter(|&a| a != from).collect();
            let succ = targets.iter().map(|&to| self.connector(from, to)).collect();
            let access = lane(self.access_lane(from), alloc::vec![s, e], self.speed_limit, succ);
            entries.insert(access.id(), access.length());
            lanes.push(access);
            for to in targets {
                lanes.push(lane(
                    self.connector(from, to),
                    self.connector_points(from, to),
                    self.speed_limit,
                    alloc::vec![self.exit_lane(to)],
                ));
            }
        }
        LaneMap::new(lanes, entries, None, self.right_of_way.clone())
            .expect("four-arm layout is consistent by construction")
    }
}

fn rotate(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = (math::sin(angle), math::cos(angle));
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

fn lane(id: LaneId, points: Vec<Vec2>, limit: f64, successors: Vec<LaneId>) -> Lane {
    Lane::new(id, Polyline::new(points).unwrap(), limit, successors).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turning_connectors_are_quarter_circles() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let right = map.lane(layout.connector(Arm::West, Arm::South)).unwrap();
        let left = map.lane(layout.connector(Arm::West, Arm::North)).unwrap();
        let r_right = layout.half_size - layout.lane_offset;
        let r_left = layout.half_size + layout.lane_offset;
        assert!((right.length() - r_right * FRAC_PI_2).abs() < 0.01);
        assert!((left.length() - r_left * FRAC_PI_2).abs() < 0.01);
        let k = right.centerline().curvature_at(right.length() / 2.0);
        assert!((k + 1.0 / r_right).abs() < 1e-3, "right turns curve clockwise: {k}");
    }

    #[test]
    fn incoming_lane_sits_on_the_right() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let west = map.lane(layout.access_lane(Arm::West)).unwrap();
        let p = west.centerline().points()[0];
        assert!(p.y < 0.0 && p.x < -layout.half_size);
    }
}
