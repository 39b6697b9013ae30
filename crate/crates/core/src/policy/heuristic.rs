use alloc::vec::Vec;

use super::{JointAction, Policy, MAX_ACCEL};
use crate::envmodel::VehicleId;
use crate::kinematics::TimeGap;
use crate::scenegraph::{EdgeFeatures, ObservationGraph, RelationKind, VertexFeatures};

/// Rule-based reservation policy.
///
/// Every vehicle tracks its lane speed limit. For each shared conflict zone
/// the pair is ordered: a regular (non-controllable) vehicle involved means
/// the map priority decides; otherwise a vehicle that is committed goes
/// first, then the earlier constant-speed arrival at the zone. The second
/// vehicle brakes with the mildest constant deceleration that delays its zone
/// entry until the first has left the zone plus a headway, waiting at the
/// intersection entry if it has not passed it yet. Followers keep a time gap
/// to their leader.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicPolicy {
    pub tracking_gain: f64,
    /// Upper bound of the speed-tracking acceleration.
    pub tracking_accel: f64,
    /// Time between the holder leaving a zone and the yielder entering it.
    pub headway: f64,
    /// Extra distance a yielding vehicle keeps in front of the zone.
    pub clearance: f64,
    pub vehicle_length: f64,
    /// Speed floor for arrival and exit time estimates.
    pub min_speed: f64,
    pub following: TimeGap,
}

impl Default for HeuristicPolicy {
    fn default() -> Self {
        Self {
            tracking_gain: 0.5,
            tracking_accel: 1.5,
            headway: 1.5,
            clearance: 1.0,
            vehicle_length: 5.0,
            min_speed: 0.5,
            following: TimeGap::default(),
        }
    }
}

impl HeuristicPolicy {
    /// Time until `v` reaches the near edge of a zone whose edge is `room` ahead.
    fn arrival(&self, v: &VertexFeatures, room: f64) -> f64 {
        room.max(0.0) / v.speed.max(self.min_speed)
    }

    /// A vehicle past its intersection entry, inside the zone, or unable to
    /// stop within the clearance beyond its yield line holds the point.
    fn holds(&self, v: &VertexFeatures, room: f64) -> bool {
        let stop = self.yield_line(v, room - self.clearance).max(0.0) + self.clearance;
        v.position >= 0.0 || room <= 0.0 || v.speed * v.speed > 2.0 * MAX_ACCEL * stop
    }

    /// Distance to the yield line: `room` ahead, or short of the intersection
    /// entry by the clearance if that comes first.
    fn yield_line(&self, me: &VertexFeatures, room: f64) -> f64 {
        if me.position < 0.0 {
            room.min(-me.position - self.clearance)
        } else {
            room
        }
    }

    /// Whether `me` must let `other` pass the conflict point first.
    pub fn must_yield(&self, me: &VertexFeatures, other: &VertexFeatures, f: &EdgeFeatures) -> bool {
        let (di, dj) = (f.source_to_conflict, f.target_to_conflict);
        if di < -f.source_zone.after || dj < -f.target_zone.after {
            return false;
        }
        let (ri, rj) = (di - f.source_zone.before, dj - f.target_zone.before);
        if (!me.controllable || !other.controllable) && f.priority != 0 {
            // Regular traffic keeps to the right of way; only occupying the
            // zone overrides it.
            return match (ri <= 0.0, rj <= 0.0) {
                (true, _) => false,
                (false, true) => true,
                (false, false) => f.priority < 0,
            };
        }
        match (self.holds(me, ri), self.holds(other, rj)) {
            (true, _) => false,
            (false, true) => true,
            (false, false) => {
                let (ti, tj) = (self.arrival(me, ri), self.arrival(other, rj));
                if ti != tj {
                    return tj < ti;
                }
                if f.priority != 0 {
                    return f.priority < 0;
                }
                other.id < me.id
            }
        }
    }

    /// Distance to where `me` waits: short of the intersection entry if not
    /// yet passed, else short of the conflict zone.
    pub fn yield_room(&self, me: &VertexFeatures, f: &EdgeFeatures) -> f64 {
        self.yield_line(me, f.source_to_conflict - f.source_zone.before - self.clearance)
    }

    /// Constant acceleration that brings `me` to its yield line no earlier
    /// than the other vehicle's zone exit plus headway.
    pub fn yield_accel(&self, me: &VertexFeatures, other: &VertexFeatures, f: &EdgeFeatures) -> f64 {
        let room = self.yield_room(me, f);
        let v = me.speed;
        if room <= 0.05 {
            return if v > 0.0 { -MAX_ACCEL } else { 0.0 };
        }
        let exit = (f.target_to_conflict + f.target_zone.after).max(0.0) / other.speed.max(self.min_speed);
        let t = exit + self.headway;
        if room >= v * t / 2.0 {
            2.0 * (room - v * t) / (t * t)
        } else {
            -v * v / (2.0 * room)
        }
    }

    /// Ids `id` has to yield to in `obs`.
    pub fn yields_to(&self, obs: &ObservationGraph, id: VehicleId) -> Vec<VehicleId> {
        let Some(me) = obs.vertex(id) else {
            return Vec::new();
        };
        let mut out: Vec<VehicleId> = obs
            .relations_of(id)
            .filter(|(_, f)| f.kind != RelationKind::Following)
            .filter(|(other, f)| self.must_yield(me, obs.vertex(*other).unwrap(), f))
            .map(|(other, _)| other)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn accel_for(&self, obs: &ObservationGraph, me: &VertexFeatures) -> f64 {
        let mut a = (self.tracking_gain * (me.speed_limit - me.speed)).min(self.tracking_accel);
        for (other_id, f) in obs.relations_of(me.id) {
            let other = obs.vertex(other_id).unwrap();
            match f.kind {
                RelationKind::Following => {
                    // Seen from the follower, its own distance is the gap.
                    if f.source_to_conflict > 0.0 {
                        let gap = f.source_to_conflict - self.vehicle_length;
                        a = a.min(self.following.accel(gap, me.speed, other.speed, MAX_ACCEL));
                    }
                }
                RelationKind::Crossing | RelationKind::Merging => {
                    if self.must_yield(me, other, &f) {
                        a = a.min(self.yield_accel(me, other, &f));
                    }
                }
            }
        }
        a
    }
}

impl Policy for HeuristicPolicy {
    fn select_action(&self, obs: &ObservationGraph) -> JointAction {
        JointAction::new(
            obs.vertices()
                .iter()
                .map(|v| (v.id, self.accel_for(obs, v)))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envmodel::ConflictZone;
    use crate::scenegraph::Edge;
    use alloc::vec;

    fn vertex(id: u32, position: f64, speed: f64, controllable: bool) -> VertexFeatures {
        VertexFeatures {
            id: VehicleId(id),
            position,
            speed,
            speed_limit: 10.0,
            controllable,
        }
    }

    const ZONE: f64 = 3.5;

    fn crossing(s: u32, t: u32, ds: f64, dt: f64, priority: i8) -> Edge {
        Edge {
            source: VehicleId(s),
            target: VehicleId(t),
            features: EdgeFeatures {
                kind: RelationKind::Crossing,
                distance: ds + dt,
                priority,
                source_to_conflict: ds,
                target_to_conflict: dt,
                conflict: Some(0),
                source_zone: ConflictZone::symmetric(ZONE),
                target_zone: ConflictZone::symmetric(ZONE),
            },
        }
    }

    #[test]
    fn free_vehicle_tracks_the_limit() {
        let p = HeuristicPolicy::default();
        let g = ObservationGraph::new(
            vec![vertex(1, -50.0, 6.0, true), vertex(2, -40.0, 10.0, true), vertex(3, -30.0, 8.0, true)],
            vec![],
        )
        .unwrap();
        let a = p.select_action(&g);
        assert_eq!(a.get(VehicleId(1)), Some(p.tracking_accel));
        assert_eq!(a.get(VehicleId(2)), Some(0.0));
        assert_eq!(a.get(VehicleId(3)), Some(1.0));
    }

    #[test]
    fn equal_arrival_yielder_hits_the_headway_slot() {
        let p = HeuristicPolicy::default();
        // Ego (1) yields to a regular prioritized object (2), both 75 m out.
        let ego = vertex(1, -63.0, 10.0, true);
        let obj = vertex(2, -63.0, 10.0, false);
        let g = ObservationGraph::new(vec![ego, obj], vec![crossing(1, 2, 75.0, 75.0, -1)]).unwrap();
        let a = p.select_action(&g);
        assert!(a.get(VehicleId(2)).unwrap() >= 0.0);
        let a_ego = a.get(VehicleId(1)).unwrap();
        assert!(a_ego < 0.0);

        // Independent oracle: solve room = v t + a t^2 / 2 for the entry time.
        let room = (75.0 - ZONE - p.clearance).min(63.0 - p.clearance);
        let v = 10.0;
        let disc = v * v + 2.0 * a_ego * room;
        let t_entry = (-v + libm::sqrt(disc)) / a_ego;
        let t_exit = (75.0 + ZONE) / 10.0;
        assert!((t_entry - (t_exit + p.headway)).abs() < 1e-9, "{t_entry} vs {t_exit}");
    }

    #[test]
    fn three_way_order_follows_arrival() {
        let p = HeuristicPolicy::default();
        let vs = vec![vertex(1, -40.0, 8.0, true), vertex(2, -30.0, 9.0, true), vertex(3, -50.0, 10.0, true)];
        let d = [52.0, 41.0, 60.0];
        // Mixed priorities must not matter among controllable vehicles.
        let edges = vec![crossing(1, 2, d[0], d[1], -1), crossing(1, 3, d[0], d[2], 1), crossing(2, 3, d[1], d[2], -1)];
        let g = ObservationGraph::new(vs.clone(), edges).unwrap();

        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let consistent: Vec<_> = perms
            .iter()
            .filter(|order| {
                (0..3).all(|k| {
                    let id = vs[order[k]].id;
                    let before: Vec<VehicleId> = order[..k].iter().map(|&i| vs[i].id).collect();
                    let mut y = p.yields_to(&g, id);
                    y.sort();
                    let mut b = before.clone();
                    b.sort();
                    y == b
                })
            })
            .collect();
        assert_eq!(consistent.len(), 1);
        let mut by_arrival = [0usize, 1, 2];
        by_arrival.sort_by(|&a, &b| (d[a] / vs[a].speed).total_cmp(&(d[b] / vs[b].speed)));
        assert_eq!(*consistent[0], by_arrival);
    }

    #[test]
    fn vehicle_inside_zone_keeps_going() {
        let p = HeuristicPolicy::default();
        let g = ObservationGraph::new(
            vec![vertex(1, 1.0, 5.0, true), vertex(2, -20.0, 10.0, false)],
            vec![crossing(1, 2, 2.0, 25.0, -1)],
        )
        .unwrap();
        let a = p.select_action(&g);
        assert!(a.get(VehicleId(1)).unwrap() > 0.0);
        assert!(a.get(VehicleId(2)).unwrap() < 0.0);
    }

    #[test]
    fn follower_keeps_distance() {
        let p = HeuristicPolicy::default();
        let e = Edge {
            source: VehicleId(1),
            target: VehicleId(2),
            features: EdgeFeatures {
                kind: RelationKind::Following,
                distance: 9.0,
                priority: 0,
                source_to_conflict: 9.0,
                target_to_conflict: 0.0,
                conflict: None,
                source_zone: ConflictZone::symmetric(0.0),
                target_zone: ConflictZone::symmetric(0.0),
            },
        };
        let g = ObservationGraph::new(vec![vertex(1, -40.0, 10.0, true), vertex(2, -31.0, 2.0, true)], vec![e]).unwrap();
        let a = p.select_action(&g);
        assert_eq!(a.get(VehicleId(1)), Some(-MAX_ACCEL));
        assert!(a.get(VehicleId(2)).unwrap() > 0.0);
    }
}
