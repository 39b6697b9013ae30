use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI};
use core::fmt;

use super::{LaneId, Pose, RouteSpec};
use crate::geometry::{convex_hull, polyline_intersections, Polyline, PolylineError, Vec2};
use crate::math;

/// Successor lanes must start within this distance of the predecessor's end.
const JUNCTION_TOLERANCE: f64 = 0.1;
/// Endpoints closer than this are treated as a merge.
const MERGE_TOLERANCE: f64 = 0.5;
/// Footprint (length, width) sizing conflict zones: a 5 m by 2 m vehicle
/// with a margin on every side.
const ZONE_FOOTPRINT: (f64, f64) = (5.6, 2.6);
/// Search window on either side of a conflict point and its sampling step.
const ZONE_SEARCH: f64 = 12.0;
const ZONE_STEP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    id: LaneId,
    centerline: Polyline,
    speed_limit: f64,
    successors: Vec<LaneId>,
}

impl Lane {
    pub fn new(
        id: LaneId,
        centerline: Polyline,
        speed_limit: f64,
        successors: Vec<LaneId>,
    ) -> Result<Self, MapError> {
        if !(speed_limit.is_finite() && speed_limit > 0.0) {
            return Err(MapError::InvalidSpeedLimit(id));
        }
        Ok(Self {
            id,
            centerline,
            speed_limit,
            successors,
        })
    }

    pub fn id(&self) -> LaneId {
        self.id
    }

    pub fn centerline(&self) -> &Polyline {
        &self.centerline
    }

    pub fn speed_limit(&self) -> f64 {
        self.speed_limit
    }

    pub fn successors(&self) -> &[LaneId] {
        &self.successors
    }

    pub fn length(&self) -> f64 {
        self.centerline.length()
    }
}

/// Closest point of `pose` on the lane centerline: `(arc length, signed lateral offset)`.
pub fn project_to_lane(pose: &Pose, lane: &Lane) -> (f64, f64) {
    let p = lane.centerline.project(pose.position());
    (p.arc, p.offset)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConflictKind {
    Crossing,
    Merging,
}

/// Extent of a conflict zone along one lane, measured from the conflict point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictZone {
    pub before: f64,
    pub after: f64,
}

impl ConflictZone {
    pub fn symmetric(half: f64) -> Self {
        Self { before: half, after: half }
    }
}

/// Location where two lanes cross or merge, with the arc position on each lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictPoint {
    pub lanes: (LaneId, LaneId),
    pub arcs: (f64, f64),
    pub kind: ConflictKind,
}

impl ConflictPoint {
    /// Arc on `lane` and the opposing lane, if `lane` is part of this conflict.
    pub fn side(&self, lane: LaneId) -> Option<(f64, LaneId)> {
        if self.lanes.0 == lane {
            Some((self.arcs.0, self.lanes.1))
        } else if self.lanes.1 == lane {
            Some((self.arcs.1, self.lanes.0))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RightOfWay {
    /// Traffic approaching from the right goes first; left turns yield to oncoming traffic.
    RightBeforeLeft,
    /// Listed access lanes form the priority road; right-before-left among equals.
    PriorityRoad(Vec<LaneId>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapError {
    DuplicateLane(LaneId),
    DanglingSuccessor { lane: LaneId, successor: LaneId },
    Discontinuous { lane: LaneId, successor: LaneId },
    InvalidSpeedLimit(LaneId),
    UnknownLane(LaneId),
    EntryOutOfRange(LaneId),
    ConflictSameLane(usize),
    ConflictOutOfRange(usize),
    Polyline { lane: LaneId, error: PolylineError },
    RouteNotConnected { from: LaneId, to: LaneId },
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::DuplicateLane(id) => write!(f, "lane {id} is defined twice"),
            MapError::DanglingSuccessor { lane, successor } => {
                write!(f, "lane {lane} lists unknown successor {successor}")
            }
            MapError::Discontinuous { lane, successor } => write!(
                f,
                "successor {successor} does not start where lane {lane} ends"
            ),
            MapError::InvalidSpeedLimit(id) => write!(f, "lane {id} needs a positive speed limit"),
            MapError::UnknownLane(id) => write!(f, "reference to unknown lane {id}"),
            MapError::EntryOutOfRange(id) => {
                write!(f, "intersection entry of lane {id} lies outside the lane")
            }
            MapError::ConflictSameLane(i) => write!(f, "conflict point {i} references one lane twice"),
            MapError::ConflictOutOfRange(i) => {
                write!(f, "conflict point {i} lies outside its lanes")
            }
            MapError::Polyline { lane, error } => write!(f, "lane {lane}: {error}"),
            MapError::RouteNotConnected { from, to } => {
                write!(f, "route jumps from lane {from} to unconnected lane {to}")
            }
        }
    }
}

/// Lanes, their topology, intersection entries and conflict points.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneMap {
    lanes: Vec<Lane>,
    entries: BTreeMap<LaneId, f64>,
    conflicts: Vec<ConflictPoint>,
    zones: Vec<(ConflictZone, ConflictZone)>,
    right_of_way: RightOfWay,
    hull: Vec<Vec2>,
}

impl LaneMap {
    /// Validates the map. Conflict points are derived from lane geometry unless given.
    pub fn new(
        mut lanes: Vec<Lane>,
        entries: BTreeMap<LaneId, f64>,
        conflicts: Option<Vec<ConflictPoint>>,
        right_of_way: RightOfWay,
    ) -> Result<Self, MapError> {
        lanes.sort_by_key(|l| l.id);
        if let Some(w) = lanes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(MapError::DuplicateLane(w[0].id));
        }
        let find = |id: LaneId| lanes.binary_search_by_key(&id, |l| l.id).ok();
        for lane in &lanes {
            for &succ in &lane.successors {
                let Some(j) = find(succ) else {
                    return Err(MapError::DanglingSuccessor {
                        lane: lane.id,
                        successor: succ,
                    });
                };
                let end = *lane.centerline.points().last().unwrap();
                if lanes[j].centerline.points()[0].distance(end) > JUNCTION_TOLERANCE {
                    return Err(MapError::Discontinuous {
                        lane: lane.id,
                        successor: succ,
                    });
                }
            }
        }
        for (&id, &arc) in &entries {
            let Some(i) = find(id) else {
                return Err(MapError::UnknownLane(id));
            };
            if !(0.0..=lanes[i].length()).contains(&arc) {
                return Err(MapError::EntryOutOfRange(id));
            }
        }
        if let RightOfWay::PriorityRoad(ids) = &right_of_way {
            if let Some(&bad) = ids.iter().find(|id| find(**id).is_none()) {
                return Err(MapError::UnknownLane(bad));
            }
        }
        let conflicts = match conflicts {
            Some(c) => c,
            None => derive_conflicts(&lanes),
        };
        for (i, cp) in conflicts.iter().enumerate() {
            if cp.lanes.0 == cp.lanes.1 {
                return Err(MapError::ConflictSameLane(i));
            }
            for (id, arc) in [(cp.lanes.0, cp.arcs.0), (cp.lanes.1, cp.arcs.1)] {
                let Some(j) = find(id) else {
                    return Err(MapError::UnknownLane(id));
                };
                if !(arc.is_finite() && (0.0..=lanes[j].length() + 1e-9).contains(&arc)) {
                    return Err(MapError::ConflictOutOfRange(i));
                }
            }
        }
        let points: Vec<Vec2> = conflicts
            .iter()
            .map(|cp| lanes[find(cp.lanes.0).unwrap()].centerline.point_at(cp.arcs.0))
            .collect();
        let hull = convex_hull(&points);
        let zones = conflicts
            .iter()
            .map(|cp| conflict_zone(&lanes[find(cp.lanes.0).unwrap()], &lanes[find(cp.lanes.1).unwrap()], cp.arcs))
            .collect();
        Ok(Self {
            lanes,
            entries,
            conflicts,
            zones,
            right_of_way,
            hull,
        })
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn lane(&self, id: LaneId) -> Option<&Lane> {
        self.lanes
            .binary_search_by_key(&id, |l| l.id)
            .ok()
            .map(|i| &self.lanes[i])
    }

    pub fn entries(&self) -> &BTreeMap<LaneId, f64> {
        &self.entries
    }

    pub fn entry(&self, lane: LaneId) -> Option<f64> {
        self.entries.get(&lane).copied()
    }

    pub fn conflicts(&self) -> &[ConflictPoint] {
        &self.conflicts
    }

    /// Zones of conflict `index` along its first and second lane.
    pub fn conflict_zones(&self, index: usize) -> (ConflictZone, ConflictZone) {
        self.zones[index]
    }

    pub fn right_of_way(&self) -> &RightOfWay {
        &self.right_of_way
    }

    /// Convex hull of all conflict point locations (counter-clockwise).
    pub fn conflict_hull(&self) -> &[Vec2] {
        &self.hull
    }

    pub fn conflict_position(&self, index: usize) -> Vec2 {
        let cp = &self.conflicts[index];
        self.lane(cp.lanes.0).unwrap().centerline.point_at(cp.arcs.0)
    }

    pub fn predecessors(&self, id: LaneId) -> Vec<LaneId> {
        self.lanes
            .iter()
            .filter(|l| l.successors.contains(&id))
            .map(|l| l.id)
            .collect()
    }

    /// Access lanes, i.e. lanes carrying an intersection entry.
    pub fn access_lanes(&self) -> Vec<LaneId> {
        self.entries.keys().copied().collect()
    }

    /// The access lane a lane belongs to: itself, or its access predecessor.
    pub fn access_of(&self, id: LaneId) -> Option<LaneId> {
        if self.entries.contains_key(&id) {
            return Some(id);
        }
        self.predecessors(id)
            .into_iter()
            .find(|p| self.entries.contains_key(p))
    }

    pub fn is_connector(&self, id: LaneId) -> bool {
        !self.entries.contains_key(&id)
            && self
                .predecessors(id)
                .iter()
                .any(|p| self.entries.contains_key(p))
    }

    /// Every route from `start` to a lane without successors.
    pub fn routes_from(&self, start: LaneId) -> Vec<RouteSpec> {
        let mut out = Vec::new();
        let mut stack: Vec<Vec<LaneId>> = alloc::vec![alloc::vec![start]];
        while let Some(path) = stack.pop() {
            let last = *path.last().unwrap();
            let Some(lane) = self.lane(last) else { continue };
            let next: Vec<LaneId> = lane
                .successors
                .iter()
                .copied()
                .filter(|s| !path.contains(s))
                .collect();
            if next.is_empty() || path.len() >= 16 {
                out.push(RouteSpec::new(path).unwrap());
                continue;
            }
            for s in next.into_iter().rev() {
                let mut p = path.clone();
                p.push(s);
                stack.push(p);
            }
        }
        out
    }

    pub fn validate_route(&self, route: &RouteSpec) -> Result<(), MapError> {
        for &id in route.lanes() {
            if self.lane(id).is_none() {
                return Err(MapError::UnknownLane(id));
            }
        }
        for w in route.lanes().windows(2) {
            if !self.lane(w[0]).unwrap().successors.contains(&w[1]) {
                return Err(MapError::RouteNotConnected {
                    from: w[0],
                    to: w[1],
                });
            }
        }
        Ok(())
    }

    pub fn route_geometry(&self, route: &RouteSpec) -> Result<RouteGeometry, MapError> {
        self.validate_route(route)?;
        RouteGeometry::build(self, route)
    }

    /// Relative priority of traffic on lane `a` against traffic on lane `b`:
    /// `+1` when `a` has right of way, `-1` when it must yield, `0` when undecided.
    pub fn priority(&self, a: LaneId, b: LaneId) -> i8 {
        let (Some(access_a), Some(access_b)) = (self.access_of(a), self.access_of(b)) else {
            return 0;
        };
        if access_a == access_b {
            return 0;
        }
        if let RightOfWay::PriorityRoad(main) = &self.right_of_way {
            match (main.contains(&access_a), main.contains(&access_b)) {
                (true, false) => return 1,
                (false, true) => return -1,
                _ => {}
            }
        }
        let heading = |id: LaneId| {
            let lane = self.lane(id).unwrap();
            let arc = self.entry(id).unwrap_or(lane.length());
            lane.centerline.heading_at((arc - 1e-6).max(0.0))
        };
        let delta = math::normalize_angle(heading(access_b) - heading(access_a));
        if delta > FRAC_PI_4 && delta < PI - FRAC_PI_4 {
            -1
        } else if delta < -FRAC_PI_4 && delta > -PI + FRAC_PI_4 {
            1
        } else if delta.abs() >= PI - FRAC_PI_4 {
            match (self.turns_left(a), self.turns_left(b)) {
                (true, false) => -1,
                (false, true) => 1,
                _ => 0,
            }
        } else {
            0
        }
    }

    fn turns_left(&self, id: LaneId) -> bool {
        let lane = self.lane(id).unwrap();
        let line = &lane.centerline;
        math::normalize_angle(line.heading_at(line.length()) - line.heading_at(0.0)) > FRAC_PI_4
    }
}

fn derive_conflicts(lanes: &[Lane]) -> Vec<ConflictPoint> {
    let predecessors = |id: LaneId| -> Vec<LaneId> {
        lanes
            .iter()
            .filter(|l| l.successors.contains(&id))
            .map(|l| l.id)
            .collect()
    };
    let mut out = Vec::new();
    for (i, a) in lanes.iter().enumerate() {
        for b in &lanes[i + 1..] {
            if a.successors.contains(&b.id) || b.successors.contains(&a.id) {
                continue;
            }
            let pa = predecessors(a.id);
            if predecessors(b.id).iter().any(|p| pa.contains(p)) {
                continue;
            }
            let end_a = *a.centerline.points().last().unwrap();
            let end_b = *b.centerline.points().last().unwrap();
            let merging = end_a.distance(end_b) <= MERGE_TOLERANCE;
            if merging {
                out.push(ConflictPoint {
                    lanes: (a.id, b.id),
                    arcs: (a.length(), b.length()),
                    kind: ConflictKind::Merging,
                });
            }
            for (sa, sb) in polyline_intersections(&a.centerline, &b.centerline) {
                let near_end = a.length() - sa < 2.0 && b.length() - sb < 2.0;
                if merging && near_end {
                    continue;
                }
                out.push(ConflictPoint {
                    lanes: (a.id, b.id),
                    arcs: (sa, sb),
                    kind: ConflictKind::Crossing,
                });
            }
        }
    }
    out
}

/// Pose on the lane centerline, continued straight beyond either end.
fn pose_on(line: &Polyline, arc: f64) -> (Vec2, f64) {
    let len = line.length();
    let clamped = arc.clamp(0.0, len);
    let h = line.heading_at(clamped);
    (line.point_at(clamped) + Vec2::from_angle(h) * (arc - clamped), h)
}

fn footprints_overlap(a: (Vec2, f64), b: (Vec2, f64)) -> bool {
    let (hl, hw) = (ZONE_FOOTPRINT.0 / 2.0, ZONE_FOOTPRINT.1 / 2.0);
    let (au, bu) = (Vec2::from_angle(a.1), Vec2::from_angle(b.1));
    let (av, bv) = (au.perp(), bu.perp());
    let d = b.0 - a.0;
    [au, av, bu, bv].iter().all(|&axis| {
        let ra = hl * au.dot(axis).abs() + hw * av.dot(axis).abs();
        let rb = hl * bu.dot(axis).abs() + hw * bv.dot(axis).abs();
        ra + rb > d.dot(axis).abs()
    })
}

/// Arc window around the conflict point on each lane in which a footprint
/// can touch one anywhere within the window on the other lane.
fn conflict_zone(a: &Lane, b: &Lane, arcs: (f64, f64)) -> (ConflictZone, ConflictZone) {
    let n = math::round(ZONE_SEARCH / ZONE_STEP) as i64;
    let offsets: Vec<f64> = (-n..=n).map(|k| k as f64 * ZONE_STEP).collect();
    let pb: Vec<_> = offsets.iter().map(|o| pose_on(&b.centerline, arcs.1 + o)).collect();
    let (mut za, mut zb) = (ConflictZone::symmetric(0.0), ConflictZone::symmetric(0.0));
    for &oa in &offsets {
        let pa = pose_on(&a.centerline, arcs.0 + oa);
        for (&ob, &p) in offsets.iter().zip(&pb) {
            if footprints_overlap(pa, p) {
                za.before = za.before.max(-oa);
                za.after = za.after.max(oa);
                zb.before = zb.before.max(-ob);
                zb.after = zb.after.max(ob);
            }
        }
    }
    (za, zb)
}

/// A conflict point seen from one route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteConflict {
    /// Index into [`LaneMap::conflicts`].
    pub index: usize,
    /// Arc position of the conflict along the route.
    pub arc: f64,
    pub own_lane: LaneId,
    pub other_lane: LaneId,
    pub kind: ConflictKind,
    /// Zone along this route.
    pub zone: ConflictZone,
}

/// Concatenated route centerline with per-lane bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteGeometry {
    route: RouteSpec,
    polyline: Polyline,
    lane_starts: Vec<f64>,
    limits: Vec<f64>,
    segment_lane: Vec<usize>,
    entry_arc: Option<f64>,
    exit_arc: f64,
    conflicts: Vec<RouteConflict>,
}

impl RouteGeometry {
    fn build(map: &LaneMap, route: &RouteSpec) -> Result<Self, MapError> {
        let mut points: Vec<Vec2> = Vec::new();
        let mut lane_starts = Vec::with_capacity(route.lanes().len());
        let mut limits = Vec::with_capacity(route.lanes().len());
        let mut running = 0.0;
        for &id in route.lanes() {
            let lane = map.lane(id).unwrap();
            lane_starts.push(running);
            limits.push(lane.speed_limit);
            for &p in lane.centerline.points() {
                match points.last() {
                    Some(&last) if last.distance(p) <= JUNCTION_TOLERANCE => {}
                    Some(&last) => {
                        running += last.distance(p);
                        points.push(p);
                    }
                    None => points.push(p),
                }
            }
        }
        let polyline = Polyline::new(points).map_err(|error| MapError::Polyline {
            lane: route.first(),
            error,
        })?;
        let arcs = polyline.vertex_arcs();
        let segment_lane = (0..polyline.segment_count())
            .map(|s| {
                let start = arcs[s];
                lane_starts
                    .iter()
                    .rposition(|&ls| ls <= start + 1e-9)
                    .unwrap_or(0)
            })
            .collect();

        let lanes = route.lanes();
        let entry_idx = lanes.iter().position(|l| map.entries.contains_key(l));
        let lane_end = |k: usize| {
            if k + 1 < lane_starts.len() {
                lane_starts[k + 1]
            } else {
                polyline.length()
            }
        };
        let entry_arc = entry_idx.map(|k| lane_starts[k] + map.entry(lanes[k]).unwrap());
        let exit_arc = match entry_idx {
            Some(k) if k + 1 < lanes.len() => lane_end(k + 1),
            Some(_) => polyline.length(),
            None if map.is_connector(lanes[0]) => lane_end(0),
            None => 0.0,
        };

        let mut conflicts = Vec::new();
        for (index, cp) in map.conflicts.iter().enumerate() {
            for (k, &id) in lanes.iter().enumerate() {
                if let Some((arc, other)) = cp.side(id) {
                    let zones = map.zones[index];
                    conflicts.push(RouteConflict {
                        index,
                        arc: lane_starts[k] + arc,
                        own_lane: id,
                        other_lane: other,
                        kind: cp.kind,
                        zone: if cp.lanes.0 == id { zones.0 } else { zones.1 },
                    });
                }
            }
        }
        conflicts.sort_by(|a, b| a.arc.total_cmp(&b.arc));

        Ok(Self {
            route: route.clone(),
            polyline,
            lane_starts,
            limits,
            segment_lane,
            entry_arc,
            exit_arc,
            conflicts,
        })
    }

    pub fn route(&self) -> &RouteSpec {
        &self.route
    }

    pub fn polyline(&self) -> &Polyline {
        &self.polyline
    }

    pub fn length(&self) -> f64 {
        self.polyline.length()
    }

    pub fn lane_starts(&self) -> &[f64] {
        &self.lane_starts
    }

    /// Route arc of the intersection entry, if the route still contains its access lane.
    pub fn entry_arc(&self) -> Option<f64> {
        self.entry_arc
    }

    /// Route arc where the route leaves the intersection area.
    pub fn exit_arc(&self) -> f64 {
        self.exit_arc
    }

    pub fn conflicts(&self) -> &[RouteConflict] {
        &self.conflicts
    }

    pub fn lane_index_at(&self, arc: f64) -> usize {
        self.segment_lane[self.polyline.segment_at(arc)]
    }

    pub fn lane_at(&self, arc: f64) -> LaneId {
        self.route.lanes()[self.lane_index_at(arc)]
    }

    pub fn speed_limit_at(&self, arc: f64) -> f64 {
        self.limits[self.lane_index_at(arc)]
    }

    /// Speed limit of every polyline segment.
    pub fn segment_limits(&self) -> Vec<f64> {
        self.segment_lane.iter().map(|&k| self.limits[k]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envmodel::FourArmLayout;
    use alloc::vec;

    fn straight(id: u32, from: (f64, f64), to: (f64, f64), succ: Vec<u32>) -> Lane {
        Lane::new(
            LaneId(id),
            Polyline::new(vec![Vec2::new(from.0, from.1), Vec2::new(to.0, to.1)]).unwrap(),
            10.0,
            succ.into_iter().map(LaneId).collect(),
        )
        .unwrap()
    }

    #[test]
    fn projection_examples() {
        let lane = straight(1, (0.0, 0.0), (100.0, 0.0), vec![]);
        assert_eq!(project_to_lane(&Pose::new(0.0, 0.0, 0.0), &lane), (0.0, 0.0));
        let (arc, off) = project_to_lane(&Pose::new(50.0, 1.0, 0.0), &lane);
        assert!((arc - 50.0).abs() < 1e-12 && (off - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dangling_successor_is_named() {
        let lanes = vec![straight(1, (0.0, 0.0), (10.0, 0.0), vec![7])];
        let err = LaneMap::new(lanes, BTreeMap::new(), None, RightOfWay::RightBeforeLeft);
        assert_eq!(
            err,
            Err(MapError::DanglingSuccessor {
                lane: LaneId(1),
                successor: LaneId(7)
            })
        );
    }

    #[test]
    fn discontinuous_successor_rejected() {
        let lanes = vec![
            straight(1, (0.0, 0.0), (10.0, 0.0), vec![2]),
            straight(2, (12.0, 0.0), (20.0, 0.0), vec![]),
        ];
        assert!(matches!(
            LaneMap::new(lanes, BTreeMap::new(), None, RightOfWay::RightBeforeLeft),
            Err(MapError::Discontinuous { .. })
        ));
    }

    #[test]
    fn four_arm_topology_and_conflicts() {
        let map = FourArmLayout::default().build();
        let accesses = map.access_lanes();
        assert_eq!(accesses.len(), 3);
        for a in &accesses {
            assert_eq!(map.routes_from(*a).len(), 3);
        }
        // Every conflict lies inside both lanes and references connectors only.
        for cp in map.conflicts() {
            assert!(map.is_connector(cp.lanes.0) && map.is_connector(cp.lanes.1));
        }
        let merges = map
            .conflicts()
            .iter()
            .filter(|c| c.kind == ConflictKind::Merging)
            .count();
        assert!(merges >= 3);
    }

    #[test]
    fn right_before_left() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let west = layout.straight_route(super::super::Arm::West);
        let south = layout.straight_route(super::super::Arm::South);
        let a = west.lanes()[1];
        let b = south.lanes()[1];
        // Traffic from the south approaches a west-arm vehicle from its right.
        assert_eq!(map.priority(a, b), -1);
        assert_eq!(map.priority(b, a), 1);
    }

    #[test]
    fn route_geometry_bookkeeping() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let route = layout.straight_route(super::super::Arm::West);
        let geo = map.route_geometry(&route).unwrap();
        let entry = geo.entry_arc().unwrap();
        assert!((entry - layout.access_length).abs() < 1e-9);
        assert!((geo.exit_arc() - (layout.access_length + 2.0 * layout.half_size)).abs() < 1e-6);
        assert_eq!(geo.lane_at(entry - 1.0), route.lanes()[0]);
        assert_eq!(geo.lane_at(entry + 1.0), route.lanes()[1]);
        assert_eq!(geo.segment_limits().len(), geo.polyline().segment_count());
        assert!(geo.conflicts().windows(2).all(|w| w[0].arc <= w[1].arc));
    }
}
