//! Graph observation of a traffic scene: one vertex per vehicle, one edge per
//! live conflict relation (shared conflict point or same-lane following).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;
use core::fmt;

use crate::envmodel::{
    ConflictKind, ConflictZone, EnvironmentModel, LaneMap, MapError, Pose, RouteGeometry, RouteSpec, VehicleId,
};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    /// Extra distance beyond the conflict zone before a point counts as passed.
    pub hysteresis: f64,
    /// Lateral offset beyond which a vehicle is considered off its route.
    pub off_map_offset: f64,
    /// A vehicle ahead within this lateral offset of the route is a leader.
    pub follow_lateral: f64,
    pub follow_range: f64,
    pub position_scale: f64,
    pub speed_scale: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            hysteresis: 0.5,
            off_map_offset: 3.0,
            follow_lateral: 2.0,
            follow_range: 100.0,
            position_scale: 100.0,
            speed_scale: 15.0,
        }
    }
}

impl SceneConfig {
    /// Signed distance to a conflict point below which it counts as passed.
    pub fn passed_threshold(&self, zone: &ConflictZone) -> f64 {
        -(zone.after + self.hysteresis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RelationKind {
    Crossing,
    Merging,
    Following,
}

impl From<ConflictKind> for RelationKind {
    fn from(k: ConflictKind) -> Self {
        match k {
            ConflictKind::Crossing => RelationKind::Crossing,
            ConflictKind::Merging => RelationKind::Merging,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexFeatures {
    pub id: VehicleId,
    /// Arc distance to the own intersection entry; negative while approaching.
    pub position: f64,
    pub speed: f64,
    pub speed_limit: f64,
    pub controllable: bool,
}

impl VertexFeatures {
    pub fn normalized(&self, cfg: &SceneConfig) -> [f64; 4] {
        [
            clip(self.position / cfg.position_scale),
            clip(self.speed / cfg.speed_scale),
            clip(self.speed_limit / cfg.speed_scale),
            if self.controllable { 1.0 } else { 0.0 },
        ]
    }
}

/// Pairwise relation features. Distances to the conflict are positive while
/// the point lies ahead. For following edges the leader sits at the
/// "conflict" (distance 0) and the follower's value is the arc gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFeatures {
    pub kind: RelationKind,
    pub distance: f64,
    /// Right of way of the source relative to the target.
    pub priority: i8,
    pub source_to_conflict: f64,
    pub target_to_conflict: f64,
    /// Map conflict index for crossing and merging edges.
    pub conflict: Option<usize>,
    /// Conflict zones along the source and target routes; empty for following.
    pub source_zone: ConflictZone,
    pub target_zone: ConflictZone,
}

impl EdgeFeatures {
    /// The same relation with source and target swapped.
    pub fn reversed(&self) -> Self {
        Self {
            priority: -self.priority,
            source_to_conflict: self.target_to_conflict,
            target_to_conflict: self.source_to_conflict,
            source_zone: self.target_zone,
            target_zone: self.source_zone,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: VehicleId,
    pub target: VehicleId,
    pub features: EdgeFeatures,
}

impl Edge {
    /// Features as seen from `id`, which becomes the source; `None` if not an endpoint.
    pub fn seen_from(&self, id: VehicleId) -> Option<(VehicleId, EdgeFeatures)> {
        if id == self.source {
            Some((self.target, self.features))
        } else if id == self.target {
            Some((self.source, self.features.reversed()))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationGraph {
    vertices: Vec<VertexFeatures>,
    edges: Vec<Edge>,
}

impl ObservationGraph {
    /// Vertices are sorted by id; every edge endpoint must exist and differ.
    pub fn new(mut vertices: Vec<VertexFeatures>, edges: Vec<Edge>) -> Option<Self> {
        vertices.sort_by_key(|v| v.id);
        if vertices.windows(2).any(|w| w[0].id == w[1].id) {
            return None;
        }
        let known = |id| vertices.binary_search_by_key(&id, |v: &VertexFeatures| v.id).is_ok();
        if edges
            .iter()
            .any(|e| e.source == e.target || !known(e.source) || !known(e.target))
        {
            return None;
        }
        Some(Self { vertices, edges })
    }

    pub fn vertices(&self) -> &[VertexFeatures] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_index(&self, id: VehicleId) -> Option<usize> {
        self.vertices.binary_search_by_key(&id, |v| v.id).ok()
    }

    pub fn vertex(&self, id: VehicleId) -> Option<&VertexFeatures> {
        self.vertex_index(id).map(|i| &self.vertices[i])
    }

    /// Edges touching `id`, each seen from `id`.
    pub fn relations_of(&self, id: VehicleId) -> impl Iterator<Item = (VehicleId, EdgeFeatures)> + '_ {
        self.edges.iter().filter_map(move |e| e.seen_from(id))
    }

    /// Applies an id relabeling; ids missing from `mapping` stay unchanged.
    pub fn relabeled(&self, mapping: &BTreeMap<VehicleId, VehicleId>) -> Self {
        let map = |id: VehicleId| mapping.get(&id).copied().unwrap_or(id);
        let vertices = self
            .vertices
            .iter()
            .map(|v| VertexFeatures { id: map(v.id), ..*v })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let (s, t) = (map(e.source), map(e.target));
                if s < t {
                    Edge { source: s, target: t, features: e.features }
                } else {
                    Edge { source: t, target: s, features: e.features.reversed() }
                }
            })
            .collect();
        Self::new(vertices, edges).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneError {
    OffMap { vehicle: VehicleId, offset: f64 },
    MissingRoute(VehicleId),
    Map { vehicle: VehicleId, error: MapError },
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneError::OffMap { vehicle, offset } => write!(
                f,
                "vehicle {vehicle} is {offset:.2} m off its route, outside the mapped lanes"
            ),
            SceneError::MissingRoute(v) => write!(f, "no route assumed for vehicle {v}"),
            SceneError::Map { vehicle, error } => write!(f, "route of vehicle {vehicle}: {error}"),
        }
    }
}

/// A vehicle as the graph builder sees it. `routes[0]` is the route it drives;
/// further entries are alternatives kept for worst-case conflict handling.
#[derive(Debug, Clone, Copy)]
pub struct VehicleView<'a> {
    pub id: VehicleId,
    pub pose: Pose,
    pub speed: f64,
    pub controllable: bool,
    pub routes: &'a [RouteGeometry],
}

/// Builds the observation for an environment-model snapshot given one or
/// more assumed routes per vehicle.
pub fn build_observation(
    em: &EnvironmentModel,
    map: &LaneMap,
    assumed: &BTreeMap<VehicleId, Vec<RouteSpec>>,
    cfg: &SceneConfig,
) -> Result<ObservationGraph, SceneError> {
    let mut geometries: Vec<Vec<RouteGeometry>> = Vec::with_capacity(em.vehicles().len());
    for v in em.vehicles() {
        let routes = assumed
            .get(&v.id())
            .filter(|r| !r.is_empty())
            .ok_or(SceneError::MissingRoute(v.id()))?;
        let geos = routes
            .iter()
            .map(|r| {
                map.route_geometry(r)
                    .map_err(|error| SceneError::Map { vehicle: v.id(), error })
            })
            .collect::<Result<Vec<_>, _>>()?;
        geometries.push(geos);
    }
    let views: Vec<VehicleView<'_>> = em
        .vehicles()
        .iter()
        .zip(&geometries)
        .map(|(v, g)| VehicleView {
            id: v.id(),
            pose: v.pose(),
            speed: v.speed(),
            controllable: v.controllable(),
            routes: g,
        })
        .collect();
    build_from_views(&views, map, cfg)
}

struct Located<'a> {
    view: &'a VehicleView<'a>,
    /// Arc on each assumed route.
    arcs: Vec<f64>,
}

pub fn build_from_views(
    views: &[VehicleView<'_>],
    map: &LaneMap,
    cfg: &SceneConfig,
) -> Result<ObservationGraph, SceneError> {
    let mut located = Vec::with_capacity(views.len());
    let mut vertices = Vec::with_capacity(views.len());
    for view in views {
        if view.routes.is_empty() {
            return Err(SceneError::MissingRoute(view.id));
        }
        let main = view.routes[0].polyline().project(view.pose.position());
        if main.distance > cfg.off_map_offset {
            return Err(SceneError::OffMap {
                vehicle: view.id,
                offset: main.offset,
            });
        }
        let mut arcs = Vec::with_capacity(view.routes.len());
        arcs.push(main.arc);
        for r in &view.routes[1..] {
            arcs.push(r.polyline().project(view.pose.position()).arc);
        }
        let route = &view.routes[0];
        vertices.push(VertexFeatures {
            id: view.id,
            position: main.arc - route.entry_arc().unwrap_or(0.0),
            speed: view.speed,
            speed_limit: route.speed_limit_at(main.arc),
            controllable: view.controllable,
        });
        located.push(Located { view, arcs });
    }
    located.sort_by_key(|l| l.view.id);

    let mut edges = Vec::new();
    let mut leaders: BTreeMap<VehicleId, (VehicleId, f64)> = BTreeMap::new();
    for (i, a) in located.iter().enumerate() {
        for b in &located[i + 1..] {
            let mut seen: Vec<usize> = Vec::new();
            for (ra, &arc_a) in a.view.routes.iter().zip(&a.arcs) {
                for (rb, &arc_b) in b.view.routes.iter().zip(&b.arcs) {
                    for ca in ra.conflicts() {
                        if seen.contains(&ca.index) {
                            continue;
                        }
                        let Some(cb) = rb.conflicts().iter().find(|cb| {
                            cb.index == ca.index
                                && cb.own_lane == ca.other_lane
                                && cb.other_lane == ca.own_lane
                        }) else {
                            continue;
                        };
                        let da = ca.arc - arc_a;
                        let db = cb.arc - arc_b;
                        if da < cfg.passed_threshold(&ca.zone) || db < cfg.passed_threshold(&cb.zone) {
                            continue;
                        }
                        seen.push(ca.index);
                        edges.push(Edge {
                            source: a.view.id,
                            target: b.view.id,
                            features: EdgeFeatures {
                                kind: ca.kind.into(),
                                distance: da.abs() + db.abs(),
                                priority: map.priority(ca.own_lane, ca.other_lane),
                                source_to_conflict: da,
                                target_to_conflict: db,
                                conflict: Some(ca.index),
                                source_zone: ca.zone,
                                target_zone: cb.zone,
                            },
                        });
                    }
                }
            }
            for (follower, leader) in [(a, b), (b, a)] {
                if let Some(gap) = gap_ahead(follower, leader, cfg) {
                    let e = leaders.entry(follower.view.id).or_insert((leader.view.id, gap));
                    if gap < e.1 {
                        *e = (leader.view.id, gap);
                    }
                }
            }
        }
    }
    for (follower, (leader, gap)) in leaders {
        let (source, target, s_d, t_d) = if follower < leader {
            (follower, leader, gap, 0.0)
        } else {
            (leader, follower, 0.0, gap)
        };
        edges.push(Edge {
            source,
            target,
            features: EdgeFeatures {
                kind: RelationKind::Following,
                distance: gap,
                priority: 0,
                source_to_conflict: s_d,
                target_to_conflict: t_d,
                conflict: None,
                source_zone: ConflictZone::symmetric(0.0),
                target_zone: ConflictZone::symmetric(0.0),
            },
        });
    }
    edges.sort_by(|x, y| {
        (x.source, x.target, x.features.kind, x.features.conflict)
            .cmp(&(y.source, y.target, y.features.kind, y.features.conflict))
    });
    Ok(ObservationGraph::new(vertices, edges).expect("vertex ids are unique"))
}

/// Arc gap from `follower` to `leader` along the follower's driven route.
fn gap_ahead(follower: &Located<'_>, leader: &Located<'_>, cfg: &SceneConfig) -> Option<f64> {
    let route = &follower.view.routes[0];
    let p = route.polyline().project(leader.view.pose.position());
    let gap = p.arc - follower.arcs[0];
    let aligned = math::normalize_angle(route.polyline().heading_at(p.arc) - leader.view.pose.heading)
        .abs()
        < FRAC_PI_4;
    (p.distance <= cfg.follow_lateral && aligned && gap > 0.0 && gap <= cfg.follow_range)
        .then_some(gap)
}

fn clip(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envmodel::{Arm, FourArmLayout, Route, VehicleRecord};
    use alloc::vec;

    fn place(map: &LaneMap, route: &RouteSpec, arc: f64) -> Pose {
        let g = map.route_geometry(route).unwrap();
        let p = g.polyline().point_at(arc);
        Pose::new(p.x, p.y, g.polyline().heading_at(arc))
    }

    fn cav(id: u32, map: &LaneMap, route: &RouteSpec, arc: f64, speed: f64) -> VehicleRecord {
        VehicleRecord::new(VehicleId(id), place(map, route, arc), speed, Route::Known(route.clone()), true)
            .unwrap()
    }

    fn assumed(list: &[(u32, &RouteSpec)]) -> BTreeMap<VehicleId, Vec<RouteSpec>> {
        list.iter().map(|(id, r)| (VehicleId(*id), vec![(*r).clone()])).collect()
    }

    #[test]
    fn empty_scene() {
        let map = FourArmLayout::default().build();
        let g = build_observation(&EnvironmentModel::empty(0.0), &map, &BTreeMap::new(), &SceneConfig::default())
            .unwrap();
        assert!(g.vertices().is_empty() && g.edges().is_empty());
    }

    #[test]
    fn perpendicular_crossing_has_one_edge_with_ego_yielding() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let ego_route = layout.straight_route(Arm::West);
        let obj_route = layout.straight_route(Arm::South);
        let ego = cav(1, &map, &ego_route, 36.75, 10.0);
        let obj = VehicleRecord::new(
            VehicleId(2),
            place(&map, &obj_route, 36.75),
            10.0,
            Route::Known(obj_route.clone()),
            false,
        )
        .unwrap();
        let em = EnvironmentModel::new(0.0, vec![ego, obj]).unwrap();
        let g = build_observation(&em, &map, &assumed(&[(1, &ego_route), (2, &obj_route)]), &SceneConfig::default())
            .unwrap();
        assert_eq!(g.vertices().len(), 2);
        assert_eq!(g.edges().len(), 1);
        let e = g.edges()[0];
        assert_eq!(e.features.kind, RelationKind::Crossing);
        assert_eq!((e.source, e.features.priority), (VehicleId(1), -1));
        assert!((e.features.source_to_conflict - 75.0).abs() < 1e-6);
        assert!((e.features.target_to_conflict - 71.5).abs() < 1e-6);
        assert!((g.vertices()[0].position + 63.25).abs() < 1e-6);
    }

    #[test]
    fn disjoint_routes_have_no_edges() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        // Both turn right: west to south and east to north never meet.
        let a = layout.route(Arm::West, Arm::South);
        let b = layout.route(Arm::East, Arm::North);
        let em = EnvironmentModel::new(0.0, vec![cav(1, &map, &a, 50.0, 8.0), cav(2, &map, &b, 50.0, 8.0)]).unwrap();
        let g = build_observation(&em, &map, &assumed(&[(1, &a), (2, &b)]), &SceneConfig::default()).unwrap();
        assert_eq!(g.vertices().len(), 2);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn following_on_same_lane() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let r = layout.straight_route(Arm::West);
        let em = EnvironmentModel::new(0.0, vec![cav(4, &map, &r, 50.0, 8.0), cav(3, &map, &r, 35.0, 8.0)]).unwrap();
        let g = build_observation(&em, &map, &assumed(&[(3, &r), (4, &r)]), &SceneConfig::default()).unwrap();
        assert_eq!(g.edges().len(), 1);
        let e = g.edges()[0];
        assert_eq!(e.features.kind, RelationKind::Following);
        // Vehicle 3 follows vehicle 4 at 15 m.
        assert_eq!((e.source, e.features.source_to_conflict, e.features.target_to_conflict), (VehicleId(3), 15.0, 0.0));
    }

    #[test]
    fn off_map_vehicle_is_named() {
        let layout = FourArmLayout::default();
        let map = layout.build();
        let r = layout.straight_route(Arm::West);
        let mut pose = place(&map, &r, 50.0);
        pose.y += 4.0;
        let v = VehicleRecord::new(VehicleId(9), pose, 5.0, Route::Known(r.clone()), true).unwrap();
        let em = EnvironmentModel::new(0.0, vec![v]).unwrap();
        let err = build_observation(&em, &map, &assumed(&[(9, &r)]), &SceneConfig::default()).unwrap_err();
        assert!(matches!(err, SceneError::OffMap { vehicle: VehicleId(9), .. }));
    }
}
