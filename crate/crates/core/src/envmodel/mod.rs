//! Shared world description: poses, vehicles, environment-model snapshots,
//! the lane map, and the motion-planning objective handed to each vehicle.

mod builder;
mod map;
mod objective;

use alloc::vec::Vec;
use core::fmt;

pub use builder::{Arm, FourArmLayout};
pub use map::{
    project_to_lane, ConflictKind, ConflictPoint, ConflictZone, Lane, LaneMap, MapError, RightOfWay,
    RouteConflict, RouteGeometry,
};
pub use objective::{AnchorPoint, MotionPlanningObjective, ObjectiveError, ANCHOR_LATERAL_TOLERANCE};

use crate::geometry::Vec2;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneId(pub u32);

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Planar pose in the local ENU frame. Heading is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: math::normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }
}

/// Ordered lanes from the vehicle's current lane to its destination lane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteSpec(Vec<LaneId>);

impl RouteSpec {
    /// `None` for an empty lane list.
    pub fn new(lanes: Vec<LaneId>) -> Option<Self> {
        if lanes.is_empty() {
            None
        } else {
            Some(Self(lanes))
        }
    }

    pub fn lanes(&self) -> &[LaneId] {
        &self.0
    }

    pub fn first(&self) -> LaneId {
        self.0[0]
    }

    pub fn last(&self) -> LaneId {
        *self.0.last().unwrap()
    }

    /// Drops the first `n` lanes, keeping at least the destination lane.
    pub fn trimmed(&self, n: usize) -> Self {
        let n = n.min(self.0.len() - 1);
        Self(self.0[n..].to_vec())
    }
}

/// A route is unknown for non-connected vehicles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Route {
    Known(RouteSpec),
    Unknown,
}

impl Route {
    pub fn known(&self) -> Option<&RouteSpec> {
        match self {
            Route::Known(r) => Some(r),
            Route::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    NegativeSpeed(VehicleId),
    NonFinite(VehicleId),
    ControllableWithoutRoute(VehicleId),
    DuplicateId(VehicleId),
    NonFiniteTimestamp,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NegativeSpeed(id) => write!(f, "vehicle {id} has a negative speed"),
            ModelError::NonFinite(id) => write!(f, "vehicle {id} has a non-finite pose or speed"),
            ModelError::ControllableWithoutRoute(id) => {
                write!(f, "controllable vehicle {id} must declare its route")
            }
            ModelError::DuplicateId(id) => write!(f, "vehicle id {id} appears twice"),
            ModelError::NonFiniteTimestamp => write!(f, "snapshot timestamp is not finite"),
        }
    }
}

/// One vehicle of an environment-model snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRecord {
    id: VehicleId,
    pose: Pose,
    speed: f64,
    route: Route,
    controllable: bool,
}

impl VehicleRecord {
    pub fn new(
        id: VehicleId,
        pose: Pose,
        speed: f64,
        route: Route,
        controllable: bool,
    ) -> Result<Self, ModelError> {
        if !pose.is_finite() || !speed.is_finite() {
            return Err(ModelError::NonFinite(id));
        }
        if speed < 0.0 {
            return Err(ModelError::NegativeSpeed(id));
        }
        if controllable && route.known().is_none() {
            return Err(ModelError::ControllableWithoutRoute(id));
        }
        Ok(Self {
            id,
            pose,
            speed,
            route,
            controllable,
        })
    }

    pub fn id(&self) -> VehicleId {
        self.id
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn route(&self) -> &Route {
        &self.route
    }

    pub fn controllable(&self) -> bool {
        self.controllable
    }
}

/// Immutable snapshot of every relevant vehicle, ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentModel {
    timestamp: f64,
    vehicles: Vec<VehicleRecord>,
}

impl EnvironmentModel {
    pub fn new(timestamp: f64, mut vehicles: Vec<VehicleRecord>) -> Result<Self, ModelError> {
        if !timestamp.is_finite() {
            return Err(ModelError::NonFiniteTimestamp);
        }
        vehicles.sort_by_key(|v| v.id);
        if let Some(w) = vehicles.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(ModelError::DuplicateId(w[0].id));
        }
        Ok(Self {
            timestamp,
            vehicles,
        })
    }

    pub fn empty(timestamp: f64) -> Self {
        Self {
            timestamp,
            vehicles: Vec::new(),
        }
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn vehicles(&self) -> &[VehicleRecord] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&VehicleRecord> {
        self.vehicles
            .binary_search_by_key(&id, |v| v.id)
            .ok()
            .map(|i| &self.vehicles[i])
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }
}
