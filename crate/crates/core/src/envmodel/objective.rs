use alloc::vec::Vec;
use core::fmt;

use super::VehicleId;
use crate::geometry::{Polyline, Vec2};

/// Anchor positions must lie this close to the objective path.
pub const ANCHOR_LATERAL_TOLERANCE: f64 = 0.5;

/// Position the vehicle shall cross `dt` seconds after the objective was
/// issued, at `speed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorPoint {
    pub position: Vec2,
    pub dt: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveError {
    NonFiniteTimestamp,
    SpeedBoundCount { expected: usize, found: usize },
    InvalidSpeedBound(usize),
    InvalidAnchorTime(usize),
    InvalidAnchorSpeed(usize),
    AnchorOffPath { index: usize, distance: f64 },
}

impl fmt::Display for ObjectiveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveError::NonFiniteTimestamp => write!(f, "issue timestamp is not finite"),
            ObjectiveError::SpeedBoundCount { expected, found } => write!(
                f,
                "expected {expected} speed bounds (one per path segment), found {found}"
            ),
            ObjectiveError::InvalidSpeedBound(i) => write!(f, "speed bound {i} is not positive"),
            ObjectiveError::InvalidAnchorTime(i) => {
                write!(f, "anchor {i} needs a positive relative time")
            }
            ObjectiveError::InvalidAnchorSpeed(i) => write!(f, "anchor {i} has a negative speed"),
            ObjectiveError::AnchorOffPath { index, distance } => write!(
                f,
                "anchor {index} lies {distance:.3} m from the path (tolerance {ANCHOR_LATERAL_TOLERANCE} m)"
            ),
        }
    }
}

/// High-level plan for one vehicle: path, per-segment speed bound, anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlanningObjective {
    vehicle: VehicleId,
    issued_at: f64,
    path: Polyline,
    speed_bounds: Vec<f64>,
    anchors: Vec<AnchorPoint>,
}

impl MotionPlanningObjective {
    pub fn new(
        vehicle: VehicleId,
        issued_at: f64,
        path: Polyline,
        speed_bounds: Vec<f64>,
        anchors: Vec<AnchorPoint>,
    ) -> Result<Self, ObjectiveError> {
        if !issued_at.is_finite() {
            return Err(ObjectiveError::NonFiniteTimestamp);
        }
        if speed_bounds.len() != path.segment_count() {
            return Err(ObjectiveError::SpeedBoundCount {
                expected: path.segment_count(),
                found: speed_bounds.len(),
            });
        }
        if let Some(i) = speed_bounds
            .iter()
            .position(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(ObjectiveError::InvalidSpeedBound(i));
        }
        for (i, a) in anchors.iter().enumerate() {
            if !(a.dt.is_finite() && a.dt > 0.0) {
                return Err(ObjectiveError::InvalidAnchorTime(i));
            }
            if !(a.speed.is_finite() && a.speed >= 0.0) {
                return Err(ObjectiveError::InvalidAnchorSpeed(i));
            }
            let distance = path.project(a.position).distance;
            if distance.is_nan() || distance > ANCHOR_LATERAL_TOLERANCE {
                return Err(ObjectiveError::AnchorOffPath { index: i, distance });
            }
        }
        Ok(Self {
            vehicle,
            issued_at,
            path,
            speed_bounds,
            anchors,
        })
    }

    pub fn vehicle(&self) -> VehicleId {
        self.vehicle
    }

    pub fn issued_at(&self) -> f64 {
        self.issued_at
    }

    pub fn path(&self) -> &Polyline {
        &self.path
    }

    pub fn speed_bounds(&self) -> &[f64] {
        &self.speed_bounds
    }

    pub fn anchors(&self) -> &[AnchorPoint] {
        &self.anchors
    }

    /// Bound on the path segment containing `arc`.
    pub fn speed_bound_at(&self, arc: f64) -> f64 {
        self.speed_bounds[self.path.segment_at(arc)]
    }

    /// Absolute time of the first anchor.
    pub fn anchor_time(&self) -> Option<f64> {
        self.anchors.first().map(|a| self.issued_at + a.dt)
    }

    /// Same objective without anchors.
    pub fn without_anchors(&self) -> Self {
        Self {
            anchors: Vec::new(),
            ..self.clone()
        }
    }
}
