//! Behavior policies mapping a scene graph to one longitudinal acceleration
//! per vehicle.

mod gnn;
mod heuristic;

use alloc::vec::Vec;

pub use gnn::{GnnPolicy, Matrix, PolicyWeights, WeightsError, EDGE_INPUTS, MESSAGE_LAYERS, VERTEX_INPUTS};
pub use heuristic::HeuristicPolicy;

use crate::envmodel::VehicleId;
use crate::scenegraph::ObservationGraph;

/// Bound on every commanded acceleration, m/s².
pub const MAX_ACCEL: f64 = 3.0;

/// One acceleration per vehicle, ordered by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointAction(Vec<(VehicleId, f64)>);

impl JointAction {
    /// Sorts by id and clamps every component to `±MAX_ACCEL`; NaN becomes 0.
    pub fn new(mut actions: Vec<(VehicleId, f64)>) -> Self {
        actions.sort_by_key(|(id, _)| *id);
        for (_, a) in &mut actions {
            *a = if a.is_nan() { 0.0 } else { a.clamp(-MAX_ACCEL, MAX_ACCEL) };
        }
        Self(actions)
    }

    pub fn get(&self, id: VehicleId) -> Option<f64> {
        self.0
            .binary_search_by_key(&id, |(v, _)| *v)
            .ok()
            .map(|i| self.0[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VehicleId, f64)> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub trait Policy: Send + Sync {
    fn select_action(&self, obs: &ObservationGraph) -> JointAction;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn select_action(&self, obs: &ObservationGraph) -> JointAction {
        (**self).select_action(obs)
    }
}

impl<P: Policy + ?Sized> Policy for alloc::boxed::Box<P> {
    fn select_action(&self, obs: &ObservationGraph) -> JointAction {
        (**self).select_action(obs)
    }
}

impl<P: Policy + ?Sized> Policy for alloc::sync::Arc<P> {
    fn select_action(&self, obs: &ObservationGraph) -> JointAction {
        (**self).select_action(obs)
    }
}
