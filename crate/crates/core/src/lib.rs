//! Rollout-based behavior planning for cooperative intersection traversal.
//!
//! A stepwise behavior policy is rolled out in a built-in 5 Hz simulator to
//! derive advance motion-planning objectives (path, speed bound, anchor
//! point) for every connected automated vehicle. A sampling-based motion
//! planner turns objectives into trajectories that a closed-loop execution
//! simulator tracks, in single-shot or cyclic replanning mode.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, scenario
//! generation and the command line live in the `rollplan` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod envmodel;
pub mod evaluation;
pub mod execsim;
pub mod geometry;
pub mod kinematics;
pub mod math;
pub mod motionplan;
pub mod orchestrator;
pub mod policy;
pub mod rollout;
pub mod scenario;
pub mod scenegraph;

pub use envmodel::{
    AnchorPoint, ConflictKind, ConflictPoint, EnvironmentModel, Lane, LaneId, LaneMap,
    MotionPlanningObjective, Pose, RightOfWay, Route, RouteSpec, VehicleId, VehicleRecord,
};
pub use policy::{JointAction, Policy};
