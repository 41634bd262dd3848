//! Path planning in trajectory space.
//!
//! Paths are Manhattan trajectories encoded as fixed-length bitstrings and
//! optimized by a cellular genetic algorithm. The planner alternates two
//! optimizations: SEARCH minimizes the distance from a trajectory's end to
//! the goal, EXPLORE places new landmarks as far as possible from the ones
//! already known. Every landmark stores the trajectory that reaches it, so
//! a solution is always a chain of stored trajectories from the start.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cspace;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod optimizer;
pub mod planner;
pub mod scenario;
pub mod trajectory;

pub use cspace::{
    collides, legal_motion_range, Body, Configuration, Interval, JointKind, JointSpec, Link,
    Metric, MovableObstacle, RobotModel, World,
};
pub use error::{Error, Result};
pub use geometry::{Aabb, Capsule, Point, Shape};
pub use harness::{run_dynamic, run_static, RunReport};
pub use planner::{plan, Outcome, PlanResult, PlannerConfig};
pub use scenario::Scenario;
pub use trajectory::{
    decode, execute, explore_cost, reflect, search_cost, EncodingSpec, ExecOptions,
    ExecutionResult, Genome, ManhattanDeltas,
};
