//! Waypoint navigation: obstacle-aware planning on the agent's map and a
//! discrete path follower.

mod follow;
mod plan;

pub use follow::{
    navigate_to, next_action, NavBody, NavDecision, NavOutcome, NavStatus, Navigator, DEFAULT_GOAL_TOLERANCE,
    HEADING_DEADBAND_DEG,
};
pub use plan::{astar, inflated, plan_path, snap_goal, Path, PlanFailure, GOAL_SNAP_RADIUS};
