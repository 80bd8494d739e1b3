use serde::{Deserialize, Serialize};

use super::plan::{inflated, plan_path, Path, PlanFailure};
use crate::geometry::{normalize_deg, wrap_180, Point};
use crate::gridworld::{Action, AgentPose, STEP_SIZE, TURN_DEG};
use crate::memory::{CellState, ObstacleMap};

/// Heading error tolerated before turning: half the turn quantum.
pub const HEADING_DEADBAND_DEG: f64 = TURN_DEG / 2.0;
pub const DEFAULT_GOAL_TOLERANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavStatus {
    Reached,
    Blocked,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavOutcome {
    pub status: NavStatus,
    pub steps_used: u64,
    pub final_distance: f64,
}

fn turn_toward(error: f64) -> Action {
    if error > 0.0 {
        Action::MoveRight
    } else {
        Action::MoveLeft
    }
}

/// Action to take toward `path.waypoints[path.next]`. Stops when within half
/// the tolerance of the final waypoint, or within the tolerance when a turn
/// would otherwise be needed.
pub fn next_action(pose: AgentPose, path: &Path, tolerance: f64) -> Action {
    let here = pose.position();
    let goal = path.goal();
    let d_goal = here.distance(goal);
    let goal_error = if d_goal > 0.0 {
        wrap_180(here.bearing_to(goal) - pose.heading)
    } else {
        0.0
    };
    if d_goal <= tolerance / 2.0 || (d_goal <= tolerance && goal_error.abs() > HEADING_DEADBAND_DEG) {
        return Action::Stop;
    }
    let target = path.waypoints[path.next.min(path.waypoints.len() - 1)];
    let error = wrap_180(here.bearing_to(target) - pose.heading);
    if error.abs() > HEADING_DEADBAND_DEG {
        turn_toward(error)
    } else {
        Action::Forward
    }
}

/// What the follower wants to do next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavDecision {
    Act(Action),
    Arrived,
    Blocked,
}

/// Path-following state: the current plan and any pending detour heading.
#[derive(Debug, Clone, Default)]
pub struct Navigator {
    goal: Option<Point>,
    path: Option<Path>,
    detour: Option<f64>,
}

fn forward_blocked(map: &ObstacleMap, pose: AgentPose, heading: f64) -> bool {
    let dest = pose.position().offset(heading, STEP_SIZE);
    map.cell_of(dest).is_none_or(|c| map.get(c) == CellState::Occupied)
}

impl Navigator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_ref()
    }

    /// Forces a replan on the next decision.
    pub fn invalidate(&mut self) {
        self.path = None;
        self.detour = None;
    }

    fn path_still_valid(&self, map: &ObstacleMap) -> bool {
        let Some(path) = &self.path else { return false };
        path.cells.iter().skip(1).all(|&c| map.get(c) != CellState::Occupied)
    }

    fn replan(&mut self, map: &ObstacleMap, pose: AgentPose, goal: Point) -> Result<(), PlanFailure> {
        let mut path = plan_path(map, pose.position(), goal)?;
        let start = path.cells[0];
        let end = *path.cells.last().expect("non-empty");
        path.smooth(map, |c| c != start && c != end && inflated(map, c));
        self.path = Some(path);
        self.detour = None;
        Ok(())
    }

    /// Chooses the next action toward `goal` on `map`.
    pub fn decide(&mut self, map: &ObstacleMap, pose: AgentPose, goal: Point, tolerance: f64) -> NavDecision {
        if self.goal != Some(goal) {
            self.goal = Some(goal);
            self.path = None;
            self.detour = None;
        }
        if !self.path_still_valid(map) && self.replan(map, pose, goal).is_err() {
            return NavDecision::Blocked;
        }
        let path = self.path.as_mut().expect("planned above");
        let here = pose.position();
        let last = path.waypoints.len() - 1;
        while path.next < last && here.distance(path.waypoints[path.next]) <= STEP_SIZE {
            path.next += 1;
        }
        if let Some(h) = self.detour {
            let err = wrap_180(h - pose.heading);
            if err.abs() < 1e-6 {
                self.detour = None;
                if !forward_blocked(map, pose, pose.heading) {
                    return NavDecision::Act(Action::Forward);
                }
            } else {
                return NavDecision::Act(turn_toward(err));
            }
        }
        match next_action(pose, path, tolerance) {
            Action::Stop => NavDecision::Arrived,
            Action::Forward if forward_blocked(map, pose, pose.heading) => {
                // Pick the turn-reachable heading closest to the waypoint
                // whose next step is not known to be blocked.
                let target = path.waypoints[path.next.min(last)];
                let want = here.bearing_to(target);
                let best = (1..12)
                    .map(|k| normalize_deg(pose.heading + TURN_DEG * k as f64))
                    .filter(|&h| !forward_blocked(map, pose, h))
                    .min_by(|a, b| {
                        wrap_180(a - want)
                            .abs()
                            .total_cmp(&wrap_180(b - want).abs())
                            .then(a.total_cmp(b))
                    });
                match best {
                    Some(h) => {
                        self.detour = Some(h);
                        NavDecision::Act(turn_toward(wrap_180(h - pose.heading)))
                    }
                    None => NavDecision::Blocked,
                }
            }
            a => NavDecision::Act(a),
        }
    }
}

/// The embodiment a navigator drives: something with a pose, a map and a way
/// to act.
pub trait NavBody {
    fn pose(&self) -> AgentPose;
    fn obstacle_map(&self) -> &ObstacleMap;
    fn obstacle_map_mut(&mut self) -> &mut ObstacleMap;
    /// Executes one action. Returns whether a Forward collided, or `None` when
    /// no further actions are allowed.
    fn act(&mut self, action: Action) -> Option<bool>;
}

/// Drives `body` to `goal`: plan, follow, replan on collision or on newly
/// observed obstacles, until arrival, a dead end or the step budget runs
/// out. The final Stop is not executed; arrival is reported instead.
pub fn navigate_to(body: &mut impl NavBody, goal: Point, budget: u64, tolerance: f64) -> NavOutcome {
    let mut nav = Navigator::new();
    let mut steps = 0;
    loop {
        let pose = body.pose();
        let distance = pose.position().distance(goal);
        let outcome = |status| NavOutcome {
            status,
            steps_used: steps,
            final_distance: distance,
        };
        if steps >= budget {
            return outcome(NavStatus::BudgetExhausted);
        }
        match nav.decide(body.obstacle_map(), pose, goal, tolerance) {
            NavDecision::Arrived => return outcome(NavStatus::Reached),
            NavDecision::Blocked => return outcome(NavStatus::Blocked),
            NavDecision::Act(action) => {
                let Some(collided) = body.act(action) else {
                    return outcome(NavStatus::BudgetExhausted);
                };
                steps += 1;
                if collided {
                    let map = body.obstacle_map_mut();
                    if let Some(c) = map.cell_of(pose.position().offset(pose.heading, STEP_SIZE)) {
                        map.mark_occupied(c);
                    }
                    nav.invalidate();
                }
            }
        }
    }
}
