//! The embodied agent: world state plus the agent's own maps, perception and
//! a log of what it saw and did. Every action goes through [`Agent::act`] so
//! that sensing, mapping and bookkeeping can never be skipped.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::gridworld::{
    Action, AgentPose, Episode, GoalKind, GridError, Observation, Scene, SensorConfig, WorldState, TURNS_PER_REVOLUTION,
};
use crate::memory::{Directive, Explorer, ExplorerConfig, ObstacleMap};
use crate::perception::{self, Detection, Embedder, Embedding, NoiseConfig, PerceptionError};
use crate::pointnav::{self, NavBody, NavDecision, NavOutcome, Navigator, DEFAULT_GOAL_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub explorer: ExplorerConfig,
    pub noise: NoiseConfig,
    pub sensor: SensorConfig,
    /// Waypoint tolerance for navigate_to.
    pub goal_tolerance: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            explorer: ExplorerConfig::default(),
            noise: NoiseConfig::default(),
            sensor: SensorConfig::default(),
            goal_tolerance: DEFAULT_GOAL_TOLERANCE,
        }
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("step budget exhausted")]
    BudgetExhausted,
    #[error(transparent)]
    World(#[from] GridError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
}

/// The agent's declaration that it found the current goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundEvent {
    pub step: u64,
    pub position: Point,
}

/// What happened while one goal was active.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoalLog {
    pub goal_index: usize,
    pub start_step: u64,
    /// Target objects that appeared in any observation.
    pub sighted_targets: BTreeSet<u32>,
    /// Target objects that detect returned.
    pub detected_targets: BTreeSet<u32>,
    /// Every object detect returned, target or not.
    pub detected_objects: BTreeSet<u32>,
    /// Queries passed to the detector.
    pub queries: Vec<String>,
    pub found: Option<FoundEvent>,
}

/// Target handed to the explorer: what to ground the value map in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ExploreTarget {
    Text(String),
    Image(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExploreStatus {
    Found,
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExploreOutcome {
    pub status: ExploreStatus,
    /// Where the target was seen, when found.
    pub point: Option<Point>,
    pub steps_used: u64,
}

/// Iterations without an action after which exploration gives up; guards
/// against directive/planner disagreements that would otherwise spin.
const MAX_IDLE_ITERATIONS: usize = 64;

#[derive(Debug)]
pub struct Agent {
    world: WorldState,
    explorer: Explorer,
    embedder: Embedder,
    config: AgentConfig,
    step_limit: u64,
    observation: Observation,
    actions: Vec<Action>,
    /// Pose before the first action, then after each one.
    trajectory: Vec<AgentPose>,
    goals: Vec<GoalLog>,
    view_cache: HashMap<String, Embedding>,
}

impl Agent {
    pub fn new(scene: Arc<Scene>, episode: Episode, config: AgentConfig) -> Result<Self, AgentError> {
        config.noise.validate()?;
        let world = WorldState::reset_with(scene.clone(), episode, config.sensor)?;
        let explorer = Explorer::new(&scene, config.explorer);
        let observation = world.sense();
        let mut agent = Self {
            world,
            explorer,
            embedder: Embedder::default(),
            config,
            step_limit: u64::MAX,
            observation: observation.clone(),
            actions: Vec::new(),
            trajectory: vec![observation.pose],
            goals: vec![GoalLog::default()],
            view_cache: HashMap::new(),
        };
        agent.integrate(&observation)?;
        Ok(agent)
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut WorldState {
        &mut self.world
    }

    pub fn scene(&self) -> &Arc<Scene> {
        self.world.scene()
    }

    pub fn explorer(&self) -> &Explorer {
        &self.explorer
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    pub fn pose(&self) -> AgentPose {
        self.world.pose()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn trajectory(&self) -> &[AgentPose] {
        &self.trajectory
    }

    pub fn goal_logs(&self) -> &[GoalLog] {
        &self.goals
    }

    pub fn steps_taken(&self) -> u64 {
        self.world.steps_taken()
    }

    /// Sets the absolute step count at which actions stop being accepted.
    pub fn set_step_limit(&mut self, limit: u64) {
        self.step_limit = limit;
    }

    pub fn step_limit(&self) -> u64 {
        self.step_limit
    }

    pub fn budget_left(&self) -> u64 {
        self.step_limit.saturating_sub(self.world.steps_taken())
    }

    fn current_log(&mut self) -> &mut GoalLog {
        self.goals.last_mut().expect("a goal is always active")
    }

    fn view_embedding(&mut self, obs: &Observation) -> Result<Embedding, PerceptionError> {
        let text = perception::view_text(self.world.scene(), obs);
        if let Some(e) = self.view_cache.get(&text) {
            return Ok(e.clone());
        }
        let e = self.embedder.embed_text(&text)?;
        self.view_cache.insert(text, e.clone());
        Ok(e)
    }

    fn integrate(&mut self, obs: &Observation) -> Result<(), AgentError> {
        let emb = self.view_embedding(obs)?;
        let sensor = *self.world.sensor();
        self.explorer.observe(obs.pose, &obs.depth_scan, &sensor, &emb);
        let targets = self.world.current_goal().target_ids.clone();
        let log = self.current_log();
        for s in &obs.sightings {
            if targets.contains(&s.object_id) {
                log.sighted_targets.insert(s.object_id);
            }
        }
        Ok(())
    }

    /// Executes one action, senses, and updates maps and logs.
    pub fn act(&mut self, action: Action) -> Result<&Observation, AgentError> {
        if self.world.steps_taken() >= self.step_limit {
            return Err(AgentError::BudgetExhausted);
        }
        let obs = self.world.step(action)?;
        self.actions.push(action);
        self.trajectory.push(obs.pose);
        self.integrate(&obs)?;
        self.observation = obs;
        Ok(&self.observation)
    }

    /// Runs the detector on the current view and logs what it returned.
    pub fn detect(&mut self, queries: &[String]) -> Vec<Detection> {
        let dets = perception::detect(&self.observation, self.world.scene(), queries, &self.config.noise);
        let targets = self.world.current_goal().target_ids.clone();
        let log = self.current_log();
        for q in queries {
            if !log.queries.contains(q) {
                log.queries.push(q.clone());
            }
        }
        for d in &dets {
            log.detected_objects.insert(d.object_id);
            if targets.contains(&d.object_id) {
                log.detected_targets.insert(d.object_id);
            }
        }
        dets
    }

    /// World position of a detection.
    pub fn detection_point(&self, d: &Detection) -> Point {
        let pose = self.observation.pose;
        pose.position().offset(pose.heading + d.bearing, d.range)
    }

    /// Finishes the initial look-around if it has not happened yet.
    pub fn ensure_spin(&mut self) -> Result<(), AgentError> {
        while self.explorer.spin_pending() {
            match self.explorer.explore_step(self.pose(), None) {
                Directive::Rotate { action } => {
                    self.act(action)?;
                }
                other => unreachable!("spin yields rotations only, got {other:?}"),
            }
        }
        Ok(())
    }

    fn target_embedding(&self, target: &ExploreTarget) -> Result<(String, Embedding), AgentError> {
        Ok(match target {
            ExploreTarget::Text(t) => (format!("text:{t}"), self.embedder.embed_text(t)?),
            ExploreTarget::Image(r) => (format!("image:{r}"), self.embedder.embed_image(self.world.scene(), r)?),
        })
    }

    /// Explores until a detection for `queries` appears or no frontier is
    /// left. The value map is grounded in `target`.
    pub fn explore(&mut self, target: &ExploreTarget, queries: &[String]) -> Result<ExploreOutcome, AgentError> {
        let start = self.steps_taken();
        let (key, emb) = self.target_embedding(target)?;
        self.explorer.set_target(&key, emb);
        let mut nav = Navigator::new();
        let mut idle = 0;
        loop {
            let dets = self.detect(queries);
            let sighted = dets
                .iter()
                .min_by(|a, b| a.range.total_cmp(&b.range).then(a.object_id.cmp(&b.object_id)))
                .map(|d| self.detection_point(d));
            let directive = self.explorer.explore_step(self.pose(), sighted);
            let acted = match directive {
                Directive::Rotate { action } => {
                    self.act(action)?;
                    true
                }
                Directive::TargetFound { point } => {
                    return Ok(ExploreOutcome {
                        status: ExploreStatus::Found,
                        point: Some(point),
                        steps_used: self.steps_taken() - start,
                    })
                }
                Directive::Exhausted => return self.last_look(queries, start),
                Directive::Goto { point, .. } => {
                    let pose = self.pose();
                    match nav.decide(self.explorer.obstacles(), pose, point, self.config.goal_tolerance) {
                        NavDecision::Act(action) => {
                            let collided = self.act(action)?.collided;
                            if collided {
                                self.mark_bump(pose);
                                nav.invalidate();
                            }
                            true
                        }
                        NavDecision::Arrived | NavDecision::Blocked => {
                            self.explorer.goto_failed(point);
                            nav.invalidate();
                            false
                        }
                    }
                }
            };
            idle = if acted { 0 } else { idle + 1 };
            if idle > MAX_IDLE_ITERATIONS {
                return self.last_look(queries, start);
            }
        }
    }

    /// One detecting turn in place before giving up. The start-of-goal spin
    /// runs before any query is known, so a target seen then may sit just
    /// outside the current view of a fully mapped room.
    fn last_look(&mut self, queries: &[String], start: u64) -> Result<ExploreOutcome, AgentError> {
        for _ in 1..TURNS_PER_REVOLUTION {
            self.act(Action::MoveLeft)?;
            let dets = self.detect(queries);
            if let Some(d) = dets
                .iter()
                .min_by(|a, b| a.range.total_cmp(&b.range).then(a.object_id.cmp(&b.object_id)))
            {
                return Ok(ExploreOutcome {
                    status: ExploreStatus::Found,
                    point: Some(self.detection_point(d)),
                    steps_used: self.steps_taken() - start,
                });
            }
        }
        Ok(ExploreOutcome {
            status: ExploreStatus::Exhausted,
            point: None,
            steps_used: self.steps_taken() - start,
        })
    }

    fn mark_bump(&mut self, pose: AgentPose) {
        let dest = pose.position().offset(pose.heading, crate::gridworld::STEP_SIZE);
        let map = self.explorer.obstacles_mut();
        if let Some(c) = map.cell_of(dest) {
            map.mark_occupied(c);
        }
    }

    /// Navigates to a point with the waypoint follower, within the remaining
    /// budget.
    pub fn navigate(&mut self, goal: Point) -> Result<NavOutcome, AgentError> {
        self.ensure_spin()?;
        let budget = self.budget_left();
        let tol = self.config.goal_tolerance;
        Ok(pointnav::navigate_to(self, goal, budget, tol))
    }

    /// Rotates `times` times in one direction.
    pub fn turn(&mut self, action: Action, times: u32) -> Result<(), AgentError> {
        self.ensure_spin()?;
        for _ in 0..times {
            self.act(action)?;
        }
        Ok(())
    }

    /// Issues Stop for the current goal and records the declaration.
    pub fn declare_found(&mut self) -> Result<FoundEvent, AgentError> {
        self.act(Action::Stop)?;
        let event = FoundEvent {
            step: self.steps_taken(),
            position: self.pose().position(),
        };
        self.current_log().found = Some(event.clone());
        Ok(event)
    }

    /// Reveals the next goal. Returns false when there is none.
    pub fn advance_goal(&mut self) -> bool {
        if !self.world.advance_goal() {
            return false;
        }
        self.explorer.start_goal();
        let step = self.steps_taken();
        self.goals.push(GoalLog {
            goal_index: self.world.goal_index(),
            start_step: step,
            ..GoalLog::default()
        });
        let obs = self.observation.clone();
        let targets = self.world.current_goal().target_ids.clone();
        let log = self.current_log();
        for s in &obs.sightings {
            if targets.contains(&s.object_id) {
                log.sighted_targets.insert(s.object_id);
            }
        }
        true
    }

    /// The payload of the active goal as the program's `goal` value.
    pub fn goal_is_image(&self) -> bool {
        self.world.current_goal().kind == GoalKind::Image
    }
}

impl NavBody for Agent {
    fn pose(&self) -> AgentPose {
        self.world.pose()
    }

    fn obstacle_map(&self) -> &ObstacleMap {
        self.explorer.obstacles()
    }

    fn obstacle_map_mut(&mut self) -> &mut ObstacleMap {
        self.explorer.obstacles_mut()
    }

    fn act(&mut self, action: Action) -> Option<bool> {
        Agent::act(self, action).ok().map(|o| o.collided)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{CellKind, GoalSpec, Grid, SceneObject, TaskKind};
    use std::collections::BTreeMap;

    fn room_with_chair() -> (Arc<Scene>, Episode) {
        let mut grid = Grid::new(16, 16, CellKind::Free);
        for i in 0..16 {
            for c in [
                crate::geometry::Cell::new(0, i),
                crate::geometry::Cell::new(15, i),
                crate::geometry::Cell::new(i, 0),
                crate::geometry::Cell::new(i, 15),
            ] {
                grid.set(c, CellKind::Obstacle);
            }
        }
        let chair = SceneObject {
            id: 1,
            category: "chair".into(),
            subcategory: "armchair".into(),
            attributes: BTreeMap::new(),
            position: Point::new(3.125, 3.125),
            image_ref: Some("img_001".into()),
        };
        let scene = Arc::new(Scene::new("room", 0.25, grid, vec![chair]).unwrap());
        let episode = Episode {
            scene_ref: "room".into(),
            start_pose: AgentPose::new(0.625, 0.625, 180.0),
            goals: vec![GoalSpec {
                kind: GoalKind::Category,
                payload: "chair".into(),
                target_ids: [1].into(),
                ground_truth_answer: None,
            }],
            task_kind: TaskKind::Ovon,
            step_budget_per_goal: 500,
            success_radius: 1.0,
        };
        (scene, episode)
    }

    #[test]
    fn explore_then_navigate_reaches_the_chair() {
        let (scene, episode) = room_with_chair();
        let mut agent = Agent::new(scene, episode, AgentConfig::default()).unwrap();
        agent.set_step_limit(500);
        let out = agent
            .explore(&ExploreTarget::Text("chair".into()), &["chair".to_string()])
            .unwrap();
        assert_eq!(out.status, ExploreStatus::Found);
        assert!(agent.actions()[..12].iter().all(|a| *a == Action::MoveLeft));
        let nav = agent.navigate(out.point.unwrap()).unwrap();
        assert_eq!(nav.status, pointnav::NavStatus::Reached);
        assert!(agent.pose().position().distance(Point::new(3.125, 3.125)) <= 0.25);
        agent.declare_found().unwrap();
        assert!(agent.goal_logs()[0].found.is_some());
        assert!(agent.goal_logs()[0].detected_targets.contains(&1));
    }

    #[test]
    fn budget_is_enforced() {
        let (scene, episode) = room_with_chair();
        let mut agent = Agent::new(scene, episode, AgentConfig::default()).unwrap();
        agent.set_step_limit(3);
        assert!(matches!(
            agent.turn(Action::MoveLeft, 1),
            Err(AgentError::BudgetExhausted)
        ));
        assert_eq!(agent.steps_taken(), 3);
    }
}
