use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::raycast;
use super::scene::{AgentPose, CellKind, Episode, GoalSpec, Scene};
use super::{GridError, Result, PITCH_LIMIT_DEG, PITCH_STEP_DEG, STEP_SIZE, TURN_DEG};
use crate::geometry::{normalize_deg, wrap_180, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    /// Rotate 30 degrees counter-clockwise.
    MoveLeft,
    /// Rotate 30 degrees clockwise.
    MoveRight,
    LookUp,
    LookDown,
    Stop,
}

impl Action {
    pub fn is_rotation(self) -> bool {
        matches!(self, Action::MoveLeft | Action::MoveRight)
    }

    /// Signed heading change in degrees.
    pub fn heading_delta(self) -> f64 {
        match self {
            Action::MoveLeft => -TURN_DEG,
            Action::MoveRight => TURN_DEG,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub hfov_deg: f64,
    pub depth_rays: usize,
    pub range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            hfov_deg: 79.0,
            depth_rays: 64,
            range: 5.0,
        }
    }
}

impl SensorConfig {
    pub fn half_fov(&self) -> f64 {
        self.hfov_deg / 2.0
    }

    /// Angular offset of depth ray `i` relative to the heading, left to right.
    pub fn ray_offset(&self, i: usize) -> f64 {
        if self.depth_rays <= 1 {
            return 0.0;
        }
        -self.half_fov() + self.hfov_deg * i as f64 / (self.depth_rays - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sighting {
    pub object_id: u32,
    pub category: String,
    /// Degrees relative to the heading; negative is to the left.
    pub bearing: f64,
    pub range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeGoal {
    pub distance: f64,
    pub heading_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// GPS + compass reading.
    pub pose: AgentPose,
    pub sightings: Vec<Sighting>,
    pub depth_scan: Vec<f64>,
    pub relative_goal: Option<RelativeGoal>,
    pub steps_taken: u64,
    pub collided: bool,
}

/// Dynamic state of one episode: pose, step count and goal bookkeeping.
#[derive(Debug, Clone)]
pub struct WorldState {
    scene: Arc<Scene>,
    episode: Episode,
    sensor: SensorConfig,
    pose: AgentPose,
    steps_taken: u64,
    goal_index: usize,
    goal_stopped: bool,
    terminated: bool,
    nav_point: Option<Point>,
    last_collision: bool,
    distance_travelled: f64,
}

impl WorldState {
    pub fn reset(scene: Arc<Scene>, episode: Episode) -> Result<Self> {
        Self::reset_with(scene, episode, SensorConfig::default())
    }

    pub fn reset_with(scene: Arc<Scene>, episode: Episode, sensor: SensorConfig) -> Result<Self> {
        episode.validate(&scene)?;
        let mut pose = episode.start_pose;
        pose.heading = normalize_deg(pose.heading);
        Ok(Self {
            scene,
            episode,
            sensor,
            pose,
            steps_taken: 0,
            goal_index: 0,
            goal_stopped: false,
            terminated: false,
            nav_point: None,
            last_collision: false,
            distance_travelled: 0.0,
        })
    }

    pub fn scene(&self) -> &Arc<Scene> {
        &self.scene
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn sensor(&self) -> &SensorConfig {
        &self.sensor
    }

    pub fn pose(&self) -> AgentPose {
        self.pose
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn distance_travelled(&self) -> f64 {
        self.distance_travelled
    }

    /// The goal currently revealed to the agent. Later goals stay hidden until
    /// [`WorldState::advance_goal`] is called.
    pub fn current_goal(&self) -> &GoalSpec {
        &self.episode.goals[self.goal_index]
    }

    pub fn goal_index(&self) -> usize {
        self.goal_index
    }

    pub fn goal_stopped(&self) -> bool {
        self.goal_stopped
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    /// Reveals the next goal. Returns false (and terminates) when none is left.
    pub fn advance_goal(&mut self) -> bool {
        if self.goal_index + 1 < self.episode.goals.len() {
            self.goal_index += 1;
            self.goal_stopped = false;
            self.nav_point = None;
            true
        } else {
            self.terminated = true;
            false
        }
    }

    pub fn terminate(&mut self) {
        self.terminated = true;
    }

    pub fn set_nav_point(&mut self, point: Option<Point>) {
        self.nav_point = point;
    }

    pub fn step(&mut self, action: Action) -> Result<Observation> {
        if self.terminated {
            return Err(GridError::Protocol("action after episode termination".into()));
        }
        if self.goal_stopped {
            return Err(GridError::Protocol(
                "action after Stop; the current goal attempt is finished".into(),
            ));
        }
        self.last_collision = false;
        match action {
            Action::Forward => {
                let next = self.pose.position().offset(self.pose.heading, STEP_SIZE);
                if self.scene.is_free_point(next) {
                    self.pose.x = next.x;
                    self.pose.y = next.y;
                    self.distance_travelled += STEP_SIZE;
                } else {
                    self.last_collision = true;
                }
            }
            Action::MoveLeft | Action::MoveRight => {
                self.pose.heading = normalize_deg(self.pose.heading + action.heading_delta());
            }
            Action::LookUp => {
                self.pose.pitch = (self.pose.pitch + PITCH_STEP_DEG).min(PITCH_LIMIT_DEG);
            }
            Action::LookDown => {
                self.pose.pitch = (self.pose.pitch - PITCH_STEP_DEG).max(-PITCH_LIMIT_DEG);
            }
            Action::Stop => self.goal_stopped = true,
        }
        self.steps_taken += 1;
        Ok(self.sense())
    }

    pub fn sense(&self) -> Observation {
        let scene = &*self.scene;
        let grid = &scene.grid;
        let origin = self.pose.position();
        let blocked = |c| grid.get(c) == CellKind::Obstacle;
        let depth_scan = (0..self.sensor.depth_rays)
            .map(|i| {
                raycast::cast(
                    grid.rows(),
                    grid.cols(),
                    scene.resolution,
                    origin,
                    self.pose.heading + self.sensor.ray_offset(i),
                    self.sensor.range,
                    blocked,
                )
            })
            .collect();
        let sightings = visible_objects(scene, &self.sensor, self.pose);
        let relative_goal = self.nav_point.map(|p| RelativeGoal {
            distance: origin.distance(p),
            heading_offset: wrap_180(origin.bearing_to(p) - self.pose.heading),
        });
        Observation {
            pose: self.pose,
            sightings,
            depth_scan,
            relative_goal,
            steps_taken: self.steps_taken,
            collided: self.last_collision,
        }
    }
}

/// Objects inside the field of view, within range and with a clear line of
/// sight. An object within one cell of the agent always counts as in view:
/// the agent is standing at it and its bearing is not meaningful.
pub fn visible_objects(scene: &Scene, sensor: &SensorConfig, pose: AgentPose) -> Vec<Sighting> {
    let origin = pose.position();
    let grid = &scene.grid;
    scene
        .objects
        .iter()
        .filter_map(|obj| {
            let range = origin.distance(obj.position);
            if range > sensor.range {
                return None;
            }
            let bearing = if range == 0.0 {
                0.0
            } else {
                wrap_180(origin.bearing_to(obj.position) - pose.heading)
            };
            if bearing.abs() > sensor.half_fov() && range > scene.resolution {
                return None;
            }
            let clear = raycast::segment_clear(grid.rows(), grid.cols(), scene.resolution, origin, obj.position, |c| {
                grid.get(c) == CellKind::Obstacle
            });
            clear.then(|| Sighting {
                object_id: obj.id,
                category: obj.category.clone(),
                bearing,
                range,
            })
        })
        .collect()
}
