use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::frontier::{extract_frontiers, select_frontier, travel_field, DEFAULT_MIN_FRONTIER_SIZE};
use super::maps::{
    memory_recall_cell, recompute_value_map, update_memory, update_obstacle_map, view_cone, CellState, FeatureMap,
    ObstacleMap, ValueMap,
};
use crate::geometry::{Cell, Point};
use crate::gridworld::{Action, AgentPose, Scene, SensorConfig, TURNS_PER_REVOLUTION};
use crate::perception::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorerConfig {
    /// Recall fires when the best value-map cell strictly exceeds this.
    /// 1.0 disables memory.
    pub memory_threshold: f64,
    pub min_frontier_size: usize,
    /// Repeat the initial look-around at the start of every goal, not just
    /// the first one.
    pub spin_every_goal: bool,
    /// Distance at which a waypoint counts as reached.
    pub arrival_tolerance: f64,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        Self {
            memory_threshold: 0.4,
            min_frontier_size: DEFAULT_MIN_FRONTIER_SIZE,
            spin_every_goal: false,
            arrival_tolerance: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "directive", rename_all = "snake_case")]
pub enum Directive {
    Rotate { action: Action },
    Goto { point: Point, from_memory: bool },
    TargetFound { point: Point },
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Recall {
    Idle,
    Heading(Cell),
    /// At the recalled cell, looking around; counts remaining turns.
    Verifying(Cell, u32),
}

/// Map stack plus the exploration state machine for one episode.
#[derive(Debug, Clone)]
pub struct Explorer {
    config: ExplorerConfig,
    obstacles: ObstacleMap,
    features: FeatureMap,
    values: ValueMap,
    target: Option<(String, Embedding)>,
    recompute_calls: usize,
    spin_remaining: u32,
    recall_pending: bool,
    recall: Recall,
    suppressed: BTreeSet<Cell>,
    frontier_goal: Option<Cell>,
    blacklist: BTreeSet<Cell>,
    recalls_fired: usize,
}

impl Explorer {
    pub fn new(scene: &Scene, config: ExplorerConfig) -> Self {
        let (rows, cols) = (scene.grid.rows(), scene.grid.cols());
        Self {
            config,
            obstacles: ObstacleMap::for_scene(scene),
            features: FeatureMap::new(rows, cols),
            values: ValueMap::new(rows, cols),
            target: None,
            recompute_calls: 0,
            spin_remaining: TURNS_PER_REVOLUTION,
            recall_pending: false,
            recall: Recall::Idle,
            suppressed: BTreeSet::new(),
            frontier_goal: None,
            blacklist: BTreeSet::new(),
            recalls_fired: 0,
        }
    }

    pub fn config(&self) -> &ExplorerConfig {
        &self.config
    }

    pub fn obstacles(&self) -> &ObstacleMap {
        &self.obstacles
    }

    pub fn obstacles_mut(&mut self) -> &mut ObstacleMap {
        &mut self.obstacles
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn values(&self) -> &ValueMap {
        &self.values
    }

    pub fn target(&self) -> Option<&Embedding> {
        self.target.as_ref().map(|(_, e)| e)
    }

    /// How many times the value map has been re-grounded in a new target.
    pub fn recompute_calls(&self) -> usize {
        self.recompute_calls
    }

    pub fn recalls_fired(&self) -> usize {
        self.recalls_fired
    }

    pub fn spin_pending(&self) -> bool {
        self.spin_remaining > 0
    }

    /// Called when a new goal is revealed.
    pub fn start_goal(&mut self) {
        if self.config.spin_every_goal {
            self.spin_remaining = TURNS_PER_REVOLUTION;
        }
        self.frontier_goal = None;
        self.recall = Recall::Idle;
    }

    /// Sets the navigation target. The value map is recomputed from the
    /// feature memory, and recall armed, only when the target changes.
    pub fn set_target(&mut self, key: &str, embedding: Embedding) -> bool {
        if self.target.as_ref().is_some_and(|(k, _)| k == key) {
            return false;
        }
        self.values = recompute_value_map(&self.features, &embedding);
        self.recompute_calls += 1;
        self.target = Some((key.to_string(), embedding));
        self.suppressed.clear();
        self.recall_pending = true;
        self.recall = Recall::Idle;
        self.frontier_goal = None;
        true
    }

    /// Integrates a new observation into all maps.
    pub fn observe(&mut self, pose: AgentPose, depth_scan: &[f64], sensor: &SensorConfig, obs_embedding: &Embedding) {
        update_obstacle_map(&mut self.obstacles, pose, depth_scan, sensor);
        let cone = view_cone(
            self.obstacles.rows(),
            self.obstacles.cols(),
            self.obstacles.resolution(),
            pose,
            depth_scan,
            sensor,
        );
        let sim = self.target.as_ref().map(|(_, t)| obs_embedding.similarity(t));
        update_memory(
            &mut self.features,
            &mut self.values,
            &cone,
            sensor.half_fov(),
            obs_embedding,
            sim,
        );
        for &c in &self.suppressed {
            let conf = self.values.confidence(c);
            self.values.set(c, 0.0, conf);
        }
    }

    fn suppress(&mut self, cell: Cell) {
        let conf = self.values.confidence(cell);
        self.values.set(cell, 0.0, conf);
        self.suppressed.insert(cell);
    }

    /// Reports that the last goto directive could not be reached.
    pub fn goto_failed(&mut self, point: Point) {
        match self.recall {
            Recall::Heading(cell) if self.obstacles.center(cell) == point => {
                self.suppress(cell);
                self.recall = Recall::Idle;
            }
            _ => {
                if let Some(goal) = self.frontier_goal.take() {
                    self.blacklist.insert(goal);
                }
            }
        }
    }

    fn is_frontier(&self, cell: Cell) -> bool {
        self.obstacles.get(cell) == CellState::Free
            && cell
                .neighbors4(self.obstacles.rows(), self.obstacles.cols())
                .any(|n| self.obstacles.get(n) == CellState::Unknown)
    }

    /// Decides what to do next. `sighted` is the position of a target
    /// detection in the current view, if any.
    pub fn explore_step(&mut self, pose: AgentPose, sighted: Option<Point>) -> Directive {
        if self.spin_remaining > 0 {
            self.spin_remaining -= 1;
            return Directive::Rotate {
                action: Action::MoveLeft,
            };
        }
        if let Some(point) = sighted {
            self.recall = Recall::Idle;
            return Directive::TargetFound { point };
        }
        let here = pose.position();
        if self.recall_pending {
            self.recall_pending = false;
            if let Some(cell) = memory_recall_cell(&self.values, self.config.memory_threshold) {
                self.recalls_fired += 1;
                self.recall = Recall::Heading(cell);
            }
        }
        if let Recall::Heading(cell) = self.recall {
            let point = self.obstacles.center(cell);
            if here.distance(point) > self.config.arrival_tolerance {
                return Directive::Goto {
                    point,
                    from_memory: true,
                };
            }
            self.recall = Recall::Verifying(cell, TURNS_PER_REVOLUTION - 1);
        }
        if let Recall::Verifying(cell, turns) = self.recall {
            if turns > 0 {
                self.recall = Recall::Verifying(cell, turns - 1);
                return Directive::Rotate {
                    action: Action::MoveLeft,
                };
            }
            self.suppress(cell);
            self.recall = Recall::Idle;
        }
        if let Some(goal) = self.frontier_goal {
            let point = self.obstacles.center(goal);
            if !self.is_frontier(goal) {
                self.frontier_goal = None;
            } else if here.distance(point) <= self.config.arrival_tolerance {
                self.blacklist.insert(goal);
                self.frontier_goal = None;
            } else {
                return Directive::Goto {
                    point,
                    from_memory: false,
                };
            }
        }
        let mut frontiers: Vec<_> = extract_frontiers(&self.obstacles, self.config.min_frontier_size)
            .into_iter()
            .filter(|f| !self.blacklist.contains(&f.midpoint_cell))
            .collect();
        if frontiers.is_empty() {
            return Directive::Exhausted;
        }
        let Some(from) = self.obstacles.cell_of(here) else {
            return Directive::Exhausted;
        };
        let field = travel_field(&self.obstacles, from);
        frontiers.retain(|f| field.cost(f.midpoint_cell).is_some());
        match select_frontier(&mut frontiers, &self.values, &field) {
            Some(i) => {
                let cell = frontiers[i].midpoint_cell;
                self.frontier_goal = Some(cell);
                Directive::Goto {
                    point: frontiers[i].midpoint,
                    from_memory: false,
                }
            }
            None => Directive::Exhausted,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{CellKind, Grid};

    fn open_scene() -> Scene {
        Scene::new("open", 0.25, Grid::new(20, 20, CellKind::Free), vec![]).unwrap()
    }

    fn unit(i: usize) -> Embedding {
        let mut v = vec![0.0; 8];
        v[i] = 1.0;
        Embedding::from_vec(v).unwrap()
    }

    #[test]
    fn first_directives_are_a_full_spin() {
        let mut ex = Explorer::new(&open_scene(), ExplorerConfig::default());
        ex.set_target("chair", unit(0));
        let pose = AgentPose::new(2.5, 2.5, 0.0);
        for _ in 0..12 {
            assert_eq!(
                ex.explore_step(pose, None),
                Directive::Rotate {
                    action: Action::MoveLeft
                }
            );
        }
        assert!(!matches!(ex.explore_step(pose, None), Directive::Rotate { .. }));
    }

    #[test]
    fn recompute_only_on_target_change() {
        let mut ex = Explorer::new(&open_scene(), ExplorerConfig::default());
        assert!(ex.set_target("chair", unit(0)));
        assert!(!ex.set_target("chair", unit(0)));
        assert!(ex.set_target("bed", unit(1)));
        assert_eq!(ex.recompute_calls(), 2);
    }

    #[test]
    fn recall_goes_to_memory_then_resumes_exploring() {
        let scene = open_scene();
        let mut ex = Explorer::new(&scene, ExplorerConfig::default());
        let planted = Cell::new(10, 15);
        ex.features.set(planted, Some(unit(0)), 1.0);
        // some known space so that frontiers exist afterwards
        for c in 0..20 {
            ex.obstacles.set(Cell::new(10, c), CellState::Free);
        }
        ex.spin_remaining = 0;
        ex.set_target("chair", unit(0));
        let start = AgentPose::new(0.6, 2.6, 0.0);
        let target = scene_center(planted);
        assert_eq!(
            ex.explore_step(start, None),
            Directive::Goto {
                point: target,
                from_memory: true
            }
        );
        let there = AgentPose::new(target.x, target.y, 0.0);
        for _ in 0..11 {
            assert!(matches!(ex.explore_step(there, None), Directive::Rotate { .. }));
        }
        assert!(matches!(
            ex.explore_step(there, None),
            Directive::Goto { from_memory: false, .. }
        ));
        assert_eq!(ex.values.value(planted), 0.0);
        // a second observation there cannot revive the cell
        ex.observe(there, &vec![5.0; 64], &SensorConfig::default(), &unit(0));
        assert_eq!(ex.values.value(planted), 0.0);
    }

    fn scene_center(c: Cell) -> Point {
        c.center(0.25)
    }

    #[test]
    fn exhausted_when_map_is_known() {
        let scene = open_scene();
        let mut ex = Explorer::new(&scene, ExplorerConfig::default());
        ex.obstacles = ObstacleMap::known(&scene);
        ex.spin_remaining = 0;
        ex.set_target("chair", unit(0));
        assert_eq!(
            ex.explore_step(AgentPose::new(1.0, 1.0, 0.0), None),
            Directive::Exhausted
        );
    }
}
