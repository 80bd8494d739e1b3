use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GridError, Result};
use crate::geometry::{cell_of, Cell, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Free,
    Obstacle,
}

/// Row-major occupancy grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    cells: Vec<CellKind>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, fill: CellKind) -> Self {
        Self {
            rows,
            cols,
            cells: vec![fill; rows * cols],
        }
    }

    /// Parses `#` (obstacle) / `.` (free) rows.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        if rows.is_empty() {
            return Err(GridError::Validation("grid has no rows".into()));
        }
        let cols = rows[0].as_ref().chars().count();
        if cols == 0 {
            return Err(GridError::Validation("grid has no columns".into()));
        }
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() != cols {
                return Err(GridError::Validation(format!(
                    "grid row {r} has {} columns, expected {cols}",
                    row.chars().count()
                )));
            }
            for (c, ch) in row.chars().enumerate() {
                cells.push(match ch {
                    '.' => CellKind::Free,
                    '#' => CellKind::Obstacle,
                    other => {
                        return Err(GridError::Validation(format!(
                            "grid row {r} column {c}: unexpected character {other:?}"
                        )))
                    }
                });
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            cells,
        })
    }

    pub fn to_rows(&self) -> Vec<String> {
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| match self.get(Cell::new(r, c)) {
                        CellKind::Free => '.',
                        CellKind::Obstacle => '#',
                    })
                    .collect()
            })
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, cell: Cell) -> CellKind {
        self.cells[cell.row * self.cols + cell.col]
    }

    pub fn set(&mut self, cell: Cell, kind: CellKind) {
        self.cells[cell.row * self.cols + cell.col] = kind;
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols && self.get(cell) == CellKind::Free
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| Cell::new(r, c)))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(|&c| self.get(c) == CellKind::Free)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub category: String,
    pub subcategory: String,
    pub attributes: BTreeMap<String, String>,
    pub position: Point,
    pub image_ref: Option<String>,
}

impl SceneObject {
    /// Lowercased tokens of category, subcategory and attribute values.
    pub fn descriptor_tokens(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for text in [&self.category, &self.subcategory]
            .into_iter()
            .chain(self.attributes.values())
        {
            out.extend(crate::perception::tokenize(text));
        }
        out
    }

    /// Text describing what the object looks like: category, subcategory and
    /// attribute values, in a stable order.
    pub fn appearance_text(&self) -> String {
        let mut parts = vec![self.category.clone()];
        if self.subcategory != self.category {
            parts.push(self.subcategory.clone());
        }
        parts.extend(self.attributes.values().cloned());
        parts.join(" ")
    }
}

/// Static world: occupancy grid and semantically labelled objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    pub resolution: f64,
    pub grid: Grid,
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn new(name: impl Into<String>, resolution: f64, grid: Grid, objects: Vec<SceneObject>) -> Result<Self> {
        let scene = Self {
            name: name.into(),
            resolution,
            grid,
            objects,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(GridError::Validation(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        if self.grid.rows() == 0 || self.grid.cols() == 0 {
            return Err(GridError::Validation("grid is empty".into()));
        }
        let mut ids = HashSet::new();
        for obj in &self.objects {
            if !ids.insert(obj.id) {
                return Err(GridError::Validation(format!("duplicate object id {}", obj.id)));
            }
            if obj.category.trim().is_empty() {
                return Err(GridError::Validation(format!(
                    "object {} has an empty category",
                    obj.id
                )));
            }
            match self.cell_of(obj.position) {
                None => {
                    return Err(GridError::Validation(format!(
                        "object {} at ({}, {}) lies outside the grid",
                        obj.id, obj.position.x, obj.position.y
                    )))
                }
                Some(cell) if !self.grid.is_free(cell) => {
                    return Err(GridError::Validation(format!(
                        "object {} at ({}, {}) lies on an obstacle cell (row {}, col {})",
                        obj.id, obj.position.x, obj.position.y, cell.row, cell.col
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        cell_of(p, self.resolution, self.grid.rows(), self.grid.cols())
    }

    pub fn is_free_point(&self, p: Point) -> bool {
        self.cell_of(p).is_some_and(|c| self.grid.is_free(c))
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_by_image(&self, image_ref: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.image_ref.as_deref() == Some(image_ref))
    }

    /// Number of distinct `room` attribute values.
    pub fn room_count(&self) -> usize {
        self.objects
            .iter()
            .filter_map(|o| o.attributes.get("room"))
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn width_m(&self) -> f64 {
        self.grid.cols() as f64 * self.resolution
    }

    pub fn height_m(&self) -> f64 {
        self.grid.rows() as f64 * self.resolution
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentPose {
    pub x: f64,
    pub y: f64,
    /// Degrees in `[0, 360)`.
    pub heading: f64,
    /// Degrees in `[-30, 30]`.
    #[serde(default)]
    pub pitch: f64,
}

impl AgentPose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: crate::geometry::normalize_deg(heading),
            pitch: 0.0,
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Ovon,
    Goat,
    Multion,
    Eqa,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::Ovon, TaskKind::Goat, TaskKind::Multion, TaskKind::Eqa];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Ovon => "ovon",
            TaskKind::Goat => "goat",
            TaskKind::Multion => "multion",
            TaskKind::Eqa => "eqa",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ovon" => Ok(TaskKind::Ovon),
            "goat" => Ok(TaskKind::Goat),
            "multion" => Ok(TaskKind::Multion),
            "eqa" => Ok(TaskKind::Eqa),
            other => Err(format!("unknown task kind {other:?} (expected ovon|goat|multion|eqa)")),
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalKind {
    Category,
    Description,
    Image,
    Question,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub kind: GoalKind,
    /// Category name, description text, image reference or question.
    pub payload: String,
    /// Objects that satisfy the goal. For questions, the objects the question
    /// is about.
    #[serde(default)]
    pub target_ids: BTreeSet<u32>,
    #[serde(default)]
    pub ground_truth_answer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Episode {
    pub scene_ref: String,
    pub start_pose: AgentPose,
    pub goals: Vec<GoalSpec>,
    pub task_kind: TaskKind,
    pub step_budget_per_goal: u32,
    pub success_radius: f64,
}

impl Episode {
    pub fn validate(&self, scene: &Scene) -> Result<()> {
        if self.scene_ref != scene.name {
            return Err(GridError::Validation(format!(
                "episode refers to scene {:?} but was given {:?}",
                self.scene_ref, scene.name
            )));
        }
        if self.goals.is_empty() {
            return Err(GridError::Validation("episode has no goals".into()));
        }
        if self.step_budget_per_goal == 0 {
            return Err(GridError::Validation("step_budget_per_goal must be positive".into()));
        }
        if self.success_radius.is_nan() || self.success_radius <= 0.0 {
            return Err(GridError::Validation("success_radius must be positive".into()));
        }
        if !scene.is_free_point(self.start_pose.position()) {
            return Err(GridError::Validation(format!(
                "start pose ({}, {}) is not on a free cell",
                self.start_pose.x, self.start_pose.y
            )));
        }
        if !(-30.0..=30.0).contains(&self.start_pose.pitch) {
            return Err(GridError::Validation("start pitch outside [-30, 30]".into()));
        }
        for (i, goal) in self.goals.iter().enumerate() {
            let is_question = goal.kind == GoalKind::Question;
            if is_question != goal.ground_truth_answer.is_some() {
                return Err(GridError::Validation(format!(
                    "goal {i}: ground_truth_answer must be present exactly for question goals"
                )));
            }
            if !is_question && goal.target_ids.is_empty() {
                return Err(GridError::Validation(format!("goal {i}: no target objects")));
            }
            if goal.payload.trim().is_empty() {
                return Err(GridError::Validation(format!("goal {i}: empty payload")));
            }
            for id in &goal.target_ids {
                if scene.object(*id).is_none() {
                    return Err(GridError::Validation(format!("goal {i}: unknown target id {id}")));
                }
            }
            if goal.kind == GoalKind::Image && scene.object_by_image(&goal.payload).is_none() {
                return Err(GridError::Validation(format!(
                    "goal {i}: image reference {:?} names no object",
                    goal.payload
                )));
            }
        }
        Ok(())
    }
}

// On-disk representation. Field names here are the file format.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    resolution: f64,
    grid: Vec<String>,
    objects: Vec<ObjectRecord>,
    #[serde(default)]
    episodes: Vec<Episode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectRecord {
    id: u32,
    category: String,
    #[serde(default)]
    subcategory: Option<String>,
    #[serde(default)]
    attributes: BTreeMap<String, String>,
    x: f64,
    y: f64,
    #[serde(default)]
    image_ref: Option<String>,
}

/// A scene plus the episodes stored alongside it.
#[derive(Debug, Clone)]
pub struct SceneBundle {
    pub scene: Scene,
    pub episodes: Vec<Episode>,
}

impl SceneBundle {
    pub fn to_json(&self) -> String {
        let file = SceneFile {
            name: Some(self.scene.name.clone()),
            resolution: self.scene.resolution,
            grid: self.scene.grid.to_rows(),
            objects: self
                .scene
                .objects
                .iter()
                .map(|o| ObjectRecord {
                    id: o.id,
                    category: o.category.clone(),
                    subcategory: Some(o.subcategory.clone()),
                    attributes: o.attributes.clone(),
                    x: o.position.x,
                    y: o.position.y,
                    image_ref: o.image_ref.clone(),
                })
                .collect(),
            episodes: self.episodes.clone(),
        };
        serde_json::to_string_pretty(&file).expect("scene serialization cannot fail")
    }
}

/// Parses a scene file. `default_name` is used when the file carries no
/// `name` field (the loader passes the file stem).
pub fn parse_bundle(text: &str, default_name: &str) -> Result<SceneBundle> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| GridError::Format {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let grid = Grid::from_rows(&file.grid)?;
    let objects = file
        .objects
        .into_iter()
        .map(|r| SceneObject {
            subcategory: r.subcategory.unwrap_or_else(|| r.category.clone()),
            id: r.id,
            category: r.category,
            attributes: r.attributes,
            position: Point::new(r.x, r.y),
            image_ref: r.image_ref,
        })
        .collect();
    let name = file.name.unwrap_or_else(|| default_name.to_string());
    let scene = Scene::new(name, file.resolution, grid, objects)?;
    for (i, ep) in file.episodes.iter().enumerate() {
        ep.validate(&scene)
            .map_err(|e| GridError::Validation(format!("episode {i}: {e}")))?;
    }
    Ok(SceneBundle {
        scene,
        episodes: file.episodes,
    })
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<SceneBundle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GridError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());
    parse_bundle(&text, &stem)
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    load_bundle(path).map(|b| b.scene)
}
