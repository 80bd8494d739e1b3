use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geometry::{cell_of, wrap_180, Cell, Point};
use crate::gridworld::raycast::RayWalk;
use crate::gridworld::{AgentPose, CellKind, Scene, SensorConfig};
use crate::perception::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

/// Tri-state occupancy grid built from depth scans.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMap {
    rows: usize,
    cols: usize,
    resolution: f64,
    origin: Point,
    cells: Vec<CellState>,
}

impl ObstacleMap {
    pub fn new(rows: usize, cols: usize, resolution: f64) -> Self {
        Self {
            rows,
            cols,
            resolution,
            origin: Point::new(0.0, 0.0),
            cells: vec![CellState::Unknown; rows * cols],
        }
    }

    /// An all-unknown map covering `scene`.
    pub fn for_scene(scene: &Scene) -> Self {
        Self::new(scene.grid.rows(), scene.grid.cols(), scene.resolution)
    }

    /// A fully known map copied from the scene's ground truth.
    pub fn known(scene: &Scene) -> Self {
        let mut map = Self::for_scene(scene);
        for cell in scene.grid.cells() {
            let state = match scene.grid.get(cell) {
                CellKind::Free => CellState::Free,
                CellKind::Obstacle => CellState::Occupied,
            };
            map.set(cell, state);
        }
        map
    }

    /// Builds a map from rows of `?` (unknown), `.` (free) and `#` (occupied).
    pub fn from_rows<S: AsRef<str>>(rows: &[S], resolution: f64) -> Option<Self> {
        let cols = rows.first()?.as_ref().chars().count();
        let mut map = Self::new(rows.len(), cols, resolution);
        for (r, line) in rows.iter().enumerate() {
            let line = line.as_ref();
            if line.chars().count() != cols {
                return None;
            }
            for (c, ch) in line.chars().enumerate() {
                let state = match ch {
                    '?' => CellState::Unknown,
                    '.' => CellState::Free,
                    '#' => CellState::Occupied,
                    _ => return None,
                };
                map.set(Cell::new(r, c), state);
            }
        }
        Some(map)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn get(&self, cell: Cell) -> CellState {
        self.cells[cell.row * self.cols + cell.col]
    }

    pub fn set(&mut self, cell: Cell, state: CellState) {
        self.cells[cell.row * self.cols + cell.col] = state;
    }

    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        cell_of(
            Point::new(p.x - self.origin.x, p.y - self.origin.y),
            self.resolution,
            self.rows,
            self.cols,
        )
    }

    pub fn center(&self, cell: Cell) -> Point {
        let c = cell.center(self.resolution);
        Point::new(c.x + self.origin.x, c.y + self.origin.y)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| Cell::new(r, c)))
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }

    /// Marks a cell occupied, e.g. after bumping into it.
    pub fn mark_occupied(&mut self, cell: Cell) {
        self.set(cell, CellState::Occupied);
    }
}

/// Integrates one depth scan. Cells a ray passes through become free, the
/// cell where it stops becomes occupied unless the ray reached maximum range.
/// Occupied cells are never changed.
pub fn update_obstacle_map(map: &mut ObstacleMap, pose: AgentPose, depth_scan: &[f64], sensor: &SensorConfig) {
    assert_eq!(
        depth_scan.len(),
        sensor.depth_rays,
        "depth scan width does not match the sensor configuration"
    );
    let origin = Point::new(pose.x - map.origin.x, pose.y - map.origin.y);
    if let Some(c) = cell_of(origin, map.resolution, map.rows, map.cols) {
        if map.get(c) == CellState::Unknown {
            map.set(c, CellState::Free);
        }
    }
    for (i, &depth) in depth_scan.iter().enumerate() {
        let hit = depth < sensor.range;
        let walk = RayWalk::new(
            map.rows,
            map.cols,
            map.resolution,
            origin,
            pose.heading + sensor.ray_offset(i),
            sensor.range,
        );
        for step in walk {
            let Some(cell) = step.cell else { break };
            if step.t_enter < depth {
                if map.get(cell) == CellState::Unknown {
                    map.set(cell, CellState::Free);
                }
            } else {
                if hit {
                    map.set(cell, CellState::Occupied);
                }
                break;
            }
        }
    }
}

/// Per-cell scalar relevance to the current target with its confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMap {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    confidence: Vec<f64>,
}

impl ValueMap {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            value: vec![0.0; rows * cols],
            confidence: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn value(&self, cell: Cell) -> f64 {
        self.value[cell.row * self.cols + cell.col]
    }

    pub fn confidence(&self, cell: Cell) -> f64 {
        self.confidence[cell.row * self.cols + cell.col]
    }

    pub fn set(&mut self, cell: Cell, value: f64, confidence: f64) {
        let i = cell.row * self.cols + cell.col;
        self.value[i] = value;
        self.confidence[i] = confidence;
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    pub fn confidences(&self) -> &[f64] {
        &self.confidence
    }
}

/// Per-cell unit feature vector (or nothing yet) with its confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    rows: usize,
    cols: usize,
    vectors: Vec<Option<Embedding>>,
    confidence: Vec<f64>,
}

impl FeatureMap {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            vectors: vec![None; rows * cols],
            confidence: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vector(&self, cell: Cell) -> Option<&Embedding> {
        self.vectors[cell.row * self.cols + cell.col].as_ref()
    }

    pub fn confidence(&self, cell: Cell) -> f64 {
        self.confidence[cell.row * self.cols + cell.col]
    }

    pub fn set(&mut self, cell: Cell, vector: Option<Embedding>, confidence: f64) {
        let i = cell.row * self.cols + cell.col;
        self.vectors[i] = vector;
        self.confidence[i] = confidence;
    }

    pub fn filled_count(&self) -> usize {
        self.vectors.iter().filter(|v| v.is_some()).count()
    }
}

/// Confidence of an observation at angular offset `theta_deg` from the
/// optical axis: 1 on the axis, falling to 0 at the edge of the field of view.
pub fn view_confidence(theta_deg: f64, half_fov_deg: f64) -> f64 {
    if theta_deg.abs() > half_fov_deg {
        return 0.0;
    }
    (theta_deg / half_fov_deg * FRAC_PI_2).cos().powi(2)
}

/// Cells of the view cone with their angular offset from the optical axis.
/// The cone is clipped by the depth of the ray nearest each cell's bearing.
pub fn view_cone(
    rows: usize,
    cols: usize,
    resolution: f64,
    pose: AgentPose,
    depth_scan: &[f64],
    sensor: &SensorConfig,
) -> Vec<(Cell, f64)> {
    let origin = pose.position();
    let half = sensor.half_fov();
    let reach = (sensor.range / resolution).ceil() as isize + 1;
    let oc = (origin.x / resolution).floor() as isize;
    let or = (origin.y / resolution).floor() as isize;
    let n = depth_scan.len();
    let mut out = Vec::new();
    for r in (or - reach).max(0)..(or + reach + 1).min(rows as isize) {
        for c in (oc - reach).max(0)..(oc + reach + 1).min(cols as isize) {
            let cell = Cell::new(r as usize, c as usize);
            let center = cell.center(resolution);
            let dist = origin.distance(center);
            if dist > sensor.range {
                continue;
            }
            let theta = if dist < 1e-9 {
                0.0
            } else {
                wrap_180(origin.bearing_to(center) - pose.heading)
            };
            if theta.abs() > half {
                continue;
            }
            if n > 0 {
                let frac = if n == 1 { 0.5 } else { (theta + half) / sensor.hfov_deg };
                let idx = ((frac * (n - 1) as f64).round() as usize).min(n - 1);
                if dist > depth_scan[idx] {
                    continue;
                }
            }
            out.push((cell, theta));
        }
    }
    out
}

/// Fuses one observation into the feature and value maps over the view cone.
/// Each cell blends the new embedding and similarity with what it held,
/// weighted by old confidence and the angular confidence of this view.
pub fn update_memory(
    fmap: &mut FeatureMap,
    vmap: &mut ValueMap,
    cone: &[(Cell, f64)],
    half_fov_deg: f64,
    obs_embedding: &Embedding,
    target_similarity: Option<f64>,
) {
    for &(cell, theta) in cone {
        let c_new = view_confidence(theta, half_fov_deg);
        if c_new <= 0.0 {
            continue;
        }
        let c_old = fmap.confidence(cell);
        let vector = match fmap.vector(cell) {
            Some(old) if c_old > 0.0 => {
                let blended: Vec<f64> = obs_embedding
                    .as_slice()
                    .iter()
                    .zip(old.as_slice())
                    .map(|(e, v)| c_new * e + c_old * v)
                    .collect();
                Embedding::from_vec(blended).unwrap_or_else(|| obs_embedding.clone())
            }
            _ => obs_embedding.clone(),
        };
        let confidence = (c_old + c_new).min(1.0);
        fmap.set(cell, Some(vector), confidence);
        if let Some(sim) = target_similarity {
            let v_old = vmap.value(cell);
            let vc_old = vmap.confidence(cell);
            let value = (c_new * sim + vc_old * v_old) / (c_new + vc_old);
            vmap.set(cell, value, (vc_old + c_new).min(1.0));
        }
    }
}

/// Re-grounds the whole value map in a new target: each filled cell gets the
/// cosine between its feature vector and the target, clamped at zero.
pub fn recompute_value_map(fmap: &FeatureMap, target: &Embedding) -> ValueMap {
    let mut vmap = ValueMap::new(fmap.rows, fmap.cols);
    for (i, v) in fmap.vectors.iter().enumerate() {
        if let Some(v) = v {
            vmap.value[i] = v.dot(target).clamp(0.0, 1.0);
            vmap.confidence[i] = fmap.confidence[i];
        }
    }
    vmap
}

/// The cell holding the highest value when it strictly exceeds `threshold`.
/// Ties go to the lowest (row, column).
pub fn memory_recall_cell(vmap: &ValueMap, threshold: f64) -> Option<Cell> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in vmap.value.iter().enumerate() {
        if v > threshold && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| Cell::new(i / vmap.cols, i % vmap.cols))
}

/// Center of [`memory_recall_cell`] in meters.
pub fn memory_recall(vmap: &ValueMap, threshold: f64, resolution: f64) -> Option<Point> {
    memory_recall_cell(vmap, threshold).map(|c| c.center(resolution))
}
