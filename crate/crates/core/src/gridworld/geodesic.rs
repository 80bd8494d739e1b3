use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::scene::Scene;
use super::{GridError, Result};
use crate::geometry::{Cell, Point, NEIGHBORS_8};

/// Length of an 8-connected grid path as a count of straight and diagonal
/// moves. Keeping the counts exact makes distances comparable bit-for-bit no
/// matter which search produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub fn units(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }

    pub fn meters(self, resolution: f64) -> f64 {
        self.units() * resolution
    }

    pub fn add_move(self, diagonal: bool) -> Self {
        if diagonal {
            Self {
                diagonal: self.diagonal + 1,
                ..self
            }
        } else {
            Self {
                straight: self.straight + 1,
                ..self
            }
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.units()
            .total_cmp(&other.units())
            .then(self.straight.cmp(&other.straight))
            .then(self.diagonal.cmp(&other.diagonal))
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Moves from `cell` on an 8-connected grid. Diagonal moves may not cut the
/// corner of a blocked cell.
pub(crate) fn grid_moves(
    cell: Cell,
    rows: usize,
    cols: usize,
    passable: &impl Fn(Cell) -> bool,
) -> impl Iterator<Item = (Cell, bool)> + '_ {
    NEIGHBORS_8.into_iter().filter_map(move |(dr, dc)| {
        let next = cell.offset(dr, dc, rows, cols)?;
        if !passable(next) {
            return None;
        }
        let diagonal = dr != 0 && dc != 0;
        if diagonal {
            let a = cell.offset(dr, 0, rows, cols)?;
            let b = cell.offset(0, dc, rows, cols)?;
            if !passable(a) || !passable(b) {
                return None;
            }
        }
        Some((next, diagonal))
    })
}

#[derive(PartialEq, Eq)]
struct Frontier(PathCost, Cell);

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest path costs over a grid.
#[derive(Debug, Clone)]
pub struct DistanceField {
    rows: usize,
    cols: usize,
    resolution: f64,
    cost: Vec<Option<PathCost>>,
}

impl DistanceField {
    pub fn compute(rows: usize, cols: usize, resolution: f64, source: Cell, passable: impl Fn(Cell) -> bool) -> Self {
        let mut cost = vec![None; rows * cols];
        let mut heap = BinaryHeap::new();
        if passable(source) {
            cost[source.row * cols + source.col] = Some(PathCost::default());
            heap.push(Frontier(PathCost::default(), source));
        }
        while let Some(Frontier(c, cell)) = heap.pop() {
            if cost[cell.row * cols + cell.col].is_some_and(|best| c > best) {
                continue;
            }
            for (next, diagonal) in grid_moves(cell, rows, cols, &passable) {
                let nc = c.add_move(diagonal);
                let slot = &mut cost[next.row * cols + next.col];
                if slot.is_none_or(|old| nc < old) {
                    *slot = Some(nc);
                    heap.push(Frontier(nc, next));
                }
            }
        }
        Self {
            rows,
            cols,
            resolution,
            cost,
        }
    }

    /// Distances over the free cells of a scene.
    pub fn from_scene(scene: &Scene, source: Cell) -> Self {
        let grid = &scene.grid;
        Self::compute(grid.rows(), grid.cols(), scene.resolution, source, |c| grid.is_free(c))
    }

    pub fn cost(&self, cell: Cell) -> Option<PathCost> {
        if cell.row >= self.rows || cell.col >= self.cols {
            return None;
        }
        self.cost[cell.row * self.cols + cell.col]
    }

    /// Meters to `cell`; `f64::INFINITY` when unreachable.
    pub fn meters(&self, cell: Cell) -> f64 {
        self.cost(cell).map_or(f64::INFINITY, |c| c.meters(self.resolution))
    }

    pub fn reachable_count(&self) -> usize {
        self.cost.iter().filter(|c| c.is_some()).count()
    }
}

/// Shortest obstacle-free 8-connected path length between the cells holding
/// `a` and `b`, in meters. Disconnected points give `f64::INFINITY`.
pub fn geodesic_distance(scene: &Scene, a: Point, b: Point) -> Result<f64> {
    let ca = scene
        .cell_of(a)
        .filter(|&c| scene.grid.is_free(c))
        .ok_or_else(|| GridError::Validation(format!("point ({}, {}) is not on a free cell", a.x, a.y)))?;
    let cb = scene
        .cell_of(b)
        .filter(|&c| scene.grid.is_free(c))
        .ok_or_else(|| GridError::Validation(format!("point ({}, {}) is not on a free cell", b.x, b.y)))?;
    if ca == cb {
        return Ok(0.0);
    }
    Ok(DistanceField::from_scene(scene, ca).meters(cb))
}
