use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::geometry::{Cell, Point};
use crate::gridworld::raycast::segment_clear;
use crate::gridworld::PathCost;
use crate::memory::{CellState, ObstacleMap};

/// How far from an obstacle-bound goal a substitute free cell may be.
pub const GOAL_SNAP_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Start point, intermediate cell centers, goal point.
    pub waypoints: Vec<Point>,
    /// Grid cells of the underlying plan, start to goal.
    pub cells: Vec<Cell>,
    /// Exact move counts of the grid plan.
    pub cost: PathCost,
    /// Sum of the waypoint segment lengths.
    pub total_length: f64,
    /// Index of the waypoint currently being approached.
    pub next: usize,
}

impl Path {
    fn from_cells(map: &ObstacleMap, cells: Vec<Cell>, cost: PathCost, start: Point, goal: Point) -> Self {
        let mut waypoints: Vec<Point> = cells.iter().map(|&c| map.center(c)).collect();
        waypoints[0] = start;
        if cells.len() > 1 || start != goal {
            if cells.len() == 1 {
                waypoints.push(goal);
            } else {
                *waypoints.last_mut().expect("non-empty") = goal;
            }
        }
        let mut path = Self {
            waypoints,
            cells,
            cost,
            total_length: 0.0,
            next: 0,
        };
        path.recompute_length();
        path.next = usize::from(path.waypoints.len() > 1);
        path
    }

    fn recompute_length(&mut self) {
        self.total_length = self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum();
    }

    pub fn goal(&self) -> Point {
        *self.waypoints.last().expect("paths are non-empty")
    }

    /// Drops intermediate waypoints that are visible from an earlier one
    /// without crossing a blocked cell.
    pub fn smooth(&mut self, map: &ObstacleMap, blocked: impl Fn(Cell) -> bool) {
        if self.waypoints.len() <= 2 {
            return;
        }
        const LOOKAHEAD: usize = 48;
        let mut out = vec![self.waypoints[0]];
        let mut i = 0;
        let n = self.waypoints.len();
        while i < n - 1 {
            let mut j = i + 1;
            let limit = (i + LOOKAHEAD).min(n - 1);
            for k in (i + 2..=limit).rev() {
                if segment_clear(
                    map.rows(),
                    map.cols(),
                    map.resolution(),
                    self.waypoints[i],
                    self.waypoints[k],
                    &blocked,
                ) {
                    j = k;
                    break;
                }
            }
            out.push(self.waypoints[j]);
            i = j;
        }
        self.waypoints = out;
        self.recompute_length();
        self.next = 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanFailure {
    /// No route exists even without inflation, or the goal has no free cell
    /// within reach.
    Blocked,
    /// The start or goal lies outside the map.
    OutOfMap,
}

fn occupied(map: &ObstacleMap, c: Cell) -> bool {
    map.get(c) == CellState::Occupied
}

/// True for occupied cells and cells touching one (8-neighbourhood).
pub fn inflated(map: &ObstacleMap, c: Cell) -> bool {
    occupied(map, c) || c.neighbors8(map.rows(), map.cols()).any(|n| occupied(map, n))
}

/// The cell nearest to `goal` that is not occupied, within
/// [`GOAL_SNAP_RADIUS`].
pub fn snap_goal(map: &ObstacleMap, goal: Point) -> Option<Cell> {
    let gc = map.cell_of(goal)?;
    if !occupied(map, gc) {
        return Some(gc);
    }
    let reach = (GOAL_SNAP_RADIUS / map.resolution()).ceil() as isize;
    let mut best: Option<(f64, Cell)> = None;
    for dr in -reach..=reach {
        for dc in -reach..=reach {
            let Some(c) = gc.offset(dr, dc, map.rows(), map.cols()) else {
                continue;
            };
            if occupied(map, c) {
                continue;
            }
            let d = map.center(c).distance(goal);
            if d <= GOAL_SNAP_RADIUS && best.is_none_or(|(bd, bc)| (d, c) < (bd, bc)) {
                best = Some((d, c));
            }
        }
    }
    best.map(|(_, c)| c)
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: PathCost,
    cell: Cell,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.g.cmp(&self.g))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dr = a.row.abs_diff(b.row) as f64;
    let dc = a.col.abs_diff(b.col) as f64;
    dr.max(dc) - dr.min(dc) + SQRT_2 * dr.min(dc)
}

/// A* over the 8-connected grid (no corner cutting) restricted to cells for
/// which `passable` holds. Returns the cell sequence and its exact cost.
pub fn astar(
    rows: usize,
    cols: usize,
    start: Cell,
    goal: Cell,
    passable: impl Fn(Cell) -> bool,
) -> Option<(Vec<Cell>, PathCost)> {
    let idx = |c: Cell| c.row * cols + c.col;
    let mut best: Vec<Option<PathCost>> = vec![None; rows * cols];
    let mut parent: Vec<Option<Cell>> = vec![None; rows * cols];
    let mut closed = vec![false; rows * cols];
    let mut heap = BinaryHeap::new();
    best[idx(start)] = Some(PathCost::default());
    heap.push(Open {
        f: octile(start, goal),
        g: PathCost::default(),
        cell: start,
    });
    while let Some(Open { g, cell, .. }) = heap.pop() {
        if closed[idx(cell)] {
            continue;
        }
        closed[idx(cell)] = true;
        if cell == goal {
            let mut cells = vec![goal];
            let mut cur = goal;
            while let Some(p) = parent[idx(cur)] {
                cells.push(p);
                cur = p;
            }
            cells.reverse();
            return Some((cells, g));
        }
        for (next, diagonal) in crate::gridworld::grid_moves(cell, rows, cols, &passable) {
            if closed[idx(next)] {
                continue;
            }
            let ng = g.add_move(diagonal);
            if best[idx(next)].is_none_or(|old| ng < old) {
                best[idx(next)] = Some(ng);
                parent[idx(next)] = Some(cell);
                heap.push(Open {
                    f: ng.units() + octile(next, goal),
                    g: ng,
                    cell: next,
                });
            }
        }
    }
    None
}

/// Longest detour, relative to the bare-grid optimum, accepted in exchange
/// for keeping clearance from obstacles.
pub const CLEARANCE_DETOUR_LIMIT: f64 = 1.05;

/// Plans from `start` to `goal` treating unknown cells as traversable and
/// keeping one cell of clearance from known obstacles. The start and goal
/// cells themselves are exempt from the clearance rule. When no inflated
/// route exists, or it is more than [`CLEARANCE_DETOUR_LIMIT`] times longer
/// than the best bare-grid route, the bare-grid route is used.
pub fn plan_path(map: &ObstacleMap, start: Point, goal: Point) -> Result<Path, PlanFailure> {
    let sc = map.cell_of(start).ok_or(PlanFailure::OutOfMap)?;
    map.cell_of(goal).ok_or(PlanFailure::OutOfMap)?;
    let gc = snap_goal(map, goal).ok_or(PlanFailure::Blocked)?;
    let target = if map.cell_of(goal) == Some(gc) {
        goal
    } else {
        map.center(gc)
    };
    let (rows, cols) = (map.rows(), map.cols());
    let strict = |c: Cell| c == sc || c == gc || !inflated(map, c);
    let loose = |c: Cell| c == sc || !occupied(map, c);
    let bare = astar(rows, cols, sc, gc, loose).ok_or(PlanFailure::Blocked)?;
    let (cells, cost) = match astar(rows, cols, sc, gc, strict) {
        Some(safe) if safe.1.units() <= bare.1.units() * CLEARANCE_DETOUR_LIMIT => safe,
        _ => bare,
    };
    Ok(Path::from_cells(map, cells, cost, start, target))
}
