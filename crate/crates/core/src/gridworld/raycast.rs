//! Exact grid traversal along a ray (Amanatides & Woo), shared by the depth
//! sensor, line-of-sight checks and the obstacle-map update.

use crate::geometry::{Cell, Point};

/// One cell visited by a [`RayWalk`]. `cell` is `None` once the ray leaves the
/// grid; that item is always the last one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayStep {
    pub cell: Option<Cell>,
    /// Distance from the origin at which the ray enters the cell.
    pub t_enter: f64,
}

/// Iterator over the cells pierced by a ray, in order, up to `max_t` meters.
#[derive(Debug, Clone)]
pub struct RayWalk {
    rows: isize,
    cols: isize,
    row: isize,
    col: isize,
    step_row: isize,
    step_col: isize,
    t_max_row: f64,
    t_max_col: f64,
    t_delta_row: f64,
    t_delta_col: f64,
    t: f64,
    max_t: f64,
    done: bool,
}

fn axis_setup(origin: f64, dir: f64, index: isize, res: f64) -> (isize, f64, f64) {
    if dir > 0.0 {
        (1, ((index + 1) as f64 * res - origin) / dir, res / dir)
    } else if dir < 0.0 {
        (-1, (index as f64 * res - origin) / dir, -res / dir)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}

impl RayWalk {
    pub fn new(rows: usize, cols: usize, resolution: f64, origin: Point, heading_deg: f64, max_t: f64) -> Self {
        let (dy, dx) = heading_deg.to_radians().sin_cos();
        let col = (origin.x / resolution).floor() as isize;
        let row = (origin.y / resolution).floor() as isize;
        let (step_col, t_max_col, t_delta_col) = axis_setup(origin.x, dx, col, resolution);
        let (step_row, t_max_row, t_delta_row) = axis_setup(origin.y, dy, row, resolution);
        Self {
            rows: rows as isize,
            cols: cols as isize,
            row,
            col,
            step_row,
            step_col,
            t_max_row,
            t_max_col,
            t_delta_row,
            t_delta_col,
            t: 0.0,
            max_t,
            done: false,
        }
    }

    /// Walks the segment from `a` to `b`.
    pub fn segment(rows: usize, cols: usize, resolution: f64, a: Point, b: Point) -> Self {
        Self::new(rows, cols, resolution, a, a.bearing_to(b), a.distance(b))
    }
}

impl Iterator for RayWalk {
    type Item = RayStep;

    fn next(&mut self) -> Option<RayStep> {
        if self.done || self.t >= self.max_t && self.t > 0.0 {
            return None;
        }
        let inside = self.row >= 0 && self.col >= 0 && self.row < self.rows && self.col < self.cols;
        if !inside {
            self.done = true;
            return Some(RayStep {
                cell: None,
                t_enter: self.t,
            });
        }
        let item = RayStep {
            cell: Some(Cell::new(self.row as usize, self.col as usize)),
            t_enter: self.t,
        };
        if self.t_max_col < self.t_max_row {
            self.col += self.step_col;
            self.t = self.t_max_col;
            self.t_max_col += self.t_delta_col;
        } else {
            self.row += self.step_row;
            self.t = self.t_max_row;
            self.t_max_row += self.t_delta_row;
        }
        if self.step_row == 0 && self.step_col == 0 {
            // zero-length direction cannot occur with sin/cos, but never spin
            self.done = true;
        }
        Some(item)
    }
}

/// Distance to the first blocked cell along the ray, capped at `max_range`.
/// Leaving the grid counts as a hit.
pub fn cast(
    rows: usize,
    cols: usize,
    resolution: f64,
    origin: Point,
    heading_deg: f64,
    max_range: f64,
    blocked: impl Fn(Cell) -> bool,
) -> f64 {
    for step in RayWalk::new(rows, cols, resolution, origin, heading_deg, max_range) {
        match step.cell {
            None => return step.t_enter.min(max_range),
            Some(cell) if blocked(cell) => return step.t_enter.min(max_range),
            Some(_) => {}
        }
    }
    max_range
}

/// True when no blocked cell is crossed on the way from `a` to `b`.
pub fn segment_clear(
    rows: usize,
    cols: usize,
    resolution: f64,
    a: Point,
    b: Point,
    blocked: impl Fn(Cell) -> bool,
) -> bool {
    if a.distance(b) == 0.0 {
        return crate::geometry::cell_of(a, resolution, rows, cols).is_some_and(|c| !blocked(c));
    }
    RayWalk::segment(rows, cols, resolution, a, b).all(|step| match step.cell {
        None => false,
        Some(cell) => !blocked(cell),
    })
}
