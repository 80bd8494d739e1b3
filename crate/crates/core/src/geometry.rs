//! Planar points, grid cells and angle helpers.
//!
//! World coordinates are meters with `x` growing along grid columns and `y`
//! growing along grid rows. Headings are degrees measured from `+x` towards
//! `+y`, so a positive angular offset is a clockwise (rightward) turn when the
//! grid is drawn with row 0 at the top.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Direction from `self` to `other` in degrees, in `(-180, 180]`.
    pub fn bearing_to(self, other: Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }

    pub fn offset(self, heading_deg: f64, distance: f64) -> Point {
        let (s, c) = heading_deg.to_radians().sin_cos();
        Point::new(self.x + c * distance, self.y + s * distance)
    }
}

/// A grid cell index. Ordering is lexicographic on `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Center of the cell in meters.
    pub fn center(self, resolution: f64) -> Point {
        Point::new(
            (self.col as f64 + 0.5) * resolution,
            (self.row as f64 + 0.5) * resolution,
        )
    }

    pub fn offset(self, d_row: isize, d_col: isize, rows: usize, cols: usize) -> Option<Cell> {
        let r = self.row as isize + d_row;
        let c = self.col as isize + d_col;
        (r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols).then(|| Cell::new(r as usize, c as usize))
    }

    /// 4-connected neighbours inside a `rows x cols` grid.
    pub fn neighbors4(self, rows: usize, cols: usize) -> impl Iterator<Item = Cell> {
        [(-1, 0), (1, 0), (0, -1), (0, 1)]
            .into_iter()
            .filter_map(move |(dr, dc)| self.offset(dr, dc, rows, cols))
    }

    /// 8-connected neighbours inside a `rows x cols` grid.
    pub fn neighbors8(self, rows: usize, cols: usize) -> impl Iterator<Item = Cell> {
        NEIGHBORS_8
            .into_iter()
            .filter_map(move |(dr, dc)| self.offset(dr, dc, rows, cols))
    }
}

pub(crate) const NEIGHBORS_8: [(isize, isize); 8] =
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

/// Cell containing `p`, or `None` when `p` lies outside a `rows x cols` grid.
pub fn cell_of(p: Point, resolution: f64, rows: usize, cols: usize) -> Option<Cell> {
    if !(p.x.is_finite() && p.y.is_finite()) || p.x < 0.0 || p.y < 0.0 {
        return None;
    }
    let col = (p.x / resolution).floor() as usize;
    let row = (p.y / resolution).floor() as usize;
    (row < rows && col < cols).then_some(Cell::new(row, col))
}

/// Normalizes an angle into `[0, 360)`.
pub fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `(-180, 180]`.
pub fn wrap_180(a: f64) -> f64 {
    let r = normalize_deg(a);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_wrapping() {
        assert_eq!(normalize_deg(-30.0), 330.0);
        assert_eq!(normalize_deg(360.0), 0.0);
        assert_eq!(wrap_180(190.0), -170.0);
        assert_eq!(wrap_180(-180.0), 180.0);
        assert_eq!(wrap_180(180.0), 180.0);
    }

    #[test]
    fn cell_lookup_uses_floor() {
        assert_eq!(cell_of(Point::new(1.0, 1.0), 0.25, 8, 8), Some(Cell::new(4, 4)));
        assert_eq!(cell_of(Point::new(2.0, 0.1), 0.25, 8, 8), None);
        assert_eq!(cell_of(Point::new(-0.01, 0.1), 0.25, 8, 8), None);
    }

    #[test]
    fn offset_follows_heading_convention() {
        let p = Point::new(1.0, 1.0).offset(90.0, 0.25);
        assert!((p.x - 1.0).abs() < 1e-12 && (p.y - 1.25).abs() < 1e-12);
    }
}
