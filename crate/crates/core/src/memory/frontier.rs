use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::maps::{CellState, ObstacleMap, ValueMap};
use crate::geometry::{Cell, Point};
use crate::gridworld::{DistanceField, PathCost};

pub const DEFAULT_MIN_FRONTIER_SIZE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub cells: Vec<Cell>,
    /// Member cell nearest the component centroid.
    pub midpoint_cell: Cell,
    pub midpoint: Point,
    pub score: f64,
}

/// Free cells with at least one 4-neighbour that is unknown.
pub fn frontier_cells(map: &ObstacleMap) -> BTreeSet<Cell> {
    map.cells()
        .filter(|&c| {
            map.get(c) == CellState::Free
                && c.neighbors4(map.rows(), map.cols())
                    .any(|n| map.get(n) == CellState::Unknown)
        })
        .collect()
}

/// Frontier cells grouped into 8-connected components of at least
/// `min_size` cells, in order of their smallest cell.
pub fn extract_frontiers(map: &ObstacleMap, min_size: usize) -> Vec<Frontier> {
    let mut remaining = frontier_cells(map);
    let mut out = Vec::new();
    while let Some(&seed) = remaining.iter().next() {
        remaining.remove(&seed);
        let mut component = vec![seed];
        let mut queue = VecDeque::from([seed]);
        while let Some(c) = queue.pop_front() {
            for n in c.neighbors8(map.rows(), map.cols()) {
                if remaining.remove(&n) {
                    component.push(n);
                    queue.push_back(n);
                }
            }
        }
        if component.len() < min_size {
            continue;
        }
        component.sort();
        let n = component.len() as f64;
        let (sr, sc) = component
            .iter()
            .fold((0.0, 0.0), |(r, c), cell| (r + cell.row as f64, c + cell.col as f64));
        let (cr, cc) = (sr / n, sc / n);
        let midpoint_cell = *component
            .iter()
            .min_by(|a, b| {
                let da = (a.row as f64 - cr).powi(2) + (a.col as f64 - cc).powi(2);
                let db = (b.row as f64 - cr).powi(2) + (b.col as f64 - cc).powi(2);
                da.total_cmp(&db).then(a.cmp(b))
            })
            .expect("component is non-empty");
        out.push(Frontier {
            midpoint: map.center(midpoint_cell),
            midpoint_cell,
            cells: component,
            score: 0.0,
        });
    }
    out
}

/// Distances from `from` over cells that are not known to be occupied.
pub fn travel_field(map: &ObstacleMap, from: Cell) -> DistanceField {
    DistanceField::compute(map.rows(), map.cols(), map.resolution(), from, |c| {
        c == from || map.get(c) != CellState::Occupied
    })
}

/// Scores every frontier by the value at its midpoint and returns the index
/// of the best one. Ties go to the nearer frontier (by travel distance over
/// non-occupied cells), then to the lexicographically smaller midpoint.
pub fn select_frontier(frontiers: &mut [Frontier], vmap: &ValueMap, distances: &DistanceField) -> Option<usize> {
    for f in frontiers.iter_mut() {
        f.score = vmap.value(f.midpoint_cell);
    }
    let key = |f: &Frontier| distances.cost(f.midpoint_cell);
    (0..frontiers.len()).min_by(|&a, &b| {
        let (fa, fb) = (&frontiers[a], &frontiers[b]);
        fb.score
            .total_cmp(&fa.score)
            .then_with(|| cmp_cost(key(fa), key(fb)))
            .then_with(|| fa.midpoint_cell.cmp(&fb.midpoint_cell))
    })
}

fn cmp_cost(a: Option<PathCost>, b: Option<PathCost>) -> std::cmp::Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a.cmp(&b),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(rows: &[&str]) -> ObstacleMap {
        ObstacleMap::from_rows(rows, 0.25).unwrap()
    }

    #[test]
    fn fully_known_map_has_no_frontiers() {
        assert!(extract_frontiers(&map(&["...", ".#.", "..."]), 3).is_empty());
    }

    #[test]
    fn lone_free_cell_is_filtered() {
        let m = map(&["???", "?.?", "???"]);
        assert_eq!(frontier_cells(&m).len(), 1);
        assert!(extract_frontiers(&m, 3).is_empty());
        assert_eq!(extract_frontiers(&m, 1).len(), 1);
    }

    #[test]
    fn midpoint_is_a_member_near_the_centroid() {
        let m = map(&["?????", ".....", "#####"]);
        let f = extract_frontiers(&m, 3);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].cells.len(), 5);
        assert_eq!(f[0].midpoint_cell, Cell::new(1, 2));
    }

    #[test]
    fn selection_prefers_value_then_distance() {
        let m = map(&["?..........?", "?..........?", "?..........?"]);
        let mut fs = extract_frontiers(&m, 3);
        assert_eq!(fs.len(), 2);
        let field = travel_field(&m, Cell::new(1, 3));
        let mut v = ValueMap::new(3, 12);
        // equal values: the left frontier is nearer
        let best = select_frontier(&mut fs, &v, &field).unwrap();
        assert_eq!(fs[best].midpoint_cell.col, 1);
        v.set(fs[1].midpoint_cell, 0.8, 1.0);
        v.set(fs[0].midpoint_cell, 0.3, 1.0);
        let best = select_frontier(&mut fs, &v, &field).unwrap();
        assert_eq!(best, 1);
        assert!(select_frontier(&mut [], &v, &field).is_none());
    }
}
