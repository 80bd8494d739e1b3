//! Obstacle, value and feature maps, frontier extraction and the
//! memory-augmented exploration policy.

mod dump;
mod explorer;
mod frontier;
mod maps;

pub use dump::{dump_maps, read_pgm, write_pgm, MapSidecar};
pub use explorer::{Directive, Explorer, ExplorerConfig};
pub use frontier::{
    extract_frontiers, frontier_cells, select_frontier, travel_field, Frontier, DEFAULT_MIN_FRONTIER_SIZE,
};
pub use maps::{
    memory_recall, memory_recall_cell, recompute_value_map, update_memory, update_obstacle_map, view_cone,
    view_confidence, CellState, FeatureMap, ObstacleMap, ValueMap,
};
