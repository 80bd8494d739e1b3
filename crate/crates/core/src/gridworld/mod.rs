//! Scenes, episodes, the embodied agent's dynamics and its sensors.

mod generate;
mod geodesic;
pub mod raycast;
mod scene;
mod world;

pub use generate::{default_budget, default_vocabulary, generate_episodes, generate_scene, GenConfig, ObjectTemplate};
pub(crate) use geodesic::grid_moves;
pub use geodesic::{geodesic_distance, DistanceField, PathCost};
pub use scene::{
    load_bundle, load_scene, parse_bundle, AgentPose, CellKind, Episode, GoalKind, GoalSpec, Grid, Scene, SceneBundle,
    SceneObject, TaskKind,
};
pub use world::{visible_objects, Action, Observation, RelativeGoal, SensorConfig, Sighting, WorldState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("scene format error at line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scene: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("scene generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, GridError>;

/// Agent motion constants.
pub const STEP_SIZE: f64 = 0.25;
pub const TURN_DEG: f64 = 30.0;
pub const PITCH_STEP_DEG: f64 = 15.0;
pub const PITCH_LIMIT_DEG: f64 = 30.0;
/// Turns needed for a full revolution.
pub const TURNS_PER_REVOLUTION: u32 = 12;

/// Scene files shipped with the crate.
pub mod fixtures {
    use super::{parse_bundle, SceneBundle};

    pub const APARTMENT_SMALL: &str = include_str!("../../data/scenes/apartment_small.json");
    pub const MINIMAL: &str = include_str!("../../data/scenes/minimal.json");

    pub const NAMES: [&str; 2] = ["apartment_small", "minimal"];

    /// Parses a bundled scene by name.
    pub fn bundle(name: &str) -> Option<SceneBundle> {
        let text = match name {
            "apartment_small" => APARTMENT_SMALL,
            "minimal" => MINIMAL,
            _ => return None,
        };
        Some(parse_bundle(text, name).expect("bundled scenes are valid"))
    }
}
