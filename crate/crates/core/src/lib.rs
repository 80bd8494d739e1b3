//! Compositional embodied navigation on a deterministic 2-D grid world.
//!
//! The crate is organised the way an episode flows:
//!
//! * [`gridworld`] holds scenes, episodes, the agent's discrete dynamics and its
//!   sensors, plus a seeded scene generator.
//! * [`perception`] provides oracle detection, classification, question
//!   answering, instance matching and hashed-token embeddings.
//! * [`memory`] builds the obstacle, value and feature maps, extracts frontiers
//!   and decides where to explore next, including recall of previously seen
//!   targets.
//! * [`pointnav`] plans and follows obstacle-aware paths to waypoints.
//! * [`interpreter`] parses and executes primitive programs against an
//!   [`agent::Agent`], producing a per-statement [`interpreter::Trace`].
//! * [`planner`] turns a task into a program, either with the deterministic
//!   rule-based stub or a remote chat-completions endpoint.
//! * [`harness`] runs episodes under each task protocol and computes the
//!   evaluation metrics and failure categories.

pub mod agent;
pub mod geometry;
pub mod gridworld;
pub mod harness;
pub mod interpreter;
pub mod memory;
pub mod perception;
pub mod planner;
pub mod pointnav;
pub mod rng;

pub use geometry::Point;
