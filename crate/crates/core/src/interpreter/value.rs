use serde::{Deserialize, Serialize};

use crate::agent::ExploreOutcome;
use crate::geometry::Point;
use crate::gridworld::AgentPose;
use crate::perception::{Detection, Embedding};
use crate::pointnav::NavOutcome;

/// Everything a program variable can hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Value {
    Text(String),
    Number(f64),
    Bool(bool),
    Point(Point),
    /// Detections together with the pose they were made from, so that
    /// they can be turned into map points later.
    Detections {
        origin: AgentPose,
        items: Vec<Detection>,
    },
    Embedding(Embedding),
    /// An instance image reference.
    Image(String),
    /// The agent's current view (`obs`).
    View,
    Nav(NavOutcome),
    Explore(ExploreOutcome),
    None,
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Text(_) => "text",
            Value::Number(_) => "number",
            Value::Bool(_) => "bool",
            Value::Point(_) => "point",
            Value::Detections { .. } => "detections",
            Value::Embedding(_) => "embedding",
            Value::Image(_) => "image",
            Value::View => "view",
            Value::Nav(_) => "nav outcome",
            Value::Explore(_) => "explore outcome",
            Value::None => "none",
        }
    }

    /// Short human-readable rendering for traces.
    pub fn summary(&self) -> String {
        match self {
            Value::Text(t) => format!("{t:?}"),
            Value::Number(n) => format!("{n}"),
            Value::Bool(b) => format!("{b}"),
            Value::Point(p) => format!("({:.2}, {:.2})", p.x, p.y),
            Value::Detections { items, .. } => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|d| format!("#{} {} @{:.2}m", d.object_id, d.label, d.range))
                    .collect();
                format!("{} detection(s) [{}]", items.len(), parts.join(", "))
            }
            Value::Embedding(e) => format!("embedding[{}]", e.dim()),
            Value::Image(r) => format!("image {r}"),
            Value::View => "current view".into(),
            Value::Nav(n) => format!(
                "{:?} after {} steps, {:.2}m from waypoint",
                n.status, n.steps_used, n.final_distance
            ),
            Value::Explore(e) => match e.point {
                Some(p) => format!(
                    "{:?} at ({:.2}, {:.2}) after {} steps",
                    e.status, p.x, p.y, e.steps_used
                ),
                None => format!("{:?} after {} steps", e.status, e.steps_used),
            },
            Value::None => "none".into(),
        }
    }
}
