use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::gridworld::{GoalKind, GoalSpec};
use crate::perception::tokenize;

/// What the planner is asked to do: a goal kind plus its payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub kind: GoalKind,
    pub payload: String,
}

const VERBS: [&str; 6] = ["find", "locate", "go to", "navigate to", "search for", "look for"];
const IMAGE_PREFIX: &str = "the object shown in image ";
const QUESTION_WORDS: [&str; 9] = ["what", "which", "where", "how", "is", "are", "does", "do", "can"];

impl Task {
    pub fn new(kind: GoalKind, payload: impl Into<String>) -> Self {
        Self {
            kind,
            payload: payload.into(),
        }
    }

    pub fn from_goal(goal: &GoalSpec) -> Self {
        Self::new(goal.kind, goal.payload.clone())
    }

    /// The natural-language instruction shown to the planner.
    pub fn instruction(&self) -> String {
        match self.kind {
            GoalKind::Category => format!("Find the {}", self.payload),
            GoalKind::Description => format!("Find {}", self.payload),
            GoalKind::Image => format!("Find {IMAGE_PREFIX}{}", self.payload),
            GoalKind::Question => {
                let q = self.payload.trim_end_matches('?');
                let mut chars = q.chars();
                match chars.next() {
                    Some(c) => format!("{}{}?", c.to_uppercase(), chars.as_str()),
                    None => String::new(),
                }
            }
        }
    }

    /// Reads an instruction back into a task. Inverse of [`Task::instruction`]
    /// and tolerant of common phrasings ("go to the bed", "Where is the sink?").
    pub fn parse(instruction: &str) -> Result<Task, PlanError> {
        let text = instruction.trim();
        let lower = text.to_lowercase();
        let words = tokenize(&lower);
        if words.is_empty() {
            return Err(PlanError::Unrecognized(instruction.to_string()));
        }
        if lower.ends_with('?') || QUESTION_WORDS.contains(&words[0].as_str()) {
            let q = lower.trim_end_matches('?').trim().to_string();
            return Ok(Task::new(GoalKind::Question, q));
        }
        let rest = VERBS
            .iter()
            .find_map(|v| lower.strip_prefix(v).filter(|r| r.starts_with(' ')))
            .map(str::trim)
            .ok_or_else(|| PlanError::Unrecognized(instruction.to_string()))?;
        if let Some(img) = rest.strip_prefix(IMAGE_PREFIX) {
            // Image references are case-sensitive; take them from the original text.
            let start = text.len() - img.len();
            return Ok(Task::new(GoalKind::Image, text[start..].trim()));
        }
        let rest = rest.trim_end_matches('.');
        let phrase: Vec<String> = tokenize(rest);
        let body: &[String] = match phrase.first().map(String::as_str) {
            Some("the" | "a" | "an") => &phrase[1..],
            _ => &phrase,
        };
        if body.is_empty() {
            return Err(PlanError::Unrecognized(instruction.to_string()));
        }
        let descriptive = body.iter().any(|w| w == "in") || body.len() > 1 && COLORS.contains(&body[0].as_str());
        if descriptive {
            Ok(Task::new(GoalKind::Description, rest))
        } else {
            Ok(Task::new(GoalKind::Category, body.join(" ")))
        }
    }
}

/// Color words recognized at the start of a description.
pub(crate) const COLORS: [&str; 16] = [
    "white", "black", "brown", "gray", "grey", "blue", "green", "red", "beige", "yellow", "orange", "purple", "silver",
    "pink", "wooden", "golden",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instructions_round_trip() {
        for t in [
            Task::new(GoalKind::Category, "gas boiler"),
            Task::new(GoalKind::Description, "the white armchair in the living room"),
            Task::new(GoalKind::Image, "img_Sofa"),
            Task::new(GoalKind::Question, "what color is the bed"),
        ] {
            assert_eq!(Task::parse(&t.instruction()).unwrap(), t, "{}", t.instruction());
        }
    }

    #[test]
    fn common_phrasings() {
        assert_eq!(
            Task::parse("go to the bed").unwrap(),
            Task::new(GoalKind::Category, "bed")
        );
        assert_eq!(
            Task::parse("Find the gas boiler").unwrap(),
            Task::new(GoalKind::Category, "gas boiler")
        );
        assert_eq!(Task::parse("Where is the sink?").unwrap().kind, GoalKind::Question);
        assert!(matches!(Task::parse("dance"), Err(PlanError::Unrecognized(_))));
    }
}
