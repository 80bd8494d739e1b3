use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::gridworld::{default_budget, AgentPose, Episode, GoalSpec, TaskKind};
use crate::interpreter::{parse_program, Registry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InContextExample {
    pub instruction: String,
    pub program: String,
}

/// An example together with the scene, start pose and goal it was written
/// for, so that it can be executed as a test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundledExample {
    pub instruction: String,
    pub program: String,
    pub scene: String,
    pub start_pose: AgentPose,
    pub goal: GoalSpec,
}

impl BundledExample {
    pub fn example(&self) -> InContextExample {
        InContextExample {
            instruction: self.instruction.clone(),
            program: self.program.clone(),
        }
    }

    /// A single-goal episode on the example's fixture scene.
    pub fn episode(&self) -> Episode {
        let task_kind = if self.goal.kind == crate::gridworld::GoalKind::Question {
            TaskKind::Eqa
        } else {
            TaskKind::Ovon
        };
        Episode {
            scene_ref: self.scene.clone(),
            start_pose: self.start_pose,
            goals: vec![self.goal.clone()],
            task_kind,
            step_budget_per_goal: default_budget(task_kind),
            success_radius: 1.0,
        }
    }
}

const BUNDLED_EXAMPLES: &str = include_str!("../../data/in_context_examples.json");

pub fn bundled_examples() -> Vec<BundledExample> {
    serde_json::from_str(BUNDLED_EXAMPLES).expect("bundled examples are valid JSON")
}

/// The bundled examples without their fixtures.
pub fn default_examples() -> Vec<InContextExample> {
    bundled_examples().iter().map(BundledExample::example).collect()
}

pub fn load_examples(path: impl AsRef<Path>) -> Result<Vec<InContextExample>, PlanError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PlanError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| PlanError::Config(format!("{}: {e}", path.display())))
}

const PREAMBLE: &str = "\
You control a mobile robot inside a house by writing short programs.
Each line calls one module and may bind its result to a variable:
    name = module(arg=value, ...)
Values are quoted text, numbers, true or false, or variables bound on an earlier line.
`obs` is the robot's current view and `goal` is the current goal, as text or as an image.
Comment the steps of your program with lines starting with #.
Output only the program.

Modules:
";

/// Assembles the planner prompt: preamble with the module inventory, every
/// example in order, then the task. Byte-stable for fixed inputs.
pub fn build_prompt(task: &str, examples: &[InContextExample]) -> Result<String, PlanError> {
    build_prompt_with(&Registry::standard(), task, examples)
}

pub fn build_prompt_with(registry: &Registry, task: &str, examples: &[InContextExample]) -> Result<String, PlanError> {
    if examples.is_empty() {
        return Err(PlanError::NoExamples);
    }
    let mut out = String::from(PREAMBLE);
    for m in registry.modules() {
        out.push_str(&format!("    {}: {}\n", m.usage(), m.description));
    }
    for (i, ex) in examples.iter().enumerate() {
        let program = parse_program(&ex.program).map_err(|e| PlanError::BadExample {
            index: i,
            message: e.to_string(),
        })?;
        registry.check(&program).map_err(|errs| PlanError::BadExample {
            index: i,
            message: errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        })?;
        out.push_str(&format!(
            "\nInstruction: {}\nProgram:\n{}",
            ex.instruction.trim(),
            ex.program.trim_end()
        ));
        out.push('\n');
    }
    out.push_str(&format!("\nInstruction: {}\nProgram:\n", task.trim()));
    Ok(out)
}

/// The first program block in a model response: a fenced block if there is
/// one, otherwise the first run of consecutive lines that parse as
/// statements or comments and contain at least one statement.
pub fn extract_program(raw: &str) -> Option<String> {
    if let Some(start) = raw.find("```") {
        let after = &raw[start + 3..];
        // Skip an optional language tag on the fence line.
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        let end = body.find("```").unwrap_or(body.len());
        let block = body[..end].trim_matches('\n');
        return (!block.trim().is_empty()).then(|| format!("{block}\n"));
    }
    use crate::interpreter::{parse_line, Line};
    let lines: Vec<&str> = raw.lines().collect();
    let mut i = 0;
    while i < lines.len() {
        let mut j = i;
        let mut statements = 0;
        while j < lines.len() {
            match parse_line(lines[j], j + 1) {
                Ok(Line::Statement(..)) => statements += 1,
                Ok(Line::Comment(_)) => {}
                _ => break,
            }
            j += 1;
        }
        if statements > 0 {
            return Some(lines[i..j].join("\n") + "\n");
        }
        i = j.max(i + 1);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_examples_in_order() {
        let ex = default_examples();
        assert_eq!(ex.len(), 15);
        let p = build_prompt("Find the chair", &ex).unwrap();
        let mut at = 0;
        for e in &ex {
            let needle = format!("Instruction: {}\nProgram:\n{}", e.instruction, e.program.trim_end());
            let found = p[at..].find(&needle).expect("example present in order");
            at += found + needle.len();
        }
        assert!(p.ends_with("Instruction: Find the chair\nProgram:\n"));
        assert_eq!(p, build_prompt("Find the chair", &ex).unwrap());
    }

    #[test]
    fn empty_or_broken_examples_are_rejected() {
        assert!(matches!(build_prompt("x", &[]), Err(PlanError::NoExamples)));
        let bad = InContextExample {
            instruction: "x".into(),
            program: "a = (bad".into(),
        };
        assert!(matches!(
            build_prompt("x", &[bad]),
            Err(PlanError::BadExample { index: 0, .. })
        ));
    }

    #[test]
    fn extraction() {
        let fenced = "Sure.\n```python\n# go\nseen = explore_scene(target='bed')\n```\nDone.";
        assert_eq!(
            extract_program(fenced).unwrap(),
            "# go\nseen = explore_scene(target='bed')\n"
        );
        let bare = "Here you go:\n\nseen = explore_scene(target='bed')\nnav = navigate_to(target=seen)\n\nThanks";
        assert_eq!(
            extract_program(bare).unwrap(),
            "seen = explore_scene(target='bed')\nnav = navigate_to(target=seen)\n"
        );
        assert_eq!(extract_program("no program here"), None);
    }
}
