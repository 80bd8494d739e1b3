use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::agent::GoalLog;
use crate::gridworld::{GoalSpec, Scene};
use crate::interpreter::{Program, Terminal};
use crate::perception::{tokenize, SynonymTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    PlannerWrongTarget,
    PlannerBadProgram,
    StoppedAtWrongObject,
    IgnoredGoalObject,
    DidntSeeTarget,
    Timeout,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 6] = [
        FailureCategory::PlannerWrongTarget,
        FailureCategory::PlannerBadProgram,
        FailureCategory::StoppedAtWrongObject,
        FailureCategory::IgnoredGoalObject,
        FailureCategory::DidntSeeTarget,
        FailureCategory::Timeout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureCategory::PlannerWrongTarget => "planner_wrong_target",
            FailureCategory::PlannerBadProgram => "planner_bad_program",
            FailureCategory::StoppedAtWrongObject => "stopped_at_wrong_object",
            FailureCategory::IgnoredGoalObject => "ignored_goal_object",
            FailureCategory::DidntSeeTarget => "didnt_see_target",
            FailureCategory::Timeout => "timeout",
        }
    }

    /// The classification rule that assigns this category.
    pub fn rule(self) -> &'static str {
        match self {
            FailureCategory::PlannerWrongTarget => "the program searched for something other than the goal",
            FailureCategory::PlannerBadProgram => "the program failed to plan or hit a runtime error",
            FailureCategory::StoppedAtWrongObject => "found was declared next to a detected non-target object",
            FailureCategory::IgnoredGoalObject => "a target was in view but detection never returned it",
            FailureCategory::DidntSeeTarget => "no target ever entered the field of view",
            FailureCategory::Timeout => "the step budget ran out",
        }
    }
}

impl std::fmt::Display for FailureCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evidence about the goal attempt that failed.
#[derive(Debug, Clone, Copy)]
pub struct FailureEvidence<'a> {
    pub scene: &'a Scene,
    pub goal: &'a GoalSpec,
    /// The parsed program, when planning produced one.
    pub program: Option<&'a Program>,
    /// True when planning itself failed (no usable program).
    pub planning_failed: bool,
    pub terminal: Option<&'a Terminal>,
    pub log: &'a GoalLog,
    pub success_radius: f64,
}

/// Tokens naming what the goal is about: target categories and
/// subcategories plus their synonyms.
fn goal_tokens(scene: &Scene, goal: &GoalSpec, synonyms: &SynonymTable) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for id in &goal.target_ids {
        if let Some(o) = scene.object(*id) {
            for name in [&o.category, &o.subcategory] {
                for phrase in synonyms.phrases_of(name) {
                    out.extend(tokenize(&phrase));
                }
            }
        }
    }
    out
}

/// Tokens of everything the program searched for: literal query and
/// exploration targets, plus the queries the detector actually received.
fn searched_tokens(program: Option<&Program>, log: &GoalLog) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if let Some(p) = program {
        for s in &p.statements {
            let is_search = matches!(s.module_name.as_str(), "detect" | "explore_scene");
            for a in &s.args {
                if let crate::interpreter::ArgValue::Text(t) = &a.value {
                    if a.name == "query" || (is_search && a.name == "target") {
                        for part in t.split(',') {
                            out.extend(tokenize(part));
                        }
                    }
                }
            }
        }
    }
    for q in &log.queries {
        out.extend(tokenize(q));
    }
    out
}

/// Assigns exactly one category to a failed goal attempt. Rules are checked
/// in priority order; the first that applies wins.
pub fn classify_failure(ev: &FailureEvidence<'_>, synonyms: &SynonymTable) -> FailureCategory {
    let goal = goal_tokens(ev.scene, ev.goal, synonyms);
    let searched = searched_tokens(ev.program, ev.log);
    if !searched.is_empty() && !goal.is_empty() && searched.is_disjoint(&goal) {
        return FailureCategory::PlannerWrongTarget;
    }
    if ev.planning_failed || matches!(ev.terminal, Some(Terminal::RuntimeError { .. })) {
        return FailureCategory::PlannerBadProgram;
    }
    if let Some(found) = &ev.log.found {
        let near_wrong = ev
            .log
            .detected_objects
            .iter()
            .filter(|id| !ev.goal.target_ids.contains(id))
            .filter_map(|id| ev.scene.object(*id))
            .any(|o| o.position.distance(found.position) <= ev.success_radius);
        if near_wrong {
            return FailureCategory::StoppedAtWrongObject;
        }
    }
    if !ev.log.sighted_targets.is_empty() && ev.log.detected_targets.is_empty() {
        return FailureCategory::IgnoredGoalObject;
    }
    if ev.log.sighted_targets.is_empty() {
        return FailureCategory::DidntSeeTarget;
    }
    FailureCategory::Timeout
}
