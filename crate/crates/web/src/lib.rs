//! Browser bindings. Every export returns JSON text; the page in `www/`
//! parses it and draws the map, the agent's path and the trace.

use std::sync::Arc;

use compnav_core::agent::{Agent, AgentConfig};
use compnav_core::gridworld::{
    fixtures, generate_episodes, generate_scene, CellKind, Episode, GenConfig, Scene, TaskKind,
};
use compnav_core::harness::{Harness, HarnessConfig};
use compnav_core::interpreter::{execute, parse_program, pretty_print, Registry, Terminal, Trace};
use compnav_core::planner::{FaultMode, Planner};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// A scene and its episodes, held between calls from the page.
#[wasm_bindgen]
pub struct Demo {
    scene: Arc<Scene>,
    episodes: Vec<Episode>,
}

impl Demo {
    /// `source` is a bundled fixture name or `generated:<task>`.
    pub fn load(source: &str, seed: u64) -> Result<Demo, String> {
        if let Some(b) = fixtures::bundle(source) {
            return Ok(Demo {
                scene: Arc::new(b.scene),
                episodes: b.episodes,
            });
        }
        let task: TaskKind = source
            .strip_prefix("generated:")
            .ok_or_else(|| format!("unknown scene {source:?}"))?
            .parse()?;
        let base = if task == TaskKind::Multion {
            GenConfig::multion()
        } else {
            GenConfig::default()
        };
        let scene = generate_scene(&base, seed).map_err(|e| e.to_string())?;
        let episodes = generate_episodes(&scene, task, 4, seed).map_err(|e| e.to_string())?;
        Ok(Demo {
            scene: Arc::new(scene),
            episodes,
        })
    }

    pub fn scene_value(&self) -> Value {
        let grid: Vec<String> = (0..self.scene.grid.rows())
            .map(|r| {
                (0..self.scene.grid.cols())
                    .map(|c| match self.scene.grid.get(compnav_core::geometry::Cell::new(r, c)) {
                        CellKind::Free => '.',
                        _ => '#',
                    })
                    .collect()
            })
            .collect();
        let objects: Vec<Value> = self
            .scene
            .objects
            .iter()
            .map(|o| json!({"id": o.id, "label": o.appearance_text(), "category": o.category, "x": o.position.x, "y": o.position.y}))
            .collect();
        let episodes: Vec<Value> = self
            .episodes
            .iter()
            .map(|e| {
                json!({
                    "task": e.task_kind.as_str(),
                    "start": [e.start_pose.x, e.start_pose.y],
                    "goals": e.goals.iter().map(|g| g.payload.clone()).collect::<Vec<_>>(),
                    "targets": e.goals.iter().map(|g| g.target_ids.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "name": self.scene.name,
            "resolution": self.scene.resolution,
            "grid": grid,
            "objects": objects,
            "episodes": episodes,
        })
    }

    fn episode(&self, index: usize) -> Result<&Episode, String> {
        self.episodes
            .get(index)
            .ok_or_else(|| format!("episode {index} does not exist; the scene has {}", self.episodes.len()))
    }

    /// Runs an episode with the rule-based planner.
    pub fn run_value(&self, index: usize, memory_threshold: f64) -> Result<Value, String> {
        if !(0.0..=1.0).contains(&memory_threshold) {
            return Err(format!(
                "memory threshold must be within [0, 1], got {memory_threshold}"
            ));
        }
        let episode = self.episode(index)?;
        let mut config = HarnessConfig::default();
        config.agent.explorer.memory_threshold = memory_threshold;
        let harness = Harness::new(config, Planner::stub(FaultMode::none()));
        let rec = harness.run_episode(&self.scene, episode, index);
        let r = &rec.result;
        let goals: Vec<Value> = rec
            .goals
            .iter()
            .map(|g| {
                let reached = r.per_goal.iter().any(|p| p.goal_index == g.goal_index && p.reached);
                json!({
                    "goal": g.goal_index,
                    "reached": reached,
                    "program": g.program_text,
                    "error": g.planning_error,
                    "trace": g.trace.as_ref().map(trace_lines).unwrap_or_default(),
                })
            })
            .collect();
        Ok(json!({
            "success": r.success,
            "steps": r.steps,
            "path_length": r.agent_path_length,
            "optimal_length": r.optimal_length,
            "answer": r.answer,
            "failure": r.failure_category.map(|c| c.as_str()),
            "error": r.harness_error,
            "goals": goals,
            "path": rec.trajectory.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
        }))
    }

    /// Runs a hand-written program against the first goal of an episode.
    pub fn program_value(&self, index: usize, text: &str) -> Result<Value, String> {
        let episode = self.episode(index)?;
        let program = parse_program(text).map_err(|e| e.to_string())?;
        let registry = Registry::standard();
        registry
            .check(&program)
            .map_err(|errs| errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))?;
        let mut agent =
            Agent::new(self.scene.clone(), episode.clone(), AgentConfig::default()).map_err(|e| e.to_string())?;
        agent.set_step_limit(u64::from(episode.step_budget_per_goal));
        agent.ensure_spin().map_err(|e| e.to_string())?;
        let trace = execute(&program, &mut agent, &registry);
        let goal = &episode.goals[0];
        let here = agent.pose().position();
        let nearest = goal
            .target_ids
            .iter()
            .filter_map(|id| self.scene.object(*id))
            .map(|o| o.position.distance(here))
            .fold(f64::INFINITY, f64::min);
        let found = agent.goal_logs()[0].found.clone();
        let reached = found.is_some_and(|f| {
            goal.target_ids
                .iter()
                .filter_map(|id| self.scene.object(*id))
                .any(|o| o.position.distance(f.position) <= episode.success_radius)
        });
        Ok(json!({
            "reached": reached,
            "steps": agent.steps_taken(),
            "distance_to_target": nearest,
            "answer": trace.answer.as_ref().map(|a| a.summary()),
            "trace": trace_lines(&trace),
            "path": agent.trajectory().iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
        }))
    }
}

fn trace_lines(trace: &Trace) -> Vec<String> {
    let mut lines: Vec<String> = trace
        .records
        .iter()
        .map(|r| {
            let var = r.output_var.as_ref().map(|v| format!("{v} = ")).unwrap_or_default();
            let outcome = r
                .error
                .as_ref()
                .map_or_else(|| r.summary.clone(), |e| format!("error: {e}"));
            format!("line {}: {var}{} [{} steps] -> {outcome}", r.line, r.module, r.steps)
        })
        .collect();
    lines.push(match &trace.terminal {
        Some(Terminal::Completed) => "completed".into(),
        Some(Terminal::BudgetExhausted { line }) => format!("budget exhausted at line {line}"),
        Some(Terminal::RuntimeError { line, message, .. }) => format!("stopped at line {line}: {message}"),
        None => "no terminal".into(),
    });
    lines
}

/// Parses and statically checks a program.
pub fn check_value(text: &str) -> Value {
    let program = match parse_program(text) {
        Ok(p) => p,
        Err(errs) => {
            let errors: Vec<Value> = errs
                .0
                .iter()
                .map(|e| json!({"line": e.line, "message": e.to_string()}))
                .collect();
            return json!({"ok": false, "errors": errors});
        }
    };
    match Registry::standard().check(&program) {
        Ok(()) => json!({"ok": true, "errors": [], "normalized": pretty_print(&program)}),
        Err(errs) => {
            let errors: Vec<Value> = errs
                .iter()
                .map(|e| json!({"line": e.line, "message": e.message}))
                .collect();
            json!({"ok": false, "errors": errors})
        }
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(source: &str, seed: u32) -> Result<Demo, JsError> {
        Demo::load(source, u64::from(seed)).map_err(|e| JsError::new(&e))
    }

    pub fn scene(&self) -> String {
        self.scene_value().to_string()
    }

    pub fn run(&self, index: usize, memory_threshold: f64) -> Result<String, JsError> {
        self.run_value(index, memory_threshold)
            .map(|v| v.to_string())
            .map_err(|e| JsError::new(&e))
    }

    pub fn run_program(&self, index: usize, text: &str) -> Result<String, JsError> {
        self.program_value(index, text)
            .map(|v| v.to_string())
            .map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen]
pub fn check_program(text: &str) -> String {
    check_value(text).to_string()
}

#[wasm_bindgen]
pub fn fixture_names() -> String {
    json!(fixtures::NAMES).to_string()
}
