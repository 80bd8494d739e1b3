use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::failure::{classify_failure, FailureCategory, FailureEvidence};
use super::metrics::{
    distance_field_from, judge_prompt, layered_optimal_length, parse_judge_reply, score_answer_offline, AnswerMode,
};
use crate::agent::{Agent, AgentConfig};
use crate::geometry::Point;
use crate::gridworld::{Action, AgentPose, Episode, GoalKind, GoalSpec, Scene, TaskKind};
use crate::interpreter::{execute, Program, Registry, Trace, Value};
use crate::memory::dump_maps;
use crate::perception::SynonymTable;
use crate::planner::{Completion, Planner, Task};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub agent: AgentConfig,
    pub answer_mode: AnswerMode,
    pub suite_seed: u64,
    /// Directory for per-goal map snapshots, when wanted.
    #[serde(default)]
    pub dump_maps: Option<PathBuf>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            agent: AgentConfig::default(),
            answer_mode: AnswerMode::Constrained,
            suite_seed: 0,
            dump_maps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalResult {
    pub goal_index: usize,
    pub kind: GoalKind,
    pub reached: bool,
    pub steps: u64,
    /// Geodesic distance from where the attempt ended to the nearest target.
    pub dtg: Option<f64>,
    pub found_declared: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub index: usize,
    pub scene: String,
    pub task: TaskKind,
    pub seed: u64,
    pub success: bool,
    pub agent_path_length: f64,
    /// Optimal length through every goal, in order.
    pub optimal_length: Option<f64>,
    /// Optimal length through the goals that were reached, in order.
    pub reached_optimal_length: Option<f64>,
    pub per_goal: Vec<GoalResult>,
    pub goals_total: usize,
    pub progress_fraction: f64,
    pub dtg: Option<f64>,
    pub steps: u64,
    pub answer: Option<String>,
    pub sigma: Option<u8>,
    pub failure_category: Option<FailureCategory>,
    /// Set when the episode could not be run at all.
    pub harness_error: Option<String>,
}

impl EpisodeResult {
    pub fn goals_reached(&self) -> usize {
        self.per_goal.iter().filter(|g| g.reached).count()
    }

    pub(crate) fn harness_failure(index: usize, scene: &str, episode: &Episode, seed: u64, message: String) -> Self {
        Self {
            index,
            scene: scene.to_string(),
            task: episode.task_kind,
            seed,
            success: false,
            agent_path_length: 0.0,
            optimal_length: None,
            reached_optimal_length: None,
            per_goal: Vec::new(),
            goals_total: episode.goals.len(),
            progress_fraction: 0.0,
            dtg: None,
            steps: 0,
            answer: None,
            sigma: None,
            failure_category: None,
            harness_error: Some(message),
        }
    }
}

/// One goal attempt: what was planned and how it ran.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalRun {
    pub goal_index: usize,
    pub program_text: Option<String>,
    pub planning_error: Option<String>,
    pub trace: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub result: EpisodeResult,
    pub goals: Vec<GoalRun>,
    pub actions: Vec<Action>,
    pub trajectory: Vec<AgentPose>,
}

fn target_points(scene: &Scene, goal: &GoalSpec) -> Vec<Point> {
    goal.target_ids
        .iter()
        .filter_map(|id| scene.object(*id))
        .map(|o| o.position)
        .collect()
}

fn nearest_target_distance(scene: &Scene, from: Point, goal: &GoalSpec) -> Option<f64> {
    let field = distance_field_from(scene, from)?;
    let d = target_points(scene, goal)
        .into_iter()
        .filter_map(|p| scene.cell_of(p))
        .map(|c| field.meters(c))
        .fold(f64::INFINITY, f64::min);
    d.is_finite().then_some(d)
}

fn answer_text(v: &Value) -> String {
    match v {
        Value::Text(t) => t.clone(),
        Value::Number(n) => format!("{n}"),
        Value::Bool(true) => "yes".into(),
        Value::Bool(false) => "no".into(),
        other => other.summary(),
    }
}

/// Runs episodes under their task protocols and scores them.
pub struct Harness {
    pub config: HarnessConfig,
    planner: Planner,
    judge: Option<Box<dyn Completion>>,
    registry: Registry,
    synonyms: SynonymTable,
}

impl std::fmt::Debug for Harness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Harness")
            .field("config", &self.config)
            .field("planner", &self.planner)
            .finish()
    }
}

impl Harness {
    pub fn new(config: HarnessConfig, planner: Planner) -> Self {
        Self {
            config,
            planner,
            judge: None,
            registry: Registry::standard(),
            synonyms: SynonymTable::bundled(),
        }
    }

    pub fn with_judge(mut self, judge: Box<dyn Completion>) -> Self {
        self.judge = Some(judge);
        self
    }

    pub fn with_synonyms(mut self, synonyms: SynonymTable) -> Self {
        self.synonyms = synonyms;
        self
    }

    pub fn planner(&self) -> &Planner {
        &self.planner
    }

    fn score(&self, question: &str, answer: &str, truth: &str) -> Option<u8> {
        match self.config.answer_mode {
            AnswerMode::Judge => {
                let Some(judge) = &self.judge else {
                    log::warn!("judge scoring requested without a judge backend; episode left unscored");
                    return None;
                };
                match judge.complete(&judge_prompt(question, answer, truth)) {
                    Ok((reply, _)) => parse_judge_reply(&reply).or_else(|| {
                        log::warn!("unreadable judge reply {reply:?}; episode left unscored");
                        None
                    }),
                    Err(e) => {
                        log::warn!("judge request failed ({e}); episode left unscored");
                        None
                    }
                }
            }
            mode => Some(score_answer_offline(answer, truth, mode, &self.synonyms)),
        }
    }

    /// Runs one episode. `index` positions it in its suite and, with the
    /// suite seed, determines every random draw.
    pub fn run_episode(&self, scene: &Arc<Scene>, episode: &Episode, index: usize) -> EpisodeRecord {
        let seed = derive_seed(self.config.suite_seed, index as u64);
        let mut agent_config = self.config.agent;
        agent_config.noise.seed = seed;
        let mut agent = match Agent::new(scene.clone(), episode.clone(), agent_config) {
            Ok(a) => a,
            Err(e) => {
                return EpisodeRecord {
                    result: EpisodeResult::harness_failure(index, &scene.name, episode, seed, e.to_string()),
                    goals: Vec::new(),
                    actions: Vec::new(),
                    trajectory: Vec::new(),
                }
            }
        };
        let multi_object = episode.task_kind == TaskKind::Multion;
        let budget = u64::from(episode.step_budget_per_goal);
        if multi_object {
            // One budget for the whole sequence.
            agent.set_step_limit(budget);
        }

        let mut per_goal = Vec::new();
        let mut runs = Vec::new();
        let mut answer = None;
        let mut sigma = None;
        let mut first_failure: Option<(usize, Option<Program>, bool, Option<Trace>)> = None;

        for (gi, goal) in episode.goals.iter().enumerate() {
            if gi > 0 && !agent.advance_goal() {
                break;
            }
            if !multi_object {
                agent.set_step_limit(agent.steps_taken() + budget);
            }
            let start_steps = agent.steps_taken();
            if agent.ensure_spin().is_err() {
                log::debug!("episode {index}: budget ran out during the initial turn");
            }
            let task = Task::from_goal(goal);
            let (program, run) = match self.planner.plan(&task, derive_seed(seed, gi as u64 + 1)) {
                Ok((program, response)) => {
                    let trace = execute(&program, &mut agent, &self.registry);
                    (
                        Some(program),
                        GoalRun {
                            goal_index: gi,
                            program_text: Some(response.program_text),
                            planning_error: None,
                            trace: Some(trace),
                        },
                    )
                }
                Err(e) => (
                    None,
                    GoalRun {
                        goal_index: gi,
                        program_text: None,
                        planning_error: Some(e.to_string()),
                        trace: None,
                    },
                ),
            };
            let mut run = run;
            if let Some(dir) = &self.config.dump_maps {
                let prefix = format!("ep{index:04}_g{gi:02}");
                match dump_maps(dir, &prefix, agent.explorer()) {
                    Ok(_) => {
                        if let Some(last) = run.trace.as_mut().and_then(|t| t.records.last_mut()) {
                            last.maps = Some(format!("{prefix}.json"));
                        }
                    }
                    Err(e) => log::warn!("could not write map snapshot {prefix}: {e}"),
                }
            }

            let log = &agent.goal_logs()[gi];
            let found = log.found.clone();
            let targets = target_points(scene, goal);
            let found_at_target = found
                .as_ref()
                .is_some_and(|f| targets.iter().any(|t| t.distance(f.position) <= episode.success_radius));
            let reached = if goal.kind == GoalKind::Question {
                let text = run.trace.as_ref().and_then(|t| t.answer.as_ref()).map(answer_text);
                let truth = goal.ground_truth_answer.clone().unwrap_or_default();
                let s = self.score(&goal.payload, text.as_deref().unwrap_or(""), &truth);
                answer = text;
                sigma = s;
                s.is_some_and(|s| s >= 3)
            } else {
                found_at_target
            };
            per_goal.push(GoalResult {
                goal_index: gi,
                kind: goal.kind,
                reached,
                steps: agent.steps_taken() - start_steps,
                dtg: nearest_target_distance(scene, agent.pose().position(), goal),
                found_declared: found.is_some(),
            });
            if !reached && first_failure.is_none() {
                first_failure = Some((gi, program, run.planning_error.is_some(), run.trace.clone()));
            }
            runs.push(run);
            // The next target is revealed only after a correct declaration.
            if multi_object && !reached {
                break;
            }
        }

        let start = episode.start_pose.position();
        let all_layers: Vec<Vec<Point>> = episode.goals.iter().map(|g| target_points(scene, g)).collect();
        let reached_layers: Vec<Vec<Point>> = per_goal
            .iter()
            .filter(|g| g.reached)
            .map(|g| all_layers[g.goal_index].clone())
            .collect();
        let goals_reached = reached_layers.len();
        let success = goals_reached == episode.goals.len();
        let active = agent.world().goal_index();
        let failure_category = first_failure.map(|(gi, program, planning_failed, trace)| {
            classify_failure(
                &FailureEvidence {
                    scene,
                    goal: &episode.goals[gi],
                    program: program.as_ref(),
                    planning_failed,
                    terminal: trace.as_ref().and_then(|t| t.terminal.as_ref()),
                    log: &agent.goal_logs()[gi],
                    success_radius: episode.success_radius,
                },
                &self.synonyms,
            )
        });
        let result = EpisodeResult {
            index,
            scene: scene.name.clone(),
            task: episode.task_kind,
            seed,
            success,
            agent_path_length: agent.world().distance_travelled(),
            optimal_length: layered_optimal_length(scene, start, &all_layers),
            reached_optimal_length: if goals_reached == 0 {
                Some(0.0)
            } else {
                layered_optimal_length(scene, start, &reached_layers)
            },
            goals_total: episode.goals.len(),
            progress_fraction: goals_reached as f64 / episode.goals.len() as f64,
            dtg: nearest_target_distance(scene, agent.pose().position(), &episode.goals[active]),
            steps: agent.steps_taken(),
            answer,
            sigma,
            failure_category: if success { None } else { failure_category },
            harness_error: None,
            per_goal,
        };
        EpisodeRecord {
            result,
            goals: runs,
            actions: agent.actions().to_vec(),
            trajectory: agent.trajectory().to_vec(),
        }
    }
}
