use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::{EpisodeRecord, EpisodeResult, Harness};
use super::failure::FailureCategory;
use super::metrics::{
    compute_dtg, compute_progress_ppl, compute_spl, llm_match_score, success_rate, MetricError, ProgressRow,
};
use crate::gridworld::{Episode, Scene, TaskKind};
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no episodes to run")]
    Empty,
    #[error("episode {index} is invalid: {message}")]
    InvalidEpisode { index: usize, message: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One episode to run, with the scene it belongs to.
#[derive(Debug, Clone)]
pub struct EpisodeJob {
    pub scene: Arc<Scene>,
    pub episode: Episode,
}

/// Aggregate metrics for one task kind. Percentages are 0..=100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAggregate {
    pub task: TaskKind,
    pub episodes: usize,
    pub success_rate: f64,
    pub spl: f64,
    pub progress: f64,
    pub ppl: f64,
    /// Mean distance to goal; None when every episode lacked one.
    pub dtg: Option<f64>,
    pub dtg_excluded: usize,
    /// LLM-Match score for question tasks.
    pub score: Option<f64>,
    pub unscored: usize,
    pub failures: BTreeMap<FailureCategory, usize>,
    pub harness_errors: usize,
}

impl TaskAggregate {
    pub fn from_results(task: TaskKind, rows: &[&EpisodeResult]) -> Result<Self, MetricError> {
        if rows.is_empty() {
            return Err(MetricError::Empty);
        }
        let successes: Vec<bool> = rows.iter().map(|r| r.success).collect();
        let spl_rows: Vec<(bool, f64, Option<f64>)> = rows
            .iter()
            .map(|r| (r.success, r.agent_path_length, r.optimal_length))
            .collect();
        let progress_rows: Vec<ProgressRow> = rows
            .iter()
            .map(|r| ProgressRow {
                goals_reached: r.goals_reached(),
                goals_total: r.goals_total,
                path_length: r.agent_path_length,
                reached_optimal_length: r.reached_optimal_length.unwrap_or(0.0),
            })
            .collect();
        let (progress, ppl) = compute_progress_ppl(&progress_rows)?;
        let (dtg, dtg_excluded) = compute_dtg(&rows.iter().map(|r| r.dtg).collect::<Vec<_>>());
        let (score, unscored) = if task == TaskKind::Eqa {
            let sigmas: Vec<u8> = rows.iter().filter_map(|r| r.sigma).collect();
            let unscored = rows.len() - sigmas.len();
            (llm_match_score(&sigmas).ok(), unscored)
        } else {
            (None, 0)
        };
        let mut failures = BTreeMap::new();
        for c in rows.iter().filter_map(|r| r.failure_category) {
            *failures.entry(c).or_insert(0) += 1;
        }
        Ok(Self {
            task,
            episodes: rows.len(),
            success_rate: success_rate(&successes)?,
            spl: compute_spl(&spl_rows)?,
            progress,
            ppl,
            dtg,
            dtg_excluded,
            score,
            unscored,
            failures,
            harness_errors: rows.iter().filter(|r| r.harness_error.is_some()).count(),
        })
    }
}

/// Everything a suite run reports: per-episode rows and per-task aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    /// Echo of the configuration that produced the rows.
    pub config: serde_json::Value,
    pub tasks: Vec<TaskAggregate>,
    pub episodes: Vec<EpisodeResult>,
}

impl SuiteReport {
    /// Aggregates `episodes`; the same rows always give the same report.
    pub fn from_results(
        seed: u64,
        config: serde_json::Value,
        episodes: Vec<EpisodeResult>,
    ) -> Result<Self, MetricError> {
        let mut tasks = Vec::new();
        for task in TaskKind::ALL {
            let rows: Vec<&EpisodeResult> = episodes.iter().filter(|r| r.task == task).collect();
            if !rows.is_empty() {
                tasks.push(TaskAggregate::from_results(task, &rows)?);
            }
        }
        if tasks.is_empty() {
            return Err(MetricError::Empty);
        }
        Ok(Self {
            seed,
            config,
            tasks,
            episodes,
        })
    }

    pub fn task(&self, task: TaskKind) -> Option<&TaskAggregate> {
        self.tasks.iter().find(|t| t.task == task)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Result of [`Harness::run_suite`]: the report plus full per-episode records.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub report: SuiteReport,
    pub records: Vec<EpisodeRecord>,
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    index: usize,
    scene: String,
    task: String,
    seed: u64,
    success: bool,
    goals_reached: usize,
    goals_total: usize,
    steps: u64,
    path_length: f64,
    optimal_length: String,
    reached_optimal_length: String,
    progress: f64,
    dtg: String,
    answer: String,
    sigma: String,
    failure: String,
    /// Goal whose attempt set the failure category.
    failed_goal: String,
    error: String,
    traces: String,
}

fn trace_name(index: usize, goal: usize) -> String {
    format!("traces/ep{index:05}_g{goal:02}.jsonl")
}

impl SuiteRun {
    /// Per-episode rows as CSV. Byte-identical for identical runs.
    pub fn results_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for rec in &self.records {
            let r = &rec.result;
            let traces: Vec<String> = rec
                .goals
                .iter()
                .filter(|g| g.trace.is_some())
                .map(|g| trace_name(r.index, g.goal_index))
                .collect();
            w.serialize(CsvRow {
                index: r.index,
                scene: r.scene.clone(),
                task: r.task.as_str().to_string(),
                seed: r.seed,
                success: r.success,
                goals_reached: r.goals_reached(),
                goals_total: r.goals_total,
                steps: r.steps,
                path_length: r.agent_path_length,
                optimal_length: opt_num(r.optimal_length),
                reached_optimal_length: opt_num(r.reached_optimal_length),
                progress: r.progress_fraction,
                dtg: opt_num(r.dtg),
                answer: r.answer.clone().unwrap_or_default(),
                sigma: r.sigma.map(|s| s.to_string()).unwrap_or_default(),
                failure: r.failure_category.map(|c| c.to_string()).unwrap_or_default(),
                failed_goal: r
                    .per_goal
                    .iter()
                    .find(|g| !g.reached)
                    .filter(|_| !r.success)
                    .map(|g| g.goal_index.to_string())
                    .unwrap_or_default(),
                error: r.harness_error.clone().unwrap_or_default(),
                traces: traces.join(";"),
            })?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `results.csv`, `summary.json` and one trace file per goal
    /// attempt under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let traces = dir.join("traces");
        std::fs::create_dir_all(&traces).map_err(io_err(&traces))?;
        let csv_path = dir.join("results.csv");
        std::fs::write(&csv_path, self.results_csv()?).map_err(io_err(&csv_path))?;
        let summary = dir.join("summary.json");
        std::fs::write(&summary, self.report.to_json()).map_err(io_err(&summary))?;
        for rec in &self.records {
            for g in &rec.goals {
                let Some(trace) = &g.trace else { continue };
                let path = dir.join(trace_name(rec.result.index, g.goal_index));
                let mut f = std::fs::File::create(&path).map_err(io_err(&path))?;
                f.write_all(trace.to_jsonl().as_bytes()).map_err(io_err(&path))?;
            }
        }
        Ok(())
    }
}

/// Reads back the episode rows of a `results.csv` as loosely typed records
/// (header name to cell), for tools that post-process a run.
pub fn read_results_csv(path: &Path) -> Result<Vec<BTreeMap<String, String>>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

fn panic_message(panic: Box<dyn std::any::Any + Send>) -> String {
    panic
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "episode panicked".into())
}

impl Harness {
    /// Runs every job on `parallelism` worker threads. Results are ordered
    /// by job index and do not depend on `parallelism`. A panicking episode
    /// becomes a row with `harness_error` set.
    pub fn run_suite(&self, jobs: &[EpisodeJob], parallelism: usize) -> Result<SuiteRun, HarnessError> {
        if jobs.is_empty() {
            return Err(HarnessError::Empty);
        }
        for (index, job) in jobs.iter().enumerate() {
            job.episode
                .validate(&job.scene)
                .map_err(|e| HarnessError::InvalidEpisode {
                    index,
                    message: e.to_string(),
                })?;
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<EpisodeRecord>>> = Mutex::new(vec![None; jobs.len()]);
        let workers = parallelism.clamp(1, jobs.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(job) = jobs.get(i) else { break };
                    let record = catch_unwind(AssertUnwindSafe(|| self.run_episode(&job.scene, &job.episode, i)))
                        .unwrap_or_else(|panic| {
                            let msg = panic_message(panic);
                            log::error!("episode {i} panicked: {msg}");
                            EpisodeRecord {
                                result: EpisodeResult::harness_failure(
                                    i,
                                    &job.scene.name,
                                    &job.episode,
                                    derive_seed(self.config.suite_seed, i as u64),
                                    msg,
                                ),
                                goals: Vec::new(),
                                actions: Vec::new(),
                                trajectory: Vec::new(),
                            }
                        });
                    slots.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(record);
                });
            }
        });
        let records: Vec<EpisodeRecord> = slots
            .into_inner()
            .unwrap_or_else(|p| p.into_inner())
            .into_iter()
            .map(|r| r.expect("every job ran"))
            .collect();
        let config = serde_json::to_value(&self.config).expect("config serializes");
        let report = SuiteReport::from_results(
            self.config.suite_seed,
            config,
            records.iter().map(|r| r.result.clone()).collect(),
        )?;
        Ok(SuiteRun { report, records })
    }
}
