mod commands;
mod source;
mod trace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compnav_core::gridworld::{GridError, TaskKind};
use compnav_core::harness::{AnswerMode, HarnessError};
use compnav_core::interpreter::TraceParseError;
use compnav_core::planner::PlanError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scene(#[from] GridError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("planner: {0}")]
    Planner(#[from] PlanError),
    #[error("cannot parse trace {path}: {source}")]
    Trace { path: PathBuf, source: TraceParseError },
    #[error("{0} episode(s) ended in a harness error")]
    EpisodeErrors(usize),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 1 when a run itself failed, 2 for bad input.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Harness(HarnessError::Empty | HarnessError::InvalidEpisode { .. }) => 2,
            CliError::Harness(_) | CliError::EpisodeErrors(_) | CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "compnav", version, about = "Compositional navigation benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes with episodes for each task.
    GenScenes(GenArgs),
    /// Run an episode suite and write its report.
    Run(RunArgs),
    /// Compare memory thresholds on one episode set.
    AblateMemory(AblateArgs),
    /// Render a trace file, or every trace of a run directory.
    Trace(TraceArgs),
    /// Run one episode and write its map layers.
    DumpMaps(DumpArgs),
    /// Print the aggregates of a finished run.
    Report {
        /// Run output directory.
        dir: PathBuf,
    },
}

#[derive(Args)]
pub struct GenArgs {
    /// Number of scenes.
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    /// Episodes per scene and task.
    #[arg(long, default_value_t = 4)]
    pub per_task: usize,
    /// Tasks to generate; all of them when omitted.
    #[arg(long = "task")]
    pub tasks: Vec<TaskKind>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Where episodes come from.
#[derive(Args, Clone)]
pub struct SourceArgs {
    /// Scene bundle file, directory of bundles, or bundled fixture name. Repeatable.
    #[arg(long)]
    pub scene: Vec<String>,
    /// JSON list of episodes to run on the single --scene instead of its own.
    #[arg(long)]
    pub episodes: Option<PathBuf>,
    /// Keep only this task; with no --scene, the task to generate.
    #[arg(long)]
    pub task: Option<TaskKind>,
    /// Scenes to generate when no --scene is given.
    #[arg(long, default_value_t = 8)]
    pub generate: u64,
    /// Generated episodes per scene.
    #[arg(long, default_value_t = 2)]
    pub per_scene: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlannerKind {
    Stub,
    Endpoint,
}

impl PlannerKind {
    fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Stub => "stub",
            PlannerKind::Endpoint => "endpoint",
        }
    }
}

#[derive(Args, Clone)]
pub struct AgentArgs {
    #[arg(long, value_enum, default_value = "stub")]
    pub planner: PlannerKind,
    /// Probability that the stub planner searches for the wrong object.
    #[arg(long, default_value_t = 0.0)]
    pub fault_rate: f64,
    /// Response cache for the endpoint planner.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0.4)]
    pub memory_threshold: f64,
    /// Detector false-negative rate.
    #[arg(long, default_value_t = 0.0)]
    pub fn_rate: f64,
    /// Detector false-positive rate.
    #[arg(long, default_value_t = 0.0)]
    pub fp_rate: f64,
    /// Question scoring: exact, constrained or judge.
    #[arg(long, default_value = "constrained")]
    pub answer_mode: AnswerMode,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub agent: AgentArgs,
    /// Output directory for results.csv, summary.json and traces.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write map layers at the end of every goal into this directory.
    #[arg(long)]
    pub dump_maps: Option<PathBuf>,
}

#[derive(Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub agent: AgentArgs,
    /// Thresholds to compare; 1.0 disables memory.
    #[arg(long, value_delimiter = ',', default_value = "1.0,0.2,0.3,0.4,0.5")]
    pub thresholds: Vec<f64>,
    /// Directory for ablation.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TraceArgs {
    /// A trace .jsonl file or a run output directory.
    pub path: PathBuf,
    /// Show only failed episodes, each with the goal that failed and the matched failure rule.
    #[arg(long)]
    pub failures_only: bool,
    /// Show only records of this module.
    #[arg(long)]
    pub module: Option<String>,
}

#[derive(Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub agent: AgentArgs,
    /// Which of the selected episodes to run.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenScenes(args) => commands::gen_scenes(&args),
        Command::Run(args) => commands::run(&args),
        Command::AblateMemory(args) => commands::ablate(&args),
        Command::Trace(args) => trace::show(&args),
        Command::DumpMaps(args) => commands::dump(&args),
        Command::Report { dir } => commands::report(&dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
