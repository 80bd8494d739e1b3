use std::fmt::Write as _;
use std::path::Path;

use compnav_core::agent::AgentConfig;
use compnav_core::gridworld::{generate_episodes, generate_scene, SceneBundle, TaskKind};
use compnav_core::harness::{AnswerMode, EpisodeJob, Harness, HarnessConfig, SuiteReport, TaskAggregate};
use compnav_core::perception::NoiseConfig;
use compnav_core::planner::endpoint::EndpointConfig;
use compnav_core::planner::{Backend, FaultMode, Planner, ResponseCache};
use compnav_core::rng::derive_seed;
use serde_json::{json, Value};

use crate::source::{self, gen_config};
use crate::{AblateArgs, AgentArgs, CliError, DumpArgs, GenArgs, PlannerKind, RunArgs};

fn unit_interval(name: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be within [0, 1], got {v}")))
    }
}

impl AgentArgs {
    fn validate(&self) -> Result<(), CliError> {
        unit_interval("--memory-threshold", self.memory_threshold)?;
        unit_interval("--fn-rate", self.fn_rate)?;
        unit_interval("--fp-rate", self.fp_rate)?;
        unit_interval("--fault-rate", self.fault_rate)?;
        if self.jobs == Some(0) {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        if self.planner == PlannerKind::Endpoint && self.fault_rate > 0.0 {
            return Err(CliError::Usage("--fault-rate only applies to the stub planner".into()));
        }
        Ok(())
    }

    fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    fn harness_config(&self) -> HarnessConfig {
        let mut agent = AgentConfig::default();
        agent.explorer.memory_threshold = self.memory_threshold;
        agent.noise = NoiseConfig {
            false_negative_rate: self.fn_rate,
            false_positive_rate: self.fp_rate,
            seed: self.seed,
        };
        HarnessConfig {
            agent,
            answer_mode: self.answer_mode,
            suite_seed: self.seed,
            dump_maps: None,
        }
    }

    fn planner(&self) -> Result<Planner, CliError> {
        match self.planner {
            PlannerKind::Stub => Ok(Planner::stub(FaultMode::new(self.fault_rate, self.seed))),
            PlannerKind::Endpoint => remote_planner(self),
        }
    }

    fn harness(&self, config: HarnessConfig) -> Result<Harness, CliError> {
        let harness = Harness::new(config, self.planner()?);
        if self.answer_mode == AnswerMode::Judge {
            return judged(harness);
        }
        Ok(harness)
    }

    fn echo(&self) -> Value {
        json!({
            "planner": self.planner.as_str(),
            "fault_rate": self.fault_rate,
            "memory_threshold": self.memory_threshold,
            "fn_rate": self.fn_rate,
            "fp_rate": self.fp_rate,
            "answer_mode": self.answer_mode,
            "seed": self.seed,
        })
    }
}

fn remote_planner(args: &AgentArgs) -> Result<Planner, CliError> {
    let planner = Planner::new(Backend::Remote(Box::new(EndpointConfig::from_env()?)));
    Ok(match &args.cache_dir {
        Some(dir) => planner.with_cache(ResponseCache::new(dir)),
        None => planner,
    })
}

fn judged(harness: Harness) -> Result<Harness, CliError> {
    Ok(harness.with_judge(Box::new(EndpointConfig::from_env()?)))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

/// One line per task: the headline metrics.
pub fn aggregate_line(t: &TaskAggregate) -> String {
    let mut line = format!(
        "{:<8} n={:<4} SR {:>5.1}  SPL {:>5.1}  Progress {:>5.1}  PPL {:>5.1}  DTG {:>5}  Score {:>5}",
        t.task.as_str(),
        t.episodes,
        t.success_rate,
        t.spl,
        t.progress,
        t.ppl,
        fmt_opt(t.dtg),
        t.score.map_or_else(|| "-".into(), |s| format!("{s:.1}")),
    );
    if t.harness_errors > 0 {
        let _ = write!(line, "  harness errors {}", t.harness_errors);
    }
    line
}

fn print_report(report: &SuiteReport) {
    for t in &report.tasks {
        println!("{}", aggregate_line(t));
        if !t.failures.is_empty() {
            let parts: Vec<String> = t.failures.iter().map(|(c, n)| format!("{c} {n}")).collect();
            println!("         failures: {}", parts.join(", "));
        }
    }
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    args.agent.validate()?;
    let jobs = source::jobs(&args.source, args.agent.seed)?;
    let mut config = args.agent.harness_config();
    config.dump_maps = args.dump_maps.clone();
    let harness = args.agent.harness(config)?;
    println!(
        "config: {}",
        json!({"command": "run", "source": source::echo(&args.source), "agent": args.agent.echo(),
               "episodes": jobs.len(), "dump_maps": args.dump_maps})
    );
    let run = harness.run_suite(&jobs, args.agent.jobs())?;
    print_report(&run.report);
    if let Some(out) = &args.out {
        run.write(out)?;
        println!("wrote {}", out.join("results.csv").display());
    }
    let errors: usize = run.report.tasks.iter().map(|t| t.harness_errors).sum();
    if errors > 0 {
        return Err(CliError::EpisodeErrors(errors));
    }
    Ok(())
}

struct ArmRow {
    threshold: f64,
    sr: f64,
    progress: f64,
    spl: f64,
    ppl: f64,
}

pub fn ablate(args: &AblateArgs) -> Result<(), CliError> {
    args.agent.validate()?;
    if args.thresholds.is_empty() {
        return Err(CliError::Usage("--thresholds needs at least one value".into()));
    }
    for &t in &args.thresholds {
        unit_interval("every threshold", t)?;
    }
    let mut source = args.source.clone();
    if source.scene.is_empty() && source.task.is_none() {
        source.task = Some(TaskKind::Multion);
    }
    let jobs: Vec<EpisodeJob> = source::jobs(&source, args.agent.seed)?;
    let task = jobs[0].episode.task_kind;
    if jobs.iter().any(|j| j.episode.task_kind != task) {
        return Err(CliError::Usage(
            "ablation needs episodes of a single task; pass --task".into(),
        ));
    }
    println!(
        "config: {}",
        json!({"command": "ablate-memory", "source": source::echo(&source), "agent": args.agent.echo(),
               "thresholds": args.thresholds, "episodes": jobs.len()})
    );
    let mut rows = Vec::new();
    let mut seeds: Option<Vec<u64>> = None;
    for &threshold in &args.thresholds {
        let mut config = args.agent.harness_config();
        config.agent.explorer.memory_threshold = threshold;
        let run = args.agent.harness(config)?.run_suite(&jobs, args.agent.jobs())?;
        let arm_seeds: Vec<u64> = run.report.episodes.iter().map(|e| e.seed).collect();
        let first = seeds.get_or_insert_with(|| arm_seeds.clone());
        assert_eq!(*first, arm_seeds, "ablation arms must share episode seeds");
        let t = run.report.task(task).expect("every episode has this task");
        rows.push(ArmRow {
            threshold,
            sr: t.success_rate,
            progress: t.progress,
            spl: t.spl,
            ppl: t.ppl,
        });
    }
    let label = |t: f64| {
        if t >= 1.0 {
            "no memory".to_string()
        } else {
            format!("{t:.2}")
        }
    };
    println!(
        "{:<10} {:>6} {:>9} {:>6} {:>6}",
        "threshold", "SR", "Progress", "SPL", "PPL"
    );
    for r in &rows {
        println!(
            "{:<10} {:>6.1} {:>9.1} {:>6.1} {:>6.1}",
            label(r.threshold),
            r.sr,
            r.progress,
            r.spl,
            r.ppl
        );
    }
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(CliError::io(out))?;
        let mut csv = String::from("threshold,sr,progress,spl,ppl\n");
        for r in &rows {
            let _ = writeln!(csv, "{},{},{},{},{}", r.threshold, r.sr, r.progress, r.spl, r.ppl);
        }
        let path = out.join("ablation.csv");
        std::fs::write(&path, csv).map_err(CliError::io(&path))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn dump(args: &DumpArgs) -> Result<(), CliError> {
    args.agent.validate()?;
    let jobs = source::jobs(&args.source, args.agent.seed)?;
    let job = jobs.get(args.index).ok_or_else(|| {
        CliError::Usage(format!(
            "--index {} is out of range; {} episode(s) selected",
            args.index,
            jobs.len()
        ))
    })?;
    let mut config = args.agent.harness_config();
    config.dump_maps = Some(args.out.clone());
    let harness = args.agent.harness(config)?;
    println!(
        "config: {}",
        json!({"command": "dump-maps", "source": source::echo(&args.source), "agent": args.agent.echo(),
               "index": args.index})
    );
    let run = harness.run_suite(std::slice::from_ref(job), 1)?;
    let record = &run.records[0];
    for goal in &record.goals {
        let maps = goal
            .trace
            .as_ref()
            .and_then(|t| t.records.iter().rev().find_map(|r| r.maps.clone()));
        match maps {
            Some(m) => println!("goal {}: {}", goal.goal_index, args.out.join(m).display()),
            None => println!("goal {}: no maps (no program ran)", goal.goal_index),
        }
    }
    println!("episode {}: success {}", args.index, record.result.success);
    Ok(())
}

pub fn report(dir: &Path) -> Result<(), CliError> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
    let report: SuiteReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a suite summary: {e}", path.display())))?;
    println!("config: {}", report.config);
    print_report(&report);
    Ok(())
}

pub fn gen_scenes(args: &GenArgs) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if args.per_task == 0 {
        return Err(CliError::Usage("--per-task must be at least 1".into()));
    }
    let tasks = if args.tasks.is_empty() {
        TaskKind::ALL.to_vec()
    } else {
        args.tasks.clone()
    };
    let mut written = 0;
    for task in tasks {
        let dir = args.out.join(task.as_str());
        std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        for i in 0..args.count {
            let name = format!("scene_{i:03}");
            let config = gen_config(task, name.clone());
            let scene = generate_scene(&config, derive_seed(args.seed, i as u64))?;
            let episodes = generate_episodes(&scene, task, args.per_task, derive_seed(args.seed, 10_000 + i as u64))?;
            let bundle = SceneBundle { scene, episodes };
            let path = dir.join(format!("{name}.json"));
            std::fs::write(&path, bundle.to_json()).map_err(CliError::io(&path))?;
            written += 1;
        }
    }
    println!(
        "config: {}",
        json!({"command": "gen-scenes", "count": args.count, "per_task": args.per_task, "seed": args.seed})
    );
    println!("wrote {written} scene file(s) under {}", args.out.display());
    Ok(())
}
