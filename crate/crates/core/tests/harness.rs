mod common;

use std::sync::Arc;

use compnav_core::gridworld::{fixtures, Episode, GoalKind, GoalSpec, TaskKind};
use compnav_core::harness::{
    read_results_csv, AnswerMode, EpisodeJob, FailureCategory, Harness, HarnessConfig, HarnessError, SuiteReport,
};
use compnav_core::planner::{FaultMode, Planner};

fn fixture_jobs(name: &str) -> Vec<EpisodeJob> {
    let bundle = fixtures::bundle(name).unwrap();
    let scene = Arc::new(bundle.scene);
    bundle
        .episodes
        .into_iter()
        .map(|episode| EpisodeJob {
            scene: scene.clone(),
            episode,
        })
        .collect()
}

fn stub_harness() -> Harness {
    Harness::new(HarnessConfig::default(), Planner::stub(FaultMode::none()))
}

#[test]
fn fixture_object_search_succeeds() {
    let jobs = fixture_jobs("minimal");
    let run = stub_harness().run_suite(&jobs, 1).unwrap();
    let r = &run.report.episodes[0];
    assert!(r.success, "{r:?}");
    assert_eq!(r.failure_category, None);
    assert!(r.dtg.unwrap() <= 1.0);
    let spl = run.report.task(TaskKind::Ovon).unwrap().spl;
    assert!(spl > 0.0 && spl <= 100.0);
}

#[test]
fn bundled_apartment_suite_succeeds() {
    let run = stub_harness().run_suite(&fixture_jobs("apartment_small"), 2).unwrap();
    for r in &run.report.episodes {
        assert!(r.success, "{:?} failed: {:?}", r.task, r.failure_category);
    }
    let eqa = run.report.task(TaskKind::Eqa).unwrap();
    assert_eq!(eqa.score, Some(100.0));
    let bed = run
        .report
        .episodes
        .iter()
        .find(|r| r.answer.as_deref() == Some("white"))
        .unwrap();
    assert_eq!(bed.sigma, Some(5));
}

#[test]
fn sequential_search_stops_at_a_wrong_declaration() {
    let mut jobs = fixture_jobs("apartment_small");
    jobs.retain(|j| j.episode.task_kind == TaskKind::Multion);
    // Ask for something the planner will look for under another name.
    let job = &mut jobs[0];
    job.episode.goals[1].target_ids = [1].into();
    let run = stub_harness().run_suite(&jobs, 1).unwrap();
    let r = &run.report.episodes[0];
    assert!(!r.success);
    assert_eq!(r.goals_reached(), 1);
    assert_eq!(r.per_goal.len(), 2, "the third goal is never revealed");
    assert!(r.progress_fraction > 0.3 && r.progress_fraction < 0.4);
    assert_eq!(r.failure_category, Some(FailureCategory::PlannerWrongTarget));
}

#[test]
fn wrong_answers_score_one() {
    let mut jobs = fixture_jobs("apartment_small");
    jobs.retain(|j| j.episode.task_kind == TaskKind::Eqa);
    jobs.truncate(1);
    jobs[0].episode.goals[0].ground_truth_answer = Some("purple".into());
    let config = HarnessConfig {
        answer_mode: AnswerMode::Exact,
        ..HarnessConfig::default()
    };
    let run = Harness::new(config, Planner::stub(FaultMode::none()))
        .run_suite(&jobs, 1)
        .unwrap();
    let r = &run.report.episodes[0];
    assert_eq!(r.sigma, Some(1));
    assert!(!r.success);
    assert_eq!(run.report.task(TaskKind::Eqa).unwrap().score, Some(0.0));
}

#[test]
fn results_are_independent_of_parallelism() {
    let jobs = common::mixed_jobs(2, 3, 77);
    let h = stub_harness();
    let a = h.run_suite(&jobs, 1).unwrap().results_csv().unwrap();
    let b = h.run_suite(&jobs, 4).unwrap().results_csv().unwrap();
    assert_eq!(a, b);
}

#[test]
fn reports_recompute_from_their_rows() {
    let jobs = common::mixed_jobs(1, 3, 78);
    let run = stub_harness().run_suite(&jobs, 2).unwrap();
    let again =
        SuiteReport::from_results(run.report.seed, run.report.config.clone(), run.report.episodes.clone()).unwrap();
    assert_eq!(again, run.report);
    let json: SuiteReport = serde_json::from_str(&run.report.to_json()).unwrap();
    assert_eq!(json, run.report);
}

#[test]
fn suite_output_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let run = stub_harness().run_suite(&fixture_jobs("apartment_small"), 2).unwrap();
    run.write(dir.path()).unwrap();
    let rows = read_results_csv(&dir.path().join("results.csv")).unwrap();
    assert_eq!(rows.len(), run.records.len());
    for row in &rows {
        for trace in row["traces"].split(';').filter(|t| !t.is_empty()) {
            let text = std::fs::read_to_string(dir.path().join(trace)).unwrap();
            compnav_core::interpreter::Trace::from_jsonl(&text).unwrap();
        }
    }
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn map_dumps_are_referenced_from_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = HarnessConfig {
        dump_maps: Some(dir.path().to_path_buf()),
        ..HarnessConfig::default()
    };
    let run = Harness::new(config, Planner::stub(FaultMode::none()))
        .run_suite(&fixture_jobs("minimal"), 1)
        .unwrap();
    let trace = run.records[0].goals[0].trace.as_ref().unwrap();
    let maps = trace.records.last().unwrap().maps.as_ref().unwrap();
    assert!(dir.path().join(maps).exists());
}

#[test]
fn empty_and_invalid_suites_are_rejected() {
    let h = stub_harness();
    assert!(matches!(h.run_suite(&[], 1), Err(HarnessError::Empty)));
    let mut jobs = fixture_jobs("minimal");
    jobs[0].episode = Episode {
        goals: vec![GoalSpec {
            kind: GoalKind::Category,
            payload: "chair".into(),
            target_ids: [99].into(),
            ground_truth_answer: None,
        }],
        ..jobs[0].episode.clone()
    };
    assert!(matches!(
        h.run_suite(&jobs, 1),
        Err(HarnessError::InvalidEpisode { index: 0, .. })
    ));
}
