use std::path::Path;
use std::process::{Command, Output};

fn compnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compnav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixture_run_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = compnav(&["run", "--scene", "apartment_small", "--out", path(&out), "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("config: {"), "{text}");
    assert!(
        text.lines().any(|l| l.starts_with("ovon") && l.contains("SR 100.0")),
        "{text}"
    );
    assert!(out.join("results.csv").exists());
    assert!(out.join("summary.json").exists());

    let report = compnav(&["report", path(&out)]);
    assert!(report.status.success());
    assert!(stdout(&report).contains("eqa"));
}

#[test]
fn out_of_range_threshold_is_rejected() {
    let o = compnav(&["run", "--scene", "minimal", "--memory-threshold", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--memory-threshold"), "{}", stderr(&o));
}

#[test]
fn unknown_scene_is_an_actionable_error() {
    let o = compnav(&["run", "--scene", "no_such_place"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("apartment_small"));
}

#[test]
fn run_can_dump_maps() {
    let dir = tempfile::tempdir().unwrap();
    let maps = dir.path().join("maps");
    let o = compnav(&["run", "--scene", "minimal", "--dump-maps", path(&maps)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for layer in ["obstacle", "value", "value_confidence", "feature_confidence"] {
        assert!(maps.join(format!("ep0000_g00_{layer}.pgm")).exists(), "{layer}");
    }
    assert!(maps.join("ep0000_g00.json").exists());
}

#[test]
fn dump_maps_command_runs_one_episode() {
    let dir = tempfile::tempdir().unwrap();
    let o = compnav(&[
        "dump-maps",
        "--scene",
        "apartment_small",
        "--index",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("ep0000_g00_value.pgm").exists());
    let bad = compnav(&[
        "dump-maps",
        "--scene",
        "minimal",
        "--index",
        "5",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn generated_scenes_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = compnav(&[
            "gen-scenes",
            "--count",
            "2",
            "--per-task",
            "2",
            "--seed",
            "1",
            "--out",
            path(out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for task in ["ovon", "goat", "multion", "eqa"] {
        for i in 0..2 {
            let name = format!("{task}/scene_{i:03}.json");
            let (x, y) = (
                std::fs::read(a.join(&name)).unwrap(),
                std::fs::read(b.join(&name)).unwrap(),
            );
            assert_eq!(x, y, "{name}");
        }
    }
    let bundle = compnav_core::gridworld::load_bundle(a.join("multion/scene_000.json")).unwrap();
    assert!(bundle.episodes.iter().all(|e| e.goals.len() == 3));

    let run = compnav(&["run", "--scene", path(&a.join("ovon")), "--jobs", "2"]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(stdout(&run).contains("n=4"));
}

#[test]
fn zero_scenes_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = compnav(&["gen-scenes", "--count", "0", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

fn table_rows(text: &str) -> Vec<&str> {
    text.lines()
        .skip_while(|l| !l.starts_with("threshold"))
        .skip(1)
        .take_while(|l| !l.starts_with("wrote"))
        .collect()
}

#[test]
fn ablation_prints_one_row_per_arm() {
    let dir = tempfile::tempdir().unwrap();
    let o = compnav(&[
        "ablate-memory",
        "--generate",
        "3",
        "--per-scene",
        "1",
        "--jobs",
        "4",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows = table_rows(&text);
    assert_eq!(rows.len(), 5, "{text}");
    assert!(rows[0].starts_with("no memory"));
    let csv = std::fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);

    let single = compnav(&[
        "ablate-memory",
        "--scene",
        "apartment_small",
        "--task",
        "multion",
        "--thresholds",
        "0.4",
    ]);
    assert!(single.status.success(), "{}", stderr(&single));
    assert_eq!(table_rows(&stdout(&single)).len(), 1);

    let mixed = compnav(&["ablate-memory", "--scene", "apartment_small"]);
    assert_eq!(mixed.status.code(), Some(2));
}

#[test]
fn traces_render_per_statement() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(compnav(&["run", "--scene", "minimal", "--out", path(&out)])
        .status
        .success());
    let file = out.join("traces/ep00000_g00.jsonl");

    let all = stdout(&compnav(&["trace", path(&file)]));
    assert_eq!(all.lines().filter(|l| l.starts_with("[line")).count(), 4, "{all}");
    assert!(all.contains("terminal: completed"));
    assert!(all.contains("episode succeeded"));

    let detect = stdout(&compnav(&["trace", path(&file), "--module", "detect"]));
    let blocks: Vec<&str> = detect.lines().filter(|l| l.starts_with("[line")).collect();
    assert_eq!(blocks.len(), 1);
    assert!(blocks[0].contains("detect("));
}

#[test]
fn failed_episodes_show_their_category() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = compnav(&[
        "run",
        "--task",
        "ovon",
        "--generate",
        "2",
        "--per-scene",
        "2",
        "--fault-rate",
        "1",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "a run completes whatever its SR: {}", stderr(&o));
    let rows = compnav_core::harness::read_results_csv(&out.join("results.csv")).unwrap();
    let failed = rows.iter().filter(|r| r["success"] == "false").count();
    assert!(failed > 0);
    let text = stdout(&compnav(&["trace", path(&out), "--failures-only"]));
    assert_eq!(text.matches("== episode").count(), failed, "{text}");
    assert_eq!(text.matches("failure: planner_wrong_target").count(), failed, "{text}");
}

#[test]
fn corrupt_traces_report_the_offset() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.jsonl");
    let first = r#"{"kind":"terminal","terminal":{"status":"completed"}}"#;
    std::fs::write(&file, format!("{first}\n{{oops\n")).unwrap();
    let o = compnav(&["trace", path(&file)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    // The bad key starts one byte into the second line.
    let offset = first.len() + 2;
    assert!(
        err.contains("line 2") && err.contains(&format!("byte offset {offset}")),
        "{err}"
    );
}
