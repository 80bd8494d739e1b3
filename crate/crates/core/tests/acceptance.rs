//! Acceptance run: every criterion prints one PASS/FAIL line. Exits nonzero
//! when any criterion fails.

mod common;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use compnav_core::agent::{Agent, AgentConfig};
use compnav_core::geometry::Cell;
use compnav_core::gridworld::{
    fixtures, generate_scene, geodesic_distance, Action, AgentPose, CellKind, Episode, GenConfig, GoalKind, GoalSpec,
    Scene, TaskKind, WorldState, STEP_SIZE,
};
use compnav_core::harness::metrics::{compute_spl, llm_match_score};
use compnav_core::harness::{EpisodeJob, FailureCategory, Harness, HarnessConfig, SuiteReport, SuiteRun};
use compnav_core::interpreter::{execute, parse_program, pretty_print, Registry, Terminal};
use compnav_core::memory::{
    frontier_cells, memory_recall, memory_recall_cell, recompute_value_map, CellState, FeatureMap, ObstacleMap,
};
use compnav_core::perception::{Embedder, Embedding};
use compnav_core::planner::{bundled_examples, FaultMode, Planner};
use compnav_core::pointnav::{navigate_to, NavBody, NavStatus, DEFAULT_GOAL_TOLERANCE};
use compnav_core::rng::rng_from_seed;
use rand::Rng;

use common::{generated_jobs, mixed_jobs, program_strategy};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn harness_with(configure: impl FnOnce(&mut HarnessConfig), fault: FaultMode) -> Harness {
    let mut config = HarnessConfig {
        suite_seed: 7,
        ..HarnessConfig::default()
    };
    configure(&mut config);
    Harness::new(config, Planner::stub(fault))
}

/// SPL ≤ SR and PPL ≤ Progress for every task of a report.
fn check_bounds(report: &SuiteReport) -> Result<(), String> {
    for t in &report.tasks {
        ensure(t.spl <= t.success_rate + 1e-9, || {
            format!("{:?}: SPL {} > SR {}", t.task, t.spl, t.success_rate)
        })?;
        ensure(t.ppl <= t.progress + 1e-9, || {
            format!("{:?}: PPL {} > Progress {}", t.task, t.ppl, t.progress)
        })?;
    }
    Ok(())
}

fn memory_ablation() -> Outcome {
    let started = Instant::now();
    let jobs = generated_jobs(TaskKind::Multion, 200, 1, 1_000);
    ensure(
        jobs.len() == 200 && jobs.iter().all(|j| j.episode.goals.len() == 3),
        || "expected 200 three-goal episodes".into(),
    )?;
    let run = |threshold: f64| {
        harness_with(|c| c.agent.explorer.memory_threshold = threshold, FaultMode::none())
            .run_suite(&jobs, 1)
            .map_err(|e| e.to_string())
    };
    let memory = run(0.4)?;
    let none = run(1.0)?;
    let elapsed = started.elapsed().as_secs_f64();
    check_bounds(&memory.report)?;
    check_bounds(&none.report)?;
    let seeds = |r: &SuiteRun| r.report.episodes.iter().map(|e| e.seed).collect::<Vec<_>>();
    ensure(seeds(&memory) == seeds(&none), || {
        "arms ran different episode seeds".into()
    })?;
    let (m, n) = (&memory.report.tasks[0], &none.report.tasks[0]);
    let (d_sr, d_ppl) = (m.success_rate - n.success_rate, m.ppl - n.ppl);
    let detail = format!(
        "SR {:.1} vs {:.1} ({d_sr:+.1}), PPL {:.1} vs {:.1} ({d_ppl:+.1}), {elapsed:.0}s",
        m.success_rate, n.success_rate, m.ppl, n.ppl
    );
    ensure(d_sr >= 3.0 && d_ppl >= 1.0, || format!("margin too small: {detail}"))?;
    ensure(elapsed <= 300.0, || format!("too slow: {detail}"))?;
    Ok(detail)
}

fn llm_match_exactness() -> Outcome {
    let mut checked = 0;
    for n in 1..=4u32 {
        for code in 0..5usize.pow(n) {
            let sigmas: Vec<u8> = (0..n).map(|i| (code / 5usize.pow(i) % 5) as u8 + 1).collect();
            let expected = sigmas.iter().map(|&s| (f64::from(s) - 1.0) / 4.0 * 100.0).sum::<f64>() / f64::from(n);
            let got = llm_match_score(&sigmas).map_err(|e| e.to_string())?;
            ensure((got - expected).abs() <= 1e-12, || {
                format!("{sigmas:?}: {got} vs {expected}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} score vectors"))
}

fn orthogonal_to(e: &Embedding, seed: u64) -> Embedding {
    let mut rng = rng_from_seed(seed);
    let raw: Vec<f64> = (0..e.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dot: f64 = raw.iter().zip(e.as_slice()).map(|(a, b)| a * b).sum();
    let v: Vec<f64> = raw.iter().zip(e.as_slice()).map(|(a, b)| a - dot * b).collect();
    Embedding::from_vec(v).expect("non-zero vector")
}

fn cosine_memory() -> Outcome {
    let embedder = Embedder::default();
    let mut rng = rng_from_seed(33);
    let targets = [
        "red cylinder",
        "chair",
        "the white armchair in the living room",
        "yellow table lamp",
    ];
    let mut recalls = 0;
    for (k, text) in targets.iter().enumerate() {
        let target = embedder.embed_text(text).map_err(|e| e.to_string())?;
        let mut fmap = FeatureMap::new(24, 32);
        let plant = Cell::new(rng.gen_range(0..24), rng.gen_range(0..32));
        fmap.set(plant, Some(target.clone()), 1.0);
        let mut ortho_cells = Vec::new();
        for j in 0..5 {
            let c = Cell::new(rng.gen_range(0..24), rng.gen_range(0..32));
            if c != plant {
                fmap.set(c, Some(orthogonal_to(&target, (k * 10 + j) as u64)), 1.0);
                ortho_cells.push(c);
            }
        }
        let vmap = recompute_value_map(&fmap, &target);
        ensure((vmap.value(plant) - 1.0).abs() <= 1e-9, || {
            format!("planted value {}", vmap.value(plant))
        })?;
        for c in &ortho_cells {
            ensure(vmap.value(*c).abs() <= 1e-9, || {
                format!("orthogonal value {}", vmap.value(*c))
            })?;
        }
        let mut thresholds: Vec<f64> = vec![0.0, 0.2, 0.3, 0.4, 0.5, 0.9, 0.999_999];
        thresholds.extend((0..50).map(|_| rng.gen_range(0.0..1.0)));
        for th in thresholds {
            ensure(memory_recall_cell(&vmap, th) == Some(plant), || {
                format!(
                    "threshold {th}: recall {:?}, planted {plant:?}",
                    memory_recall_cell(&vmap, th)
                )
            })?;
            ensure(memory_recall(&vmap, th, 0.25) == Some(plant.center(0.25)), || {
                format!("threshold {th}: recall point mismatch")
            })?;
            recalls += 1;
        }
        ensure(memory_recall_cell(&vmap, 1.0).is_none(), || {
            "recall fired at threshold 1.0".into()
        })?;
    }
    Ok(format!("{} plants, {recalls} recall checks", targets.len()))
}

fn frontier_oracle() -> Outcome {
    let mut rng = rng_from_seed(44);
    let mut total = 0;
    for _ in 0..1000 {
        let mut map = ObstacleMap::new(32, 32, 0.25);
        let weights: [f64; 3] = [
            rng.gen_range(0.05..0.6),
            rng.gen_range(0.2..0.9),
            rng.gen_range(0.0..0.4),
        ];
        let sum: f64 = weights.iter().sum();
        let mut states = vec![vec![CellState::Unknown; 32]; 32];
        for (r, row) in states.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                let x = rng.gen_range(0.0..sum);
                let s = if x < weights[0] {
                    CellState::Unknown
                } else if x < weights[0] + weights[1] {
                    CellState::Free
                } else {
                    CellState::Occupied
                };
                *slot = s;
                map.set(Cell::new(r, c), s);
            }
        }
        let mut expected = BTreeSet::new();
        for r in 0..32usize {
            for c in 0..32usize {
                if states[r][c] != CellState::Free {
                    continue;
                }
                let unknown_neighbour = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|(dr, dc)| {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    (0..32).contains(&nr)
                        && (0..32).contains(&nc)
                        && states[nr as usize][nc as usize] == CellState::Unknown
                });
                if unknown_neighbour {
                    expected.insert(Cell::new(r, c));
                }
            }
        }
        let got = frontier_cells(&map);
        ensure(got == expected, || {
            format!(
                "frontier mismatch: {} extracted vs {} expected",
                got.len(),
                expected.len()
            )
        })?;
        total += expected.len();
    }
    Ok(format!("1000 maps, {total} frontier cells"))
}

/// Plain Dijkstra over free cells with 8-connectivity and no corner cutting,
/// counting straight and diagonal moves separately.
fn reference_dijkstra(scene: &Scene, from: Cell, to: Cell) -> f64 {
    let (rows, cols) = (scene.grid.rows() as i64, scene.grid.cols() as i64);
    let free = |r: i64, c: i64| {
        r >= 0 && c >= 0 && r < rows && c < cols && scene.grid.get(Cell::new(r as usize, c as usize)) == CellKind::Free
    };
    let units = |(s, d): (u32, u32)| f64::from(s) + f64::from(d) * std::f64::consts::SQRT_2;
    let mut best = vec![None::<(u32, u32)>; (rows * cols) as usize];
    let mut heap = BinaryHeap::new();
    let key = |sd: (u32, u32)| (units(sd).to_bits(), sd.0);
    best[(from.row as i64 * cols + from.col as i64) as usize] = Some((0, 0));
    heap.push(Reverse((key((0, 0)), (0u32, 0u32), from.row as i64, from.col as i64)));
    while let Some(Reverse((_, sd, r, c))) = heap.pop() {
        if best[(r * cols + c) as usize].is_some_and(|b| units(b) < units(sd)) {
            continue;
        }
        for dr in -1..=1i64 {
            for dc in -1..=1i64 {
                if (dr, dc) == (0, 0) || !free(r + dr, c + dc) {
                    continue;
                }
                let diagonal = dr != 0 && dc != 0;
                if diagonal && !(free(r + dr, c) && free(r, c + dc)) {
                    continue;
                }
                let next = if diagonal { (sd.0, sd.1 + 1) } else { (sd.0 + 1, sd.1) };
                let slot = &mut best[((r + dr) * cols + c + dc) as usize];
                if slot.is_none_or(|old| units(next) < units(old)) {
                    *slot = Some(next);
                    heap.push(Reverse((key(next), next, r + dr, c + dc)));
                }
            }
        }
    }
    best[(to.row as i64 * cols + to.col as i64) as usize].map_or(f64::INFINITY, |sd| units(sd) * scene.resolution)
}

fn free_cells(scene: &Scene) -> Vec<Cell> {
    scene.grid.free_cells().collect()
}

fn geodesic_and_spl() -> Outcome {
    let mut rng = rng_from_seed(55);
    let mut pairs = 0;
    for s in 0..50u64 {
        let scene = generate_scene(&GenConfig::default(), 500 + s).map_err(|e| e.to_string())?;
        let free = free_cells(&scene);
        for _ in 0..20 {
            let a = free[rng.gen_range(0..free.len())];
            let b = free[rng.gen_range(0..free.len())];
            let got = geodesic_distance(&scene, a.center(scene.resolution), b.center(scene.resolution))
                .map_err(|e| e.to_string())?;
            let expected = reference_dijkstra(&scene, a, b);
            ensure(got == expected, || {
                format!("scene {s}: {a:?}->{b:?} {got} vs {expected}")
            })?;
            pairs += 1;
        }
    }
    for _ in 0..2000 {
        let n = rng.gen_range(1..20);
        let rows: Vec<(bool, f64, Option<f64>)> = (0..n)
            .map(|_| {
                (
                    rng.gen_bool(0.5),
                    rng.gen_range(0.0..50.0),
                    Some(rng.gen_range(0.1..50.0)),
                )
            })
            .collect();
        let closed = rows
            .iter()
            .map(|&(s, p, l)| if s { l.unwrap() / p.max(l.unwrap()) } else { 0.0 })
            .sum::<f64>()
            / n as f64
            * 100.0;
        let got = compute_spl(&rows).map_err(|e| e.to_string())?;
        ensure((got - closed).abs() <= 1e-12, || format!("SPL {got} vs {closed}"))?;
    }
    let noisy = harness_with(
        |c| {
            c.agent.noise.false_negative_rate = 0.2;
            c.agent.noise.false_positive_rate = 0.1;
        },
        FaultMode::new(0.2, 3),
    );
    let clean = harness_with(|_| {}, FaultMode::none());
    let jobs = mixed_jobs(4, 5, 900);
    for h in [&noisy, &clean] {
        let run = h.run_suite(&jobs, 4).map_err(|e| e.to_string())?;
        check_bounds(&run.report)?;
    }
    Ok(format!(
        "{pairs} geodesic pairs, 2000 SPL rows, bounds hold on {} episodes x2",
        jobs.len()
    ))
}

/// A body that knows the whole map in advance.
struct KnownBody {
    world: WorldState,
    map: ObstacleMap,
    actions: Vec<Action>,
}

impl NavBody for KnownBody {
    fn pose(&self) -> AgentPose {
        self.world.pose()
    }

    fn obstacle_map(&self) -> &ObstacleMap {
        &self.map
    }

    fn obstacle_map_mut(&mut self) -> &mut ObstacleMap {
        &mut self.map
    }

    fn act(&mut self, action: Action) -> Option<bool> {
        self.actions.push(action);
        self.world.step(action).ok().map(|o| o.collided)
    }
}

fn body_at(scene: &Arc<Scene>, pose: AgentPose) -> KnownBody {
    let any_object = scene.objects[0].id;
    let episode = Episode {
        scene_ref: scene.name.clone(),
        start_pose: pose,
        goals: vec![GoalSpec {
            kind: GoalKind::Category,
            payload: "anything".into(),
            target_ids: BTreeSet::from([any_object]),
            ground_truth_answer: None,
        }],
        task_kind: TaskKind::Ovon,
        step_budget_per_goal: 10_000,
        success_radius: 1.0,
    };
    KnownBody {
        world: WorldState::reset(scene.clone(), episode).expect("valid start"),
        map: ObstacleMap::known(scene),
        actions: Vec::new(),
    }
}

fn navigator_optimality() -> Outcome {
    let mut rng = rng_from_seed(66);
    let mut worst: f64 = 0.0;
    for s in 0..100u64 {
        let scene = Arc::new(generate_scene(&GenConfig::default(), 700 + s).map_err(|e| e.to_string())?);
        let free = free_cells(&scene);
        let (start, goal, optimal) = loop {
            let a = free[rng.gen_range(0..free.len())];
            let b = free[rng.gen_range(0..free.len())];
            let d = reference_dijkstra(&scene, a, b);
            if d.is_finite() && d >= 1.0 {
                break (a, b, d);
            }
        };
        let p = start.center(scene.resolution);
        let heading = f64::from(rng.gen_range(0..12)) * 30.0;
        let mut body = body_at(&scene, AgentPose::new(p.x, p.y, heading));
        let g = goal.center(scene.resolution);
        let out = navigate_to(&mut body, g, 10_000, DEFAULT_GOAL_TOLERANCE);
        ensure(out.status == NavStatus::Reached, || format!("scene {s}: {out:?}"))?;
        let ratio = body.world.distance_travelled() / optimal;
        worst = worst.max(ratio);
        ensure(ratio <= 1.1, || {
            format!(
                "scene {s}: path {:.2} vs optimal {optimal:.2}",
                body.world.distance_travelled()
            )
        })?;
    }
    // Straight lines in an empty room.
    let mut grid = compnav_core::gridworld::Grid::new(40, 40, CellKind::Free);
    for i in 0..40 {
        for c in [Cell::new(0, i), Cell::new(39, i), Cell::new(i, 0), Cell::new(i, 39)] {
            grid.set(c, CellKind::Obstacle);
        }
    }
    let mut objects = generate_scene(&GenConfig::default(), 1)
        .map_err(|e| e.to_string())?
        .objects;
    objects.truncate(1);
    objects[0].position = compnav_core::Point::new(1.0, 1.0);
    let room = Arc::new(Scene::new("empty", 0.25, grid, objects).map_err(|e| e.to_string())?);
    let mut cases = 0;
    // Goals start beyond the waypoint tolerance; a goal already within it is
    // reached without moving.
    for direction in [0.0, 30.0, 60.0, 90.0, 180.0, 270.0, 330.0] {
        for k in [2u32, 4, 9, 12, 17] {
            for heading in [0.0, 90.0, 210.0] {
                let d = f64::from(k) * STEP_SIZE;
                let start = compnav_core::Point::new(5.0, 5.0);
                let goal = start.offset(direction, d);
                let mut body = body_at(&room, AgentPose::new(start.x, start.y, heading));
                let out = navigate_to(&mut body, goal, 1000, DEFAULT_GOAL_TOLERANCE);
                ensure(out.status == NavStatus::Reached, || {
                    format!("straight {direction}/{d}: {out:?}")
                })?;
                let forwards = body.actions.iter().filter(|a| **a == Action::Forward).count();
                let others_rotate = body.actions.iter().all(|a| *a == Action::Forward || a.is_rotation());
                let expected = (d / STEP_SIZE).ceil() as usize;
                ensure(forwards == expected && others_rotate, || {
                    format!("straight {direction}deg {d}m from {heading}deg: {:?}", body.actions)
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!(
        "100 scenes, worst ratio {worst:.3}; {cases} straight-line cases"
    ))
}

fn interpreter_soundness() -> Outcome {
    let registry = Registry::standard();
    let examples = bundled_examples();
    ensure(examples.len() == 15, || format!("{} bundled examples", examples.len()))?;
    for (i, ex) in examples.iter().enumerate() {
        let program = parse_program(&ex.program).map_err(|e| format!("example {i}: {e}"))?;
        registry.check(&program).map_err(|e| {
            format!(
                "example {i}: {}",
                e.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
            )
        })?;
        let bundle = fixtures::bundle(&ex.scene).ok_or_else(|| format!("example {i}: no fixture {}", ex.scene))?;
        let scene = Arc::new(bundle.scene);
        let episode = ex.episode();
        let budget = u64::from(episode.step_budget_per_goal);
        let mut agent = Agent::new(scene, episode, AgentConfig::default()).map_err(|e| e.to_string())?;
        agent.set_step_limit(budget);
        let trace = execute(&program, &mut agent, &registry);
        ensure(trace.terminal == Some(Terminal::Completed), || {
            format!("example {i} ended with {:?}", trace.terminal)
        })?;
    }
    let mut runner = proptest::test_runner::TestRunner::new(proptest::test_runner::Config {
        cases: 10_000,
        failure_persistence: None,
        ..Default::default()
    });
    runner
        .run(&program_strategy(), |program| {
            let text = pretty_print(&program);
            let parsed = parse_program(&text)
                .map_err(|e| proptest::test_runner::TestCaseError::fail(format!("{e} in {text:?}")))?;
            proptest::prop_assert!(parsed.same_structure(&program), "round trip changed {text:?}");
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("15 examples completed; 10000 round trips".into())
}

/// Walls in a ring two cells out around `center`, leaving a 3x3 pocket.
fn seal(grid: &mut compnav_core::gridworld::Grid, center: Cell) {
    let (rows, cols) = (grid.rows() as i64, grid.cols() as i64);
    for dr in -2..=2i64 {
        for dc in -2..=2i64 {
            if dr.abs() == 2 || dc.abs() == 2 {
                let (r, c) = (center.row as i64 + dr, center.col as i64 + dc);
                if (0..rows).contains(&r) && (0..cols).contains(&c) {
                    grid.set(Cell::new(r as usize, c as usize), CellKind::Obstacle);
                }
            }
        }
    }
}

fn failure_classifier() -> Outcome {
    // Planner fault at p = 1.
    let jobs: Vec<EpisodeJob> = [TaskKind::Ovon, TaskKind::Goat, TaskKind::Multion]
        .into_iter()
        .flat_map(|t| generated_jobs(t, 5, 4, 1_200))
        .collect();
    let run = harness_with(|_| {}, FaultMode::new(1.0, 11))
        .run_suite(&jobs, 4)
        .map_err(|e| e.to_string())?;
    let failed: Vec<_> = run.report.episodes.iter().filter(|e| !e.success).collect();
    ensure(!failed.is_empty(), || "fault mode produced no failures".into())?;
    ensure(
        failed
            .iter()
            .all(|e| e.failure_category == Some(FailureCategory::PlannerWrongTarget)),
        || {
            format!(
                "fault mode categories: {:?}",
                failed.iter().map(|e| e.failure_category).collect::<Vec<_>>()
            )
        },
    )?;
    let wrong = failed.len();

    // Blind detector with the target in view from the start.
    let mut blind_jobs = Vec::new();
    for job in generated_jobs(TaskKind::Ovon, 10, 3, 1_300) {
        let target = job
            .scene
            .object(*job.episode.goals[0].target_ids.first().unwrap())
            .unwrap();
        let near = free_cells(&job.scene)
            .into_iter()
            .map(|c| c.center(job.scene.resolution))
            .filter(|p| p.distance(target.position) > 0.0)
            .min_by(|a, b| a.distance(target.position).total_cmp(&b.distance(target.position)))
            .unwrap();
        let mut episode = job.episode.clone();
        episode.start_pose = AgentPose::new(near.x, near.y, 0.0);
        blind_jobs.push(EpisodeJob {
            scene: job.scene.clone(),
            episode,
        });
    }
    let run = harness_with(|c| c.agent.noise.false_negative_rate = 1.0, FaultMode::none())
        .run_suite(&blind_jobs, 4)
        .map_err(|e| e.to_string())?;
    ensure(
        run.report
            .episodes
            .iter()
            .all(|e| e.failure_category == Some(FailureCategory::IgnoredGoalObject)),
        || {
            format!(
                "blind detector categories: {:?}",
                run.report
                    .episodes
                    .iter()
                    .map(|e| e.failure_category)
                    .collect::<Vec<_>>()
            )
        },
    )?;
    let ignored = run.report.episodes.len();

    // Every target instance walled in.
    let mut sealed_jobs = Vec::new();
    for job in generated_jobs(TaskKind::Ovon, 10, 3, 1_400) {
        let scene = &job.scene;
        let mut grid = scene.grid.clone();
        let targets = &job.episode.goals[0].target_ids;
        for id in targets {
            seal(&mut grid, scene.cell_of(scene.object(*id).unwrap().position).unwrap());
        }
        let start = job.episode.start_pose.position();
        let inside = targets
            .iter()
            .any(|id| scene.object(*id).unwrap().position.distance(start) < 1.0);
        let Ok(sealed) = Scene::new(scene.name.clone(), scene.resolution, grid, scene.objects.clone()) else {
            continue;
        };
        if inside || !sealed.is_free_point(start) {
            continue;
        }
        sealed_jobs.push(EpisodeJob {
            scene: Arc::new(sealed),
            episode: job.episode,
        });
    }
    ensure(sealed_jobs.len() >= 20, || {
        format!("only {} sealed episodes", sealed_jobs.len())
    })?;
    let run = harness_with(|_| {}, FaultMode::none())
        .run_suite(&sealed_jobs, 4)
        .map_err(|e| e.to_string())?;
    ensure(
        run.report.episodes.iter().all(|e| {
            !e.success
                && matches!(
                    e.failure_category,
                    Some(FailureCategory::DidntSeeTarget | FailureCategory::Timeout)
                )
        }),
        || {
            format!(
                "sealed categories: {:?}",
                run.report
                    .episodes
                    .iter()
                    .map(|e| e.failure_category)
                    .collect::<Vec<_>>()
            )
        },
    )?;
    let sealed = run.report.episodes.len();

    // Totality over a noisy suite.
    let jobs = mixed_jobs(5, 25, 1_500);
    ensure(jobs.len() == 500, || {
        format!("{} episodes in the noisy suite", jobs.len())
    })?;
    let run = harness_with(
        |c| {
            c.agent.noise.false_negative_rate = 0.3;
            c.agent.noise.false_positive_rate = 0.2;
        },
        FaultMode::new(0.15, 5),
    )
    .run_suite(&jobs, 4)
    .map_err(|e| e.to_string())?;
    let mut failures = 0;
    for e in &run.report.episodes {
        ensure(e.harness_error.is_none(), || format!("episode {} errored", e.index))?;
        ensure(e.success == e.failure_category.is_none(), || {
            format!(
                "episode {}: success {} with category {:?}",
                e.index, e.success, e.failure_category
            )
        })?;
        failures += usize::from(!e.success);
    }
    for t in &run.report.tasks {
        let failed = t.episodes - (t.success_rate / 100.0 * t.episodes as f64).round() as usize;
        ensure(t.failures.values().sum::<usize>() == failed, || {
            format!("{:?}: categories do not partition failures", t.task)
        })?;
    }
    Ok(format!(
        "wrong target {wrong}/{wrong}, ignored {ignored}/{ignored}, sealed {sealed}/{sealed}, noisy suite {failures} failures all categorised"
    ))
}

fn determinism() -> Outcome {
    let jobs = mixed_jobs(3, 4, 1_600);
    let harness = harness_with(
        |c| {
            c.agent.noise.false_negative_rate = 0.2;
            c.agent.noise.false_positive_rate = 0.1;
        },
        FaultMode::new(0.2, 9),
    );
    let mut outputs = Vec::new();
    for parallelism in [1, 4, 1, 4] {
        let run = harness.run_suite(&jobs, parallelism).map_err(|e| e.to_string())?;
        outputs.push(run.results_csv().map_err(|e| e.to_string())?);
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
        "result rows differ between runs".into()
    })?;
    Ok(format!("{} rows identical over 4 runs", jobs.len()))
}

fn initialization_spin() -> Outcome {
    let mut jobs = mixed_jobs(3, 5, 1_700);
    for bundle in fixtures::NAMES.iter().filter_map(|n| fixtures::bundle(n)) {
        let scene = Arc::new(bundle.scene);
        jobs.extend(bundle.episodes.into_iter().map(|episode| EpisodeJob {
            scene: scene.clone(),
            episode,
        }));
    }
    let run = harness_with(|_| {}, FaultMode::new(0.3, 1))
        .run_suite(&jobs, 4)
        .map_err(|e| e.to_string())?;
    for rec in &run.records {
        let first = &rec.actions[..rec.actions.len().min(12)];
        let turned: f64 = first.iter().map(|a| a.heading_delta()).sum();
        ensure(
            first.len() == 12 && first.iter().all(|a| a.is_rotation()) && turned.abs() == 360.0,
            || format!("episode {}: first actions {first:?}", rec.result.index),
        )?;
    }
    Ok(format!("{} episodes", run.records.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("memory ablation trend", memory_ablation),
        ("LLM-match score exactness", llm_match_exactness),
        ("cosine memory exactness", cosine_memory),
        ("frontier oracle equivalence", frontier_oracle),
        ("geodesic and SPL oracle", geodesic_and_spl),
        ("navigator optimality", navigator_optimality),
        ("interpreter soundness", interpreter_soundness),
        ("failure classifier construction", failure_classifier),
        ("determinism", determinism),
        ("initialization spin", initialization_spin),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
