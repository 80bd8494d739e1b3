use std::path::{Path, PathBuf};
use std::sync::Arc;

use compnav_core::gridworld::{
    fixtures, generate_episodes, generate_scene, load_bundle, Episode, GenConfig, SceneBundle, TaskKind,
};
use compnav_core::harness::EpisodeJob;
use compnav_core::rng::derive_seed;
use serde_json::{json, Value};

use crate::{CliError, SourceArgs};

/// Generator settings for `task`, naming the scene `name`.
pub fn gen_config(task: TaskKind, name: String) -> GenConfig {
    let base = if task == TaskKind::Multion {
        GenConfig::multion()
    } else {
        GenConfig::default()
    };
    GenConfig { name, ..base }
}

/// Scene bundles named by `spec`: a fixture name, a bundle file or a
/// directory of `*.json` bundles (sorted by file name).
fn bundles(spec: &str) -> Result<Vec<SceneBundle>, CliError> {
    if let Some(b) = fixtures::bundle(spec) {
        return Ok(vec![b]);
    }
    let path = Path::new(spec);
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(CliError::io(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(CliError::Usage(format!("{spec}: directory holds no scene files")));
        }
        return files.iter().map(|f| load_bundle(f).map_err(CliError::from)).collect();
    }
    if path.exists() {
        return Ok(vec![load_bundle(path)?]);
    }
    Err(CliError::Usage(format!(
        "--scene {spec:?} is neither a file, a directory nor a bundled fixture ({})",
        fixtures::NAMES.join(", ")
    )))
}

fn read_episodes(path: &Path) -> Result<Vec<Episode>, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a JSON list of episodes: {e}", path.display())))
}

/// Resolves the episode set. Generated episodes use scene seeds
/// `derive_seed(seed, i)` and episode seeds `derive_seed(seed, 10_000 + i)`.
pub fn jobs(args: &SourceArgs, seed: u64) -> Result<Vec<EpisodeJob>, CliError> {
    let mut jobs = Vec::new();
    if args.scene.is_empty() {
        if args.episodes.is_some() {
            return Err(CliError::Usage("--episodes needs exactly one --scene".into()));
        }
        if args.generate == 0 || args.per_scene == 0 {
            return Err(CliError::Usage("--generate and --per-scene must be at least 1".into()));
        }
        let tasks = match args.task {
            Some(t) => vec![t],
            None => TaskKind::ALL.to_vec(),
        };
        for task in tasks {
            for i in 0..args.generate {
                let config = gen_config(task, format!("gen_{}_{i:03}", task.as_str()));
                let scene = Arc::new(generate_scene(&config, derive_seed(seed, i))?);
                let episodes = generate_episodes(&scene, task, args.per_scene, derive_seed(seed, 10_000 + i))?;
                jobs.extend(episodes.into_iter().map(|episode| EpisodeJob {
                    scene: scene.clone(),
                    episode,
                }));
            }
        }
        return Ok(jobs);
    }
    let mut loaded = Vec::new();
    for spec in &args.scene {
        loaded.extend(bundles(spec)?);
    }
    if let Some(path) = &args.episodes {
        if loaded.len() != 1 {
            return Err(CliError::Usage("--episodes needs exactly one --scene".into()));
        }
        loaded[0].episodes = read_episodes(path)?;
    }
    for bundle in loaded {
        let scene = Arc::new(bundle.scene);
        jobs.extend(
            bundle
                .episodes
                .into_iter()
                .filter(|e| args.task.is_none_or(|t| t == e.task_kind))
                .map(|episode| EpisodeJob {
                    scene: scene.clone(),
                    episode,
                }),
        );
    }
    if jobs.is_empty() {
        return Err(CliError::Usage("the selected scenes hold no matching episodes".into()));
    }
    Ok(jobs)
}

pub fn echo(args: &SourceArgs) -> Value {
    json!({
        "scene": args.scene,
        "episodes": args.episodes,
        "task": args.task.map(TaskKind::as_str),
        "generate": args.generate,
        "per_scene": args.per_scene,
    })
}
