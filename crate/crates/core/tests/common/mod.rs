//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use compnav_core::gridworld::{generate_episodes, generate_scene, GenConfig, Scene, TaskKind};
use compnav_core::harness::EpisodeJob;
use compnav_core::interpreter::{Arg, ArgValue, Comment, Program, Statement};
use proptest::prelude::*;

/// `per_scene` episodes of `task` on each of `scenes` generated scenes.
pub fn generated_jobs(task: TaskKind, scenes: u64, per_scene: usize, seed: u64) -> Vec<EpisodeJob> {
    let config = if task == TaskKind::Multion {
        GenConfig::multion()
    } else {
        GenConfig::default()
    };
    let mut jobs = Vec::new();
    for i in 0..scenes {
        let scene = Arc::new(generate_scene(&config, seed + i).expect("generator config is valid"));
        for episode in generate_episodes(&scene, task, per_scene, seed + 10_000 + i).expect("episodes generate") {
            jobs.push(EpisodeJob {
                scene: scene.clone(),
                episode,
            });
        }
    }
    jobs
}

/// A little of every task.
pub fn mixed_jobs(scenes: u64, per_scene: usize, seed: u64) -> Vec<EpisodeJob> {
    TaskKind::ALL
        .into_iter()
        .flat_map(|t| generated_jobs(t, scenes, per_scene, seed))
        .collect()
}

pub fn scene_arc(scene: Scene) -> Arc<Scene> {
    Arc::new(scene)
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,7}".prop_filter("not a literal", |s| s != "true" && s != "false")
}

fn comment_text() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(String::new()),
        "[A-Za-z0-9]([A-Za-z0-9 ,.'=()#]{0,16}[A-Za-z0-9])?"
    ]
}

fn literal() -> impl Strategy<Value = ArgValue> {
    prop_oneof![
        "[ -~\t\néü日]{0,12}".prop_map(ArgValue::Text),
        any::<f64>()
            .prop_filter("finite", |n| n.is_finite())
            .prop_map(ArgValue::Number),
        (-1000i32..1000).prop_map(|n| ArgValue::Number(f64::from(n) / 8.0)),
        any::<bool>().prop_map(ArgValue::Bool),
    ]
}

#[derive(Debug, Clone)]
enum RawLine {
    Blank,
    Comment(String),
    Statement {
        output: bool,
        module: String,
        args: Vec<(String, Option<ArgValue>, usize)>,
        trailing: Option<String>,
    },
}

fn raw_line() -> impl Strategy<Value = RawLine> {
    let stmt = (
        any::<bool>(),
        ident(),
        prop::collection::btree_map(ident(), (prop::option::of(literal()), any::<usize>()), 0..4),
        prop::option::of(comment_text()),
    )
        .prop_map(|(output, module, args, trailing)| RawLine::Statement {
            output,
            module,
            args: args.into_iter().map(|(k, (v, pick))| (k, v, pick)).collect(),
            trailing,
        });
    prop_oneof![
        1 => Just(RawLine::Blank),
        1 => comment_text().prop_map(RawLine::Comment),
        5 => stmt,
    ]
}

/// Well-formed programs: variables are defined before use and assigned once.
pub fn program_strategy() -> impl Strategy<Value = Program> {
    prop::collection::vec(raw_line(), 0..12).prop_map(|lines| {
        let mut defined: Vec<String> = vec!["obs".into(), "goal".into()];
        let mut statements = Vec::new();
        let mut comments = Vec::new();
        for (i, raw) in lines.into_iter().enumerate() {
            let line = i + 1;
            match raw {
                RawLine::Blank => {}
                RawLine::Comment(text) => comments.push(Comment { line, text }),
                RawLine::Statement {
                    output,
                    module,
                    args,
                    trailing,
                } => {
                    let args = args
                        .into_iter()
                        .map(|(name, lit, pick)| Arg {
                            name,
                            value: lit.unwrap_or_else(|| ArgValue::Var(defined[pick % defined.len()].clone())),
                        })
                        .collect();
                    let output_var = output.then(|| format!("v{line}"));
                    if let Some(v) = &output_var {
                        defined.push(v.clone());
                    }
                    statements.push(Statement {
                        output_var,
                        module_name: module,
                        args,
                        line,
                    });
                    if let Some(text) = trailing {
                        comments.push(Comment { line, text });
                    }
                }
            }
        }
        Program {
            statements,
            comments,
            source_text: String::new(),
        }
    })
}
