//! Turns tasks into programs: prompt assembly from in-context examples, a
//! remote chat-completions backend, a deterministic rule-based stub and a
//! response cache.

mod cache;
#[cfg(feature = "http")]
pub mod endpoint;
mod prompt;
mod stub;
mod task;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::ResponseCache;
pub use prompt::{
    build_prompt, build_prompt_with, bundled_examples, default_examples, extract_program, load_examples,
    BundledExample, InContextExample,
};
pub use stub::{stub_plan, FaultMode};
pub use task::Task;

use crate::interpreter::{parse_program, Program, Registry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no planning rule for {0:?}")]
    Unrecognized(String),
    #[error("the prompt needs at least one in-context example")]
    NoExamples,
    #[error("in-context example {index} is invalid: {message}")]
    BadExample { index: usize, message: String },
    #[error("planner configuration: {0}")]
    Config(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("response did not contain a valid program: {0}")]
    Unparseable(String),
}

/// A text-completion service.
pub trait Completion: Send + Sync {
    fn model(&self) -> &str;
    /// Returns the reply text and provider metadata.
    fn complete(&self, prompt: &str) -> Result<(String, serde_json::Value), PlanError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerResponse {
    /// Full reply text; for the stub, the program itself.
    pub raw: String,
    pub program_text: String,
    pub metadata: serde_json::Value,
    pub cached: bool,
}

pub enum Backend {
    Stub(FaultMode),
    Remote(Box<dyn Completion>),
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Stub(fault) => f.debug_tuple("Stub").field(fault).finish(),
            Backend::Remote(c) => f.debug_tuple("Remote").field(&c.model()).finish(),
        }
    }
}

const RETRY_SUFFIX: &str = "\nOutput only the program, with no other text.\n";

#[derive(Debug)]
pub struct Planner {
    backend: Backend,
    examples: Vec<InContextExample>,
    cache: Option<ResponseCache>,
    registry: Registry,
}

impl Planner {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            examples: default_examples(),
            cache: None,
            registry: Registry::standard(),
        }
    }

    pub fn stub(fault: FaultMode) -> Self {
        Self::new(Backend::Stub(fault))
    }

    pub fn with_examples(mut self, examples: Vec<InContextExample>) -> Self {
        self.examples = examples;
        self
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    fn validate(&self, text: &str) -> Result<Program, String> {
        let program = parse_program(text).map_err(|e| e.to_string())?;
        self.registry
            .check(&program)
            .map_err(|errs| errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))?;
        Ok(program)
    }

    fn ask(&self, remote: &dyn Completion, prompt: &str) -> Result<(String, serde_json::Value, bool), PlanError> {
        if let Some(raw) = self.cache.as_ref().and_then(|c| c.get(remote.model(), prompt)) {
            return Ok((raw, serde_json::Value::Null, true));
        }
        let (raw, meta) = remote.complete(prompt)?;
        if let Some(c) = &self.cache {
            if let Err(e) = c.put(remote.model(), prompt, &raw) {
                log::warn!("could not write planner cache entry: {e}");
            }
        }
        Ok((raw, meta, false))
    }

    /// Plans one task. `seed` varies injected stub faults between episodes
    /// and is ignored by remote backends. Remote replies that do not yield a
    /// valid program are retried once with an explicit "program only"
    /// instruction.
    pub fn plan(&self, task: &Task, seed: u64) -> Result<(Program, PlannerResponse), PlanError> {
        match &self.backend {
            Backend::Stub(fault) => {
                let fault = FaultMode::new(fault.probability, crate::rng::derive_seed(fault.seed, seed));
                let text = stub_plan(task, &fault)?;
                let program = self.validate(&text).map_err(PlanError::Unparseable)?;
                Ok((
                    program,
                    PlannerResponse {
                        raw: text.clone(),
                        program_text: text,
                        metadata: serde_json::json!({"backend": "stub"}),
                        cached: false,
                    },
                ))
            }
            Backend::Remote(remote) => {
                let prompt = build_prompt_with(&self.registry, &task.instruction(), &self.examples)?;
                let mut last_error = String::new();
                for attempt in [prompt.clone(), format!("{prompt}{RETRY_SUFFIX}")] {
                    let (raw, metadata, cached) = self.ask(remote.as_ref(), &attempt)?;
                    let Some(text) = extract_program(&raw) else {
                        last_error = "no program block in the reply".into();
                        continue;
                    };
                    match self.validate(&text) {
                        Ok(program) => {
                            return Ok((
                                program,
                                PlannerResponse {
                                    raw,
                                    program_text: text,
                                    metadata,
                                    cached,
                                },
                            ))
                        }
                        Err(e) => last_error = e,
                    }
                }
                Err(PlanError::Unparseable(last_error))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::GoalKind;
    use std::sync::Mutex;

    struct Scripted {
        replies: Mutex<Vec<String>>,
        prompts: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(replies: &[&str]) -> Self {
            Self {
                replies: Mutex::new(replies.iter().rev().map(|s| s.to_string()).collect()),
                prompts: Mutex::new(Vec::new()),
            }
        }
    }

    impl Completion for &'static Scripted {
        fn model(&self) -> &str {
            "scripted"
        }
        fn complete(&self, prompt: &str) -> Result<(String, serde_json::Value), PlanError> {
            self.prompts.lock().unwrap().push(prompt.to_string());
            let r = self.replies.lock().unwrap().pop().unwrap_or_default();
            Ok((r, serde_json::Value::Null))
        }
    }

    fn leak(s: Scripted) -> &'static Scripted {
        Box::leak(Box::new(s))
    }

    #[test]
    fn retries_once_with_program_only_instruction() {
        let s = leak(Scripted::new(&[
            "I think you should look around.",
            "seen = explore_scene(target='bed')",
        ]));
        let planner = Planner::new(Backend::Remote(Box::new(s)));
        let (program, resp) = planner.plan(&Task::new(GoalKind::Category, "bed"), 0).unwrap();
        assert_eq!(program.statements.len(), 1);
        assert!(!resp.cached);
        let prompts = s.prompts.lock().unwrap();
        assert_eq!(prompts.len(), 2);
        assert!(prompts[1].ends_with(RETRY_SUFFIX));
    }

    #[test]
    fn gives_up_after_one_retry() {
        let s = leak(Scripted::new(&[
            "nope",
            "x = bogus(a=1)",
            "seen = explore_scene(target='bed')",
        ]));
        let planner = Planner::new(Backend::Remote(Box::new(s)));
        assert!(matches!(
            planner.plan(&Task::new(GoalKind::Category, "bed"), 0),
            Err(PlanError::Unparseable(_))
        ));
        assert_eq!(s.prompts.lock().unwrap().len(), 2);
    }

    #[test]
    fn cache_hits_bypass_the_backend() {
        let dir = tempfile::tempdir().unwrap();
        let s = leak(Scripted::new(&["seen = explore_scene(target='bed')"]));
        let planner = Planner::new(Backend::Remote(Box::new(s))).with_cache(ResponseCache::new(dir.path()));
        let task = Task::new(GoalKind::Category, "bed");
        let (_, first) = planner.plan(&task, 0).unwrap();
        let (_, second) = planner.plan(&task, 0).unwrap();
        assert!(!first.cached);
        assert!(second.cached);
        assert_eq!(first.program_text, second.program_text);
        assert_eq!(s.prompts.lock().unwrap().len(), 1);
    }

    #[test]
    fn stub_is_deterministic() {
        let p = Planner::stub(FaultMode::new(0.5, 4));
        let t = Task::new(GoalKind::Category, "chair");
        assert_eq!(p.plan(&t, 1).unwrap().1, p.plan(&t, 1).unwrap().1);
    }
}
