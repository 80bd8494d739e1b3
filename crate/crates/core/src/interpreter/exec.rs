use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::registry::{Args, Registry};
use super::syntax::{ArgValue, Program};
use super::value::Value;
use crate::agent::{Agent, AgentError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    UnknownModule,
    UnknownArgument,
    MissingArgument,
    TypeMismatch,
    UndefinedVariable,
    InvalidValue,
    Eval,
    Perception,
    World,
    BudgetExhausted,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind:?}: {message}")]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub message: String,
}

impl RuntimeError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

impl From<AgentError> for RuntimeError {
    fn from(e: AgentError) -> Self {
        let kind = match e {
            AgentError::BudgetExhausted => ErrorKind::BudgetExhausted,
            AgentError::World(_) => ErrorKind::World,
            AgentError::Perception(_) => ErrorKind::Perception,
        };
        Self::new(kind, e.to_string())
    }
}

/// State shared by the handlers of one execution.
pub struct ExecContext<'a> {
    pub agent: &'a mut Agent,
    /// Variables bound so far.
    pub env: HashMap<String, Value>,
    /// Value passed to `return`, if any.
    pub answer: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub line: usize,
    pub module: String,
    pub output_var: Option<String>,
    pub inputs: Vec<(String, Value)>,
    pub output: Value,
    pub summary: String,
    pub steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Relative path of a map snapshot taken after this statement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<String>,
    /// Kept in memory only so that trace files are stable across runs.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Terminal {
    Completed,
    RuntimeError {
        line: usize,
        kind: ErrorKind,
        message: String,
    },
    BudgetExhausted {
        line: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub terminal: Option<Terminal>,
    pub answer: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TraceLine {
    Statement(TraceRecord),
    Terminal {
        terminal: Terminal,
        #[serde(default)]
        answer: Option<Value>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line} (byte offset {offset}): {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub offset: usize,
    pub message: String,
}

impl Trace {
    pub fn steps(&self) -> u64 {
        self.records.iter().map(|r| r.steps).sum()
    }

    /// One JSON object per line: statement records, then the terminal.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(&TraceLine::Statement(r.clone())).expect("trace serializes"));
            out.push('\n');
        }
        if let Some(t) = &self.terminal {
            let line = TraceLine::Terminal {
                terminal: t.clone(),
                answer: self.answer.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("trace serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceParseError> {
        let mut trace = Trace::default();
        let mut offset = 0;
        for (i, raw) in text.split_inclusive('\n').enumerate() {
            let line = raw.trim_end_matches(['\n', '\r']);
            if !line.trim().is_empty() {
                let parsed: TraceLine = serde_json::from_str(line).map_err(|e| TraceParseError {
                    line: i + 1,
                    offset: offset + e.column().saturating_sub(1),
                    message: e.to_string(),
                })?;
                if trace.terminal.is_some() {
                    return Err(TraceParseError {
                        line: i + 1,
                        offset,
                        message: "record after the terminal line".into(),
                    });
                }
                match parsed {
                    TraceLine::Statement(r) => trace.records.push(r),
                    TraceLine::Terminal { terminal, answer } => {
                        trace.terminal = Some(terminal);
                        trace.answer = answer;
                    }
                }
            }
            offset += raw.len();
        }
        Ok(trace)
    }
}

/// Statement wall time. wasm32 has no std clock, so there it reads zero.
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    started: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            started: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.started.elapsed();
        #[cfg(target_arch = "wasm32")]
        Duration::ZERO
    }
}

/// The `goal` builtin for the agent's active goal.
pub fn goal_value(agent: &Agent) -> Value {
    let goal = agent.world().current_goal();
    if agent.goal_is_image() {
        Value::Image(goal.payload.clone())
    } else {
        Value::Text(goal.payload.clone())
    }
}

fn resolve(
    registry: &Registry,
    env: &HashMap<String, Value>,
    stmt: &super::syntax::Statement,
) -> Result<(Vec<(String, Value)>, Args), RuntimeError> {
    let module = registry.get(&stmt.module_name).ok_or_else(|| {
        RuntimeError::new(
            ErrorKind::UnknownModule,
            format!("unknown module {:?}", stmt.module_name),
        )
    })?;
    let mut inputs = Vec::with_capacity(stmt.args.len());
    let mut args = Args::new();
    for a in &stmt.args {
        let spec = module.signature.iter().find(|s| s.name == a.name).ok_or_else(|| {
            RuntimeError::new(
                ErrorKind::UnknownArgument,
                format!(
                    "{} has no argument {:?}; usage: {}",
                    module.name,
                    a.name,
                    module.usage()
                ),
            )
        })?;
        let v = match &a.value {
            ArgValue::Text(t) => Value::Text(t.clone()),
            ArgValue::Number(n) => Value::Number(*n),
            ArgValue::Bool(b) => Value::Bool(*b),
            ArgValue::Var(name) => env.get(name).cloned().ok_or_else(|| {
                RuntimeError::new(ErrorKind::UndefinedVariable, format!("variable {name:?} is not bound"))
            })?,
        };
        if !spec.ty.accepts(&v) {
            return Err(RuntimeError::new(
                ErrorKind::TypeMismatch,
                format!(
                    "argument {:?} of {} expects {:?}, got {}",
                    a.name,
                    module.name,
                    spec.ty,
                    v.type_name()
                ),
            ));
        }
        inputs.push((a.name.clone(), v.clone()));
        args.insert(a.name.clone(), v);
    }
    for spec in module.signature.iter().filter(|s| s.required) {
        if !args.contains_key(&spec.name) {
            return Err(RuntimeError::new(
                ErrorKind::MissingArgument,
                format!(
                    "{} is missing argument {:?}; usage: {}",
                    module.name,
                    spec.name,
                    module.usage()
                ),
            ));
        }
    }
    Ok((inputs, args))
}

/// Runs `program` statement by statement against `agent`. Errors never
/// escape: they end the run and are recorded as the trace terminal.
pub fn execute(program: &Program, agent: &mut Agent, registry: &Registry) -> Trace {
    let mut env: HashMap<String, Value> = HashMap::new();
    env.insert("obs".into(), Value::View);
    env.insert("goal".into(), goal_value(agent));
    let mut ctx = ExecContext {
        agent,
        env,
        answer: None,
    };
    let mut trace = Trace::default();
    for stmt in &program.statements {
        let before = ctx.agent.steps_taken();
        let started = Stopwatch::start();
        let mut inputs = Vec::new();
        let result = resolve(registry, &ctx.env, stmt).and_then(|(ins, args)| {
            inputs = ins;
            let handler = registry.get(&stmt.module_name).expect("resolved above").handler;
            catch_unwind(AssertUnwindSafe(|| handler(&mut ctx, &args))).unwrap_or_else(|panic| {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "handler panicked".into());
                Err(RuntimeError::new(ErrorKind::Internal, msg))
            })
        });
        let steps = ctx.agent.steps_taken() - before;
        let wall_time = started.elapsed();
        match result {
            Ok(value) => {
                trace.records.push(TraceRecord {
                    line: stmt.line,
                    module: stmt.module_name.clone(),
                    output_var: stmt.output_var.clone(),
                    inputs,
                    summary: value.summary(),
                    output: value.clone(),
                    steps,
                    error: None,
                    maps: None,
                    wall_time,
                });
                if let Some(var) = &stmt.output_var {
                    ctx.env.insert(var.clone(), value);
                }
            }
            Err(e) => {
                trace.records.push(TraceRecord {
                    line: stmt.line,
                    module: stmt.module_name.clone(),
                    output_var: stmt.output_var.clone(),
                    inputs,
                    output: Value::None,
                    summary: format!("error: {}", e.message),
                    steps,
                    error: Some(e.message.clone()),
                    maps: None,
                    wall_time,
                });
                trace.terminal = Some(match e.kind {
                    ErrorKind::BudgetExhausted => Terminal::BudgetExhausted { line: stmt.line },
                    kind => Terminal::RuntimeError {
                        line: stmt.line,
                        kind,
                        message: e.message,
                    },
                });
                trace.answer = ctx.answer;
                return trace;
            }
        }
    }
    trace.terminal = Some(Terminal::Completed);
    trace.answer = ctx.answer;
    trace
}
