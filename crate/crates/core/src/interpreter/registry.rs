use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::exec::{ExecContext, RuntimeError};
use super::syntax::{ArgValue, Program};
use super::value::Value;

/// What an argument accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgType {
    Text,
    Number,
    Bool,
    /// The current view or an instance image.
    Visual,
    /// A text label or an instance image.
    TextOrImage,
    Image,
    Detections,
    /// Something navigable: detections, a point or an exploration result.
    Target,
    /// Evidence of a find: a navigation or exploration result, detections
    /// or a boolean.
    Outcome,
    Any,
}

impl ArgType {
    pub fn accepts(self, v: &Value) -> bool {
        match self {
            ArgType::Text => matches!(v, Value::Text(_)),
            ArgType::Number => matches!(v, Value::Number(_)),
            ArgType::Bool => matches!(v, Value::Bool(_)),
            ArgType::Visual => matches!(v, Value::View | Value::Image(_)),
            ArgType::TextOrImage => matches!(v, Value::Text(_) | Value::Image(_)),
            ArgType::Image => matches!(v, Value::Image(_)),
            ArgType::Detections => matches!(v, Value::Detections { .. }),
            ArgType::Target => matches!(v, Value::Detections { .. } | Value::Point(_) | Value::Explore(_)),
            ArgType::Outcome => matches!(
                v,
                Value::Nav(_) | Value::Explore(_) | Value::Detections { .. } | Value::Bool(_)
            ),
            ArgType::Any => true,
        }
    }

    /// Whether a literal of this kind could ever be accepted.
    fn accepts_literal(self, lit: &ArgValue) -> bool {
        match lit {
            ArgValue::Var(_) => true,
            ArgValue::Text(t) => self.accepts(&Value::Text(t.clone())),
            ArgValue::Number(n) => self.accepts(&Value::Number(*n)),
            ArgValue::Bool(b) => self.accepts(&Value::Bool(*b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub name: String,
    pub ty: ArgType,
    pub required: bool,
}

impl ArgSpec {
    pub fn required(name: &str, ty: ArgType) -> Self {
        Self {
            name: name.into(),
            ty,
            required: true,
        }
    }

    pub fn optional(name: &str, ty: ArgType) -> Self {
        Self {
            name: name.into(),
            ty,
            required: false,
        }
    }
}

pub type Signature = Vec<ArgSpec>;

/// Resolved arguments of one call.
pub type Args = HashMap<String, Value>;

pub type Handler = fn(&mut ExecContext<'_>, &Args) -> Result<Value, RuntimeError>;

#[derive(Clone)]
pub struct Module {
    pub name: String,
    pub description: String,
    pub signature: Signature,
    pub handler: Handler,
}

impl std::fmt::Debug for Module {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Module")
            .field("name", &self.name)
            .field("signature", &self.signature)
            .finish()
    }
}

impl Module {
    /// `name(arg, arg=?)` rendering used in prompts and error messages.
    pub fn usage(&self) -> String {
        let args: Vec<String> = self
            .signature
            .iter()
            .map(|a| {
                if a.required {
                    a.name.clone()
                } else {
                    format!("{}?", a.name)
                }
            })
            .collect();
        format!("{}({})", self.name, args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("module {0:?} is already registered")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct CheckError {
    pub line: usize,
    pub message: String,
}

/// Named modules available to programs, in registration order.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    modules: Vec<Module>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_module(
        &mut self,
        name: &str,
        description: &str,
        signature: Signature,
        handler: Handler,
    ) -> Result<(), RegistryError> {
        if self.get(name).is_some() {
            return Err(RegistryError::Duplicate(name.into()));
        }
        self.modules.push(Module {
            name: name.into(),
            description: description.into(),
            signature,
            handler,
        });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn modules(&self) -> &[Module] {
        &self.modules
    }

    /// Checks every call against the registry: module known, argument names
    /// valid, required arguments present, literal types acceptable.
    pub fn check(&self, program: &Program) -> Result<(), Vec<CheckError>> {
        let mut errors = Vec::new();
        for s in &program.statements {
            let mut err = |message: String| errors.push(CheckError { line: s.line, message });
            let Some(m) = self.get(&s.module_name) else {
                err(format!("unknown module {:?}", s.module_name));
                continue;
            };
            for a in &s.args {
                match m.signature.iter().find(|spec| spec.name == a.name) {
                    None => err(format!("{} has no argument {:?}; usage: {}", m.name, a.name, m.usage())),
                    Some(spec) if !spec.ty.accepts_literal(&a.value) => err(format!(
                        "argument {:?} of {} cannot be a literal {:?}",
                        a.name, m.name, a.value
                    )),
                    Some(_) => {}
                }
            }
            for spec in m.signature.iter().filter(|spec| spec.required) {
                if s.arg(&spec.name).is_none() {
                    err(format!(
                        "{} is missing argument {:?}; usage: {}",
                        m.name,
                        spec.name,
                        m.usage()
                    ));
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}
