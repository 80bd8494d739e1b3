//! Straight-line navigation programs: parsing, a module registry and an
//! executor that records a per-statement trace.

mod builtins;
mod exec;
pub mod expr;
mod registry;
mod syntax;
mod value;

pub use exec::{
    execute, goal_value, ErrorKind, ExecContext, RuntimeError, Terminal, Trace, TraceParseError, TraceRecord,
};
pub use registry::{ArgSpec, ArgType, Args, CheckError, Handler, Module, Registry, RegistryError, Signature};
pub use syntax::{
    format_statement, parse_line, parse_program, pretty_print, quote, Arg, ArgValue, Comment, Line, ParseError,
    ParseErrorKind, ParseErrors, Program, Statement, BUILTIN_VARS,
};
pub use value::Value;
