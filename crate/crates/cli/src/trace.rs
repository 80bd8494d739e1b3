use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use compnav_core::harness::{read_results_csv, FailureCategory};
use compnav_core::interpreter::{Terminal, Trace, TraceRecord};

use crate::{CliError, TraceArgs};

type Row = BTreeMap<String, String>;

fn load(path: &Path) -> Result<Trace, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    Trace::from_jsonl(&text).map_err(|source| CliError::Trace {
        path: path.to_path_buf(),
        source,
    })
}

fn rows(dir: &Path) -> Result<Vec<Row>, CliError> {
    read_results_csv(&dir.join("results.csv")).map_err(CliError::from)
}

fn render_record(r: &TraceRecord, out: &mut String) {
    let call: Vec<String> = r.inputs.iter().map(|(k, v)| format!("{k}={}", v.summary())).collect();
    let target = r.output_var.as_ref().map(|v| format!("{v} = ")).unwrap_or_default();
    let _ = writeln!(out, "[line {}] {target}{}({})", r.line, r.module, call.join(", "));
    let _ = writeln!(out, "    steps  {}", r.steps);
    match &r.error {
        Some(e) => {
            let _ = writeln!(out, "    error  {e}");
        }
        None => {
            let _ = writeln!(out, "    output {}", r.summary);
        }
    }
    if let Some(m) = &r.maps {
        let _ = writeln!(out, "    maps   {m}");
    }
}

fn render_terminal(trace: &Trace, out: &mut String) {
    let text = match &trace.terminal {
        None => "terminal: missing (trace was cut short)".to_string(),
        Some(Terminal::Completed) => "terminal: completed".to_string(),
        Some(Terminal::BudgetExhausted { line }) => format!("terminal: budget exhausted at line {line}"),
        Some(Terminal::RuntimeError { line, kind, message }) => {
            format!("terminal: runtime error at line {line} ({kind:?}): {message}")
        }
    };
    let _ = writeln!(out, "{text}");
    if let Some(a) = &trace.answer {
        let _ = writeln!(out, "answer: {}", a.summary());
    }
}

fn render_outcome(row: &Row, out: &mut String) {
    if row.get("success").is_some_and(|s| s == "true") {
        let _ = writeln!(out, "episode succeeded");
        return;
    }
    let failure = row.get("failure").map(String::as_str).unwrap_or_default();
    match FailureCategory::ALL.into_iter().find(|c| c.as_str() == failure) {
        Some(c) => {
            let _ = writeln!(out, "failure: {c} ({})", c.rule());
        }
        None => {
            let error = row.get("error").map(String::as_str).unwrap_or_default();
            let _ = writeln!(out, "failure: unclassified {error}");
        }
    }
}

/// Renders one trace; `row` is its episode's results row when known.
pub fn render(trace: &Trace, row: Option<&Row>, args: &TraceArgs) -> String {
    let mut out = String::new();
    for r in &trace.records {
        if args.module.as_ref().is_some_and(|m| *m != r.module) {
            continue;
        }
        render_record(r, &mut out);
    }
    render_terminal(trace, &mut out);
    if let Some(row) = row {
        render_outcome(row, &mut out);
    }
    out
}

fn failed(row: &Row) -> bool {
    row.get("success").is_none_or(|s| s != "true")
}

/// The run directory holding `file` and the results row naming it.
fn owning_row(file: &Path) -> Result<Option<Row>, CliError> {
    let (Some(dir), Some(name)) = (file.parent().and_then(Path::parent), file.file_name()) else {
        return Ok(None);
    };
    if !dir.join("results.csv").exists() {
        return Ok(None);
    }
    let rel = format!("traces/{}", name.to_string_lossy());
    Ok(rows(dir)?
        .into_iter()
        .find(|row| row.get("traces").is_some_and(|t| t.split(';').any(|p| p == rel))))
}

/// Writes to stdout. Returns false once the reader has gone away, as when
/// piping into `head`.
fn emit(text: &str) -> Result<bool, CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(true),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(false),
        Err(e) => Err(CliError::io("<stdout>")(e)),
    }
}

pub fn show(args: &TraceArgs) -> Result<(), CliError> {
    if args.path.is_dir() {
        return show_run(&args.path, args);
    }
    let trace = load(&args.path)?;
    let row = owning_row(&args.path)?;
    if args.failures_only && row.as_ref().is_some_and(|r| !failed(r)) {
        emit("episode succeeded; nothing to show\n")?;
        return Ok(());
    }
    emit(&render(&trace, row.as_ref(), args))?;
    Ok(())
}

fn show_run(dir: &Path, args: &TraceArgs) -> Result<(), CliError> {
    let mut shown = 0;
    for row in rows(dir)? {
        if args.failures_only && !failed(&row) {
            continue;
        }
        let get = |k: &str| row.get(k).map(String::as_str).unwrap_or_default();
        let mut out = format!(
            "== episode {} ({}, scene {})\n",
            get("index"),
            get("task"),
            get("scene")
        );
        let mut names: Vec<&str> = get("traces").split(';').filter(|t| !t.is_empty()).collect();
        if args.failures_only && !get("failed_goal").is_empty() {
            let failed_goal = format!("_g{:0>2}.jsonl", get("failed_goal"));
            names.retain(|n| n.ends_with(&failed_goal));
        }
        if names.is_empty() {
            render_outcome(&row, &mut out);
        }
        for (i, name) in names.iter().enumerate() {
            let file = dir.join(name);
            let _ = writeln!(out, "-- {}", file.display());
            let trace = load(&file)?;
            // The outcome belongs to the episode; print it once, after its last goal.
            let last = i + 1 == names.len();
            out.push_str(&render(&trace, last.then_some(&row), args));
        }
        if !emit(&out)? {
            return Ok(());
        }
        shown += 1;
    }
    if shown == 0 {
        emit("no matching episodes\n")?;
    }
    Ok(())
}
