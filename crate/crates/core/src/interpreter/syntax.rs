//! Program text: statements of the form `OUT = NAME(key=value, ...)`, one
//! per line, with `#` comments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Variables every program may use without defining them.
pub const BUILTIN_VARS: [&str; 2] = ["obs", "goal"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum ArgValue {
    Text(String),
    Number(f64),
    Bool(bool),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arg {
    pub name: String,
    pub value: ArgValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub output_var: Option<String>,
    pub module_name: String,
    pub args: Vec<Arg>,
    /// 1-based source line.
    pub line: usize,
}

impl Statement {
    pub fn arg(&self, name: &str) -> Option<&ArgValue> {
        self.args.iter().find(|a| a.name == name).map(|a| &a.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub statements: Vec<Statement>,
    pub comments: Vec<Comment>,
    pub source_text: String,
}

impl Program {
    /// True when statements and comments agree, ignoring the source text.
    pub fn same_structure(&self, other: &Program) -> bool {
        self.statements == other.statements && self.comments == other.comments
    }

    /// Every text argument named `name`, in statement order.
    pub fn text_args(&self, name: &str) -> Vec<&str> {
        self.statements
            .iter()
            .filter_map(|s| match s.arg(name) {
                Some(ArgValue::Text(t)) => Some(t.as_str()),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("missing '=' {0}")]
    MissingEquals(String),
    #[error("duplicate argument {0:?}")]
    DuplicateArg(String),
    #[error("unterminated string")]
    UnterminatedString,
    #[error("variable {0:?} is used before it is defined")]
    Undefined(String),
    #[error("variable {0:?} is assigned more than once")]
    DuplicateOutput(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    /// 1-based character column.
    pub column: usize,
    pub kind: ParseErrorKind,
}

/// Every error found in a program, in line order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// One parsed source line.
#[derive(Debug, Clone, PartialEq)]
pub enum Line {
    Blank,
    Comment(String),
    Statement(Statement, Option<String>),
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        self.err_at(self.pos, kind)
    }

    fn err_at(&self, pos: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column: pos + 1,
            kind,
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(c) => format!("{c:?}"),
            None => "end of line".into(),
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.pos += 1,
            _ => return None,
        }
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        Some(self.chars[start..self.pos].iter().collect())
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        self.ident().ok_or_else(|| {
            self.err(ParseErrorKind::Syntax(format!(
                "expected {what}, found {}",
                self.found()
            )))
        })
    }

    fn string(&mut self, quote: char) -> Result<String, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err(self.err_at(start, ParseErrorKind::UnterminatedString)),
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some('\\') => {
                    self.pos += 1;
                    let esc = self
                        .peek()
                        .ok_or_else(|| self.err_at(start, ParseErrorKind::UnterminatedString))?;
                    out.push(match esc {
                        'n' => '\n',
                        't' => '\t',
                        '\\' | '\'' | '"' => esc,
                        other => return Err(self.err(ParseErrorKind::Syntax(format!("unknown escape \\{other}")))),
                    });
                    self.pos += 1;
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        if self.peek() == Some('-') {
            self.pos += 1;
        }
        let digits = |c: &mut Self| {
            let s = c.pos;
            while c.peek().is_some_and(|ch| ch.is_ascii_digit()) {
                c.pos += 1;
            }
            c.pos > s
        };
        if !digits(self) {
            return Err(self.err(ParseErrorKind::Syntax(format!(
                "expected digits, found {}",
                self.found()
            ))));
        }
        if self.peek() == Some('.') {
            self.pos += 1;
            if !digits(self) {
                return Err(self.err(ParseErrorKind::Syntax(format!(
                    "expected digits after '.', found {}",
                    self.found()
                ))));
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse()
            .map_err(|_| self.err_at(start, ParseErrorKind::Syntax(format!("bad number {text:?}"))))
    }

    fn value(&mut self) -> Result<ArgValue, ParseError> {
        match self.peek() {
            Some(q @ ('\'' | '"')) => self.string(q).map(ArgValue::Text),
            Some(c) if c == '-' || c.is_ascii_digit() => self.number().map(ArgValue::Number),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let id = self.ident().expect("starts with a letter");
                Ok(match id.as_str() {
                    "true" | "True" => ArgValue::Bool(true),
                    "false" | "False" => ArgValue::Bool(false),
                    _ => ArgValue::Var(id),
                })
            }
            _ => Err(self.err(ParseErrorKind::Syntax(format!(
                "expected a value, found {}",
                self.found()
            )))),
        }
    }

    /// Consumes an optional trailing comment; anything else is an error.
    fn rest(&mut self) -> Result<Option<String>, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Ok(None),
            Some('#') => {
                let text: String = self.chars[self.pos + 1..].iter().collect();
                self.pos = self.chars.len();
                Ok(Some(text.trim().to_string()))
            }
            Some(_) => Err(self.err(ParseErrorKind::Syntax(format!(
                "unexpected {} after statement",
                self.found()
            )))),
        }
    }
}

/// Parses one line. `line` is the 1-based line number used in the result.
pub fn parse_line(text: &str, line: usize) -> Result<Line, ParseError> {
    let mut c = Cursor::new(text, line);
    c.skip_ws();
    match c.peek() {
        None => return Ok(Line::Blank),
        Some('#') => return Ok(Line::Comment(c.rest()?.unwrap_or_default())),
        _ => {}
    }
    let first = c.expect_ident("a variable or module name")?;
    c.skip_ws();
    let (output_var, module_name) = match c.peek() {
        Some('=') => {
            c.pos += 1;
            c.skip_ws();
            (Some(first), c.expect_ident("a module name")?)
        }
        Some('(') => (None, first),
        _ => {
            return Err(c.err(ParseErrorKind::MissingEquals(format!(
                "after {first:?}, found {}",
                c.found()
            ))))
        }
    };
    c.skip_ws();
    if c.peek() != Some('(') {
        return Err(c.err(ParseErrorKind::Syntax(format!("expected '(', found {}", c.found()))));
    }
    c.pos += 1;
    let mut args: Vec<Arg> = Vec::new();
    let mut seen = BTreeSet::new();
    loop {
        c.skip_ws();
        if c.peek() == Some(')') {
            c.pos += 1;
            break;
        }
        let name_pos = c.pos;
        let name = c.expect_ident("an argument name")?;
        c.skip_ws();
        if c.peek() != Some('=') {
            return Err(c.err(ParseErrorKind::MissingEquals(format!(
                "after argument {name:?}, found {}",
                c.found()
            ))));
        }
        c.pos += 1;
        c.skip_ws();
        let value = c.value()?;
        if !seen.insert(name.clone()) {
            return Err(c.err_at(name_pos, ParseErrorKind::DuplicateArg(name)));
        }
        args.push(Arg { name, value });
        c.skip_ws();
        match c.peek() {
            Some(',') => c.pos += 1,
            Some(')') => {}
            _ => {
                return Err(c.err(ParseErrorKind::Syntax(format!(
                    "expected ',' or ')', found {}",
                    c.found()
                ))))
            }
        }
    }
    let trailing = c.rest()?;
    Ok(Line::Statement(
        Statement {
            output_var,
            module_name,
            args,
            line,
        },
        trailing,
    ))
}

/// Parses a whole program, reporting every error, and checks that each
/// variable is defined before use and assigned only once.
pub fn parse_program(text: &str) -> Result<Program, ParseErrors> {
    let mut statements = Vec::new();
    let mut comments = Vec::new();
    let mut errors = Vec::new();
    let mut defined: BTreeMap<String, usize> = BUILTIN_VARS.iter().map(|v| (v.to_string(), 0)).collect();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        match parse_line(raw, line) {
            Ok(Line::Blank) => {}
            Ok(Line::Comment(t)) => comments.push(Comment { line, text: t }),
            Ok(Line::Statement(stmt, trailing)) => {
                for arg in &stmt.args {
                    if let ArgValue::Var(v) = &arg.value {
                        if !defined.contains_key(v) {
                            errors.push(ParseError {
                                line,
                                column: column_of(raw, &arg.name),
                                kind: ParseErrorKind::Undefined(v.clone()),
                            });
                        }
                    }
                }
                if let Some(out) = &stmt.output_var {
                    if defined.contains_key(out) {
                        errors.push(ParseError {
                            line,
                            column: column_of(raw, out),
                            kind: ParseErrorKind::DuplicateOutput(out.clone()),
                        });
                    } else {
                        defined.insert(out.clone(), line);
                    }
                }
                if let Some(t) = trailing {
                    comments.push(Comment { line, text: t });
                }
                statements.push(stmt);
            }
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(Program {
            statements,
            comments,
            source_text: text.to_string(),
        })
    } else {
        Err(ParseErrors(errors))
    }
}

fn column_of(raw: &str, needle: &str) -> usize {
    raw.find(needle).map(|b| raw[..b].chars().count() + 1).unwrap_or(1)
}

/// A text literal in program syntax, quoted and escaped.
pub fn quote(text: &str) -> String {
    let mut out = String::new();
    write_value(&mut out, &ArgValue::Text(text.to_string()));
    out
}

fn write_value(out: &mut String, v: &ArgValue) {
    match v {
        ArgValue::Text(t) => {
            out.push('\'');
            for ch in t.chars() {
                match ch {
                    '\\' => out.push_str("\\\\"),
                    '\'' => out.push_str("\\'"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('\'');
        }
        ArgValue::Number(n) => {
            let _ = write!(out, "{n}");
        }
        ArgValue::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        ArgValue::Var(v) => out.push_str(v),
    }
}

/// Canonical text for one statement.
pub fn format_statement(s: &Statement) -> String {
    let mut out = String::new();
    if let Some(o) = &s.output_var {
        out.push_str(o);
        out.push_str(" = ");
    }
    out.push_str(&s.module_name);
    out.push('(');
    for (i, a) in s.args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&a.name);
        out.push('=');
        write_value(&mut out, &a.value);
    }
    out.push(')');
    out
}

/// Canonical program text. Statements and comments keep their line numbers,
/// so parsing the output reproduces the same structure.
pub fn pretty_print(p: &Program) -> String {
    let last = p
        .statements
        .iter()
        .map(|s| s.line)
        .chain(p.comments.iter().map(|c| c.line))
        .max()
        .unwrap_or(0);
    let mut lines = vec![String::new(); last];
    for s in &p.statements {
        lines[s.line - 1] = format_statement(s);
    }
    for c in &p.comments {
        let slot = &mut lines[c.line - 1];
        let comment = if c.text.is_empty() {
            "#".to_string()
        } else {
            format!("# {}", c.text)
        };
        if slot.is_empty() {
            *slot = comment;
        } else {
            slot.push_str("  ");
            slot.push_str(&comment);
        }
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_detect_statement() {
        let Line::Statement(s, None) = parse_line("boxes = detect(image=obs, query='gas boiler')", 1).unwrap() else {
            panic!()
        };
        assert_eq!(s.output_var.as_deref(), Some("boxes"));
        assert_eq!(s.module_name, "detect");
        assert_eq!(
            s.args,
            vec![
                Arg {
                    name: "image".into(),
                    value: ArgValue::Var("obs".into())
                },
                Arg {
                    name: "query".into(),
                    value: ArgValue::Text("gas boiler".into())
                },
            ]
        );
    }

    #[test]
    fn comment_and_blank_lines() {
        assert_eq!(
            parse_line("# reach the kitchen first", 4).unwrap(),
            Line::Comment("reach the kitchen first".into())
        );
        assert_eq!(parse_line("   ", 1).unwrap(), Line::Blank);
    }

    #[test]
    fn syntax_error_points_at_the_paren() {
        let e = parse_line("x = (bad", 7).unwrap_err();
        assert_eq!((e.line, e.column), (7, 5));
    }

    #[test]
    fn duplicate_argument_and_missing_equals() {
        let e = parse_line("x = f(a=1, a=2)", 1).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateArg("a".into()));
        assert_eq!(e.column, 12);
        assert!(matches!(
            parse_line("x = f(a 1)", 1).unwrap_err().kind,
            ParseErrorKind::MissingEquals(_)
        ));
        assert!(matches!(
            parse_line("x f(a=1)", 1).unwrap_err().kind,
            ParseErrorKind::MissingEquals(_)
        ));
    }

    #[test]
    fn literals() {
        let Line::Statement(s, Some(c)) =
            parse_line(r#"r = f(a=-1.5, b="it's", c=True, d='a\'b', e=3)  # note"#, 1).unwrap()
        else {
            panic!()
        };
        assert_eq!(c, "note");
        let vals: Vec<_> = s.args.iter().map(|a| a.value.clone()).collect();
        assert_eq!(
            vals,
            vec![
                ArgValue::Number(-1.5),
                ArgValue::Text("it's".into()),
                ArgValue::Bool(true),
                ArgValue::Text("a'b".into()),
                ArgValue::Number(3.0)
            ]
        );
        assert!(parse_line("x = f(a=1.)", 1).is_err());
        assert!(matches!(
            parse_line("x = f(a='open", 1).unwrap_err().kind,
            ParseErrorKind::UnterminatedString
        ));
    }

    #[test]
    fn program_checks() {
        let ok = "a = f(x=obs)\n# c\nb = g(y=a)\nreturn(value=b)\n";
        assert_eq!(parse_program(ok).unwrap().statements.len(), 3);
        let errs = parse_program("a = f(x=boxes2)\na = g()\nb = (\n").unwrap_err().0;
        assert_eq!(errs.len(), 3);
        assert_eq!(errs[0].kind, ParseErrorKind::Undefined("boxes2".into()));
        assert_eq!(errs[1].kind, ParseErrorKind::DuplicateOutput("a".into()));
        assert_eq!(errs[2].line, 3);
    }

    #[test]
    fn pretty_print_round_trips() {
        let src = "  a=f( x = obs ,y='q' )   # first\n\n# middle\nb = g(n=2.50, t=false)\n";
        let p = parse_program(src).unwrap();
        let printed = pretty_print(&p);
        assert_eq!(
            printed,
            "a = f(x=obs, y='q')  # first\n\n# middle\nb = g(n=2.5, t=false)\n"
        );
        assert!(parse_program(&printed).unwrap().same_structure(&p));
    }
}
