//! The expression language behind the `eval` module: numbers, quoted text,
//! booleans, variables, arithmetic, comparisons and `and`/`or`/`not`.
//! Nothing is evaluated by the host language.

use std::collections::HashMap;

use thiserror::Error;

use super::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unexpected character {0:?} at offset {1}")]
    BadChar(char, usize),
    #[error("unexpected {0} at offset {1}")]
    Unexpected(String, usize),
    #[error("unknown variable {0:?}")]
    Unknown(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse()
                .map_err(|_| ExprError::Unexpected(format!("number {text:?}"), start))?;
            out.push((Tok::Num(n), start));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
            continue;
        }
        if c == '\'' || c == '"' {
            i += 1;
            let mut s = String::new();
            while i < chars.len() && chars[i] != c {
                s.push(chars[i]);
                i += 1;
            }
            if i == chars.len() {
                return Err(ExprError::Unexpected("end of input inside text".into(), start));
            }
            i += 1;
            out.push((Tok::Str(s), start));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let op = match two.as_str() {
            "==" => Some("=="),
            "!=" => Some("!="),
            "<=" => Some("<="),
            ">=" => Some(">="),
            _ => None,
        };
        if let Some(op) = op {
            out.push((Tok::Op(op), start));
            i += 2;
            continue;
        }
        let tok = match c {
            '<' => Tok::Op("<"),
            '>' => Tok::Op(">"),
            '+' => Tok::Op("+"),
            '-' => Tok::Op("-"),
            '*' => Tok::Op("*"),
            '/' => Tok::Op("/"),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => return Err(ExprError::BadChar(other, start)),
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Lit {
    Num(f64),
    Str(String),
    Bool(bool),
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a HashMap<String, Value>,
    len: usize,
}

fn binding_power(op: &str) -> (u8, u8) {
    match op {
        "or" => (1, 2),
        "and" => (3, 4),
        "==" | "!=" | "<" | "<=" | ">" | ">=" => (5, 6),
        "+" | "-" => (7, 8),
        "*" | "/" => (9, 10),
        _ => (0, 0),
    }
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<&'static str> {
        match self.toks.get(self.pos) {
            Some((Tok::Op(o), _)) => Some(o),
            Some((Tok::Ident(w), _)) if w == "and" => Some("and"),
            Some((Tok::Ident(w), _)) if w == "or" => Some("or"),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.1)
    }

    fn unexpected(&self) -> ExprError {
        match self.toks.get(self.pos) {
            Some((t, at)) => ExprError::Unexpected(format!("{t:?}"), *at),
            None => ExprError::Unexpected("end of input".into(), self.len),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Lit, ExprError> {
        let mut lhs = self.prefix()?;
        while let Some(op) = self.peek_op() {
            let (l, r) = binding_power(op);
            if l < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(r)?;
            lhs = apply(op, lhs, rhs)?;
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Lit, ExprError> {
        let Some((tok, _)) = self.toks.get(self.pos).cloned() else {
            return Err(self.unexpected());
        };
        self.pos += 1;
        match tok {
            Tok::Num(n) => Ok(Lit::Num(n)),
            Tok::Str(s) => Ok(Lit::Str(s)),
            Tok::LParen => {
                let v = self.expr(0)?;
                match self.toks.get(self.pos) {
                    Some((Tok::RParen, _)) => {
                        self.pos += 1;
                        Ok(v)
                    }
                    _ => Err(self.unexpected()),
                }
            }
            Tok::Op("-") => match self.expr(11)? {
                Lit::Num(n) => Ok(Lit::Num(-n)),
                other => Err(ExprError::Type(format!("cannot negate {other:?}"))),
            },
            Tok::Ident(w) => match w.as_str() {
                "true" | "True" => Ok(Lit::Bool(true)),
                "false" | "False" => Ok(Lit::Bool(false)),
                "not" => match self.expr(5)? {
                    Lit::Bool(b) => Ok(Lit::Bool(!b)),
                    other => Err(ExprError::Type(format!("'not' needs a boolean, got {other:?}"))),
                },
                name => match self.vars.get(name) {
                    Some(Value::Number(n)) => Ok(Lit::Num(*n)),
                    Some(Value::Bool(b)) => Ok(Lit::Bool(*b)),
                    Some(Value::Text(t)) => Ok(Lit::Str(t.clone())),
                    Some(other) => Err(ExprError::Type(format!(
                        "variable {name:?} holds a {}, not a number, text or boolean",
                        other.type_name()
                    ))),
                    None => Err(ExprError::Unknown(name.to_string())),
                },
            },
            _ => {
                self.pos -= 1;
                Err(self.unexpected())
            }
        }
    }
}

fn apply(op: &str, a: Lit, b: Lit) -> Result<Lit, ExprError> {
    use Lit::*;
    Ok(match (op, a, b) {
        ("+", Num(x), Num(y)) => Num(x + y),
        ("-", Num(x), Num(y)) => Num(x - y),
        ("*", Num(x), Num(y)) => Num(x * y),
        ("/", Num(_), Num(0.0)) => return Err(ExprError::DivisionByZero),
        ("/", Num(x), Num(y)) => Num(x / y),
        ("and", Bool(x), Bool(y)) => Bool(x && y),
        ("or", Bool(x), Bool(y)) => Bool(x || y),
        ("==", x, y) => Bool(x == y),
        ("!=", x, y) => Bool(x != y),
        ("<", Num(x), Num(y)) => Bool(x < y),
        ("<=", Num(x), Num(y)) => Bool(x <= y),
        (">", Num(x), Num(y)) => Bool(x > y),
        (">=", Num(x), Num(y)) => Bool(x >= y),
        ("<", Str(x), Str(y)) => Bool(x < y),
        ("<=", Str(x), Str(y)) => Bool(x <= y),
        (">", Str(x), Str(y)) => Bool(x > y),
        (">=", Str(x), Str(y)) => Bool(x >= y),
        (op, x, y) => return Err(ExprError::Type(format!("cannot apply {op:?} to {x:?} and {y:?}"))),
    })
}

/// Evaluates `src` with variables from `vars`.
pub fn evaluate(src: &str, vars: &HashMap<String, Value>) -> Result<Value, ExprError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars,
        len: src.chars().count(),
    };
    let v = p.expr(0)?;
    if p.pos != p.toks.len() {
        return Err(ExprError::Unexpected(format!("{:?}", p.toks[p.pos].0), p.offset()));
    }
    Ok(match v {
        Lit::Num(n) => Value::Number(n),
        Lit::Str(s) => Value::Text(s),
        Lit::Bool(b) => Value::Bool(b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> HashMap<String, Value> {
        HashMap::from([
            ("n".to_string(), Value::Number(2.0)),
            ("score".to_string(), Value::Number(0.95)),
            ("kind".to_string(), Value::Text("armchair".into())),
            ("ok".to_string(), Value::Bool(true)),
            ("view".to_string(), Value::View),
        ])
    }

    #[test]
    fn comparisons_and_logic() {
        let v = vars();
        assert_eq!(evaluate("n > 0", &v).unwrap(), Value::Bool(true));
        assert_eq!(
            evaluate("score > 0.9 and kind == 'armchair'", &v).unwrap(),
            Value::Bool(true)
        );
        assert_eq!(evaluate("not ok or n >= 3", &v).unwrap(), Value::Bool(false));
        assert_eq!(evaluate("(n + 1) * 2 - 6 / 3", &v).unwrap(), Value::Number(4.0));
        assert_eq!(evaluate("-n + 1", &v).unwrap(), Value::Number(-1.0));
    }

    #[test]
    fn precedence() {
        let v = HashMap::new();
        assert_eq!(evaluate("1 + 2 * 3", &v).unwrap(), Value::Number(7.0));
        assert_eq!(evaluate("1 < 2 and 3 < 2 or true", &v).unwrap(), Value::Bool(true));
        assert_eq!(evaluate("not 1 < 2", &v).unwrap(), Value::Bool(false));
    }

    #[test]
    fn errors() {
        let v = vars();
        assert_eq!(evaluate("missing > 1", &v), Err(ExprError::Unknown("missing".into())));
        assert!(matches!(evaluate("view == 1", &v), Err(ExprError::Type(_))));
        assert!(matches!(evaluate("n +", &v), Err(ExprError::Unexpected(..))));
        assert!(matches!(evaluate("n ; 1", &v), Err(ExprError::BadChar(';', 2))));
        assert_eq!(evaluate("1 / 0", &v), Err(ExprError::DivisionByZero));
        assert!(matches!(evaluate("ok + 1", &v), Err(ExprError::Type(_))));
        assert!(matches!(evaluate("1 2", &v), Err(ExprError::Unexpected(..))));
    }
}
