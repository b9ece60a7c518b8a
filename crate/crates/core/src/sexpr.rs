//! Minimal s-expression reader and writer used by the proof and model file
//! formats. Atoms are bare words; formulas and terms are carried as
//! double-quoted strings in the surface syntax. Comments run from `;;` to
//! end of line.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String),
    Str(String),
    List(Vec<Sexpr>),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{msg} at line {line}, column {col}")]
pub struct SexprError {
    pub msg: String,
    pub line: usize,
    pub col: usize,
}

impl Sexpr {
    pub fn atom(s: impl Into<String>) -> Sexpr {
        Sexpr::Atom(s.into())
    }

    pub fn string(s: impl Into<String>) -> Sexpr {
        Sexpr::Str(s.into())
    }

    pub fn list(items: Vec<Sexpr>) -> Sexpr {
        Sexpr::List(items)
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Sexpr::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items) => Some(items),
            _ => None,
        }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, msg: impl Into<String>) -> SexprError {
        SexprError {
            msg: msg.into(),
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b';') if self.src.get(self.pos + 1) == Some(&b';') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn value(&mut self) -> Result<Sexpr, SexprError> {
        self.skip_trivia();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        Some(b')') => {
                            self.bump();
                            return Ok(Sexpr::List(items));
                        }
                        None => return Err(self.error("unclosed `(`")),
                        _ => items.push(self.value()?),
                    }
                }
            }
            Some(b')') => Err(self.error("unexpected `)`")),
            Some(b'"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.error("unclosed string literal")),
                        Some(b'"') => return Ok(Sexpr::Str(s)),
                        Some(b'\\') => match self.bump() {
                            Some(b'"') => s.push('"'),
                            Some(b'\\') => s.push('\\'),
                            Some(b'n') => s.push('\n'),
                            _ => return Err(self.error("unknown escape in string literal")),
                        },
                        Some(c) => s.push(c as char),
                    }
                }
            }
            Some(_) => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b'"' {
                        break;
                    }
                    self.bump();
                }
                let atom = std::str::from_utf8(&self.src[start..self.pos])
                    .map_err(|_| self.error("invalid UTF-8 in atom"))?;
                Ok(Sexpr::Atom(atom.to_string()))
            }
        }
    }
}

/// Read every top-level s-expression in the input.
pub fn read_all(text: &str) -> Result<Vec<Sexpr>, SexprError> {
    let mut r = Reader {
        src: text.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.value()?);
    }
}

/// Read exactly one s-expression.
pub fn read_one(text: &str) -> Result<Sexpr, SexprError> {
    let all = read_all(text)?;
    match all.len() {
        1 => Ok(all.into_iter().next().expect("length checked")),
        n => Err(SexprError {
            msg: format!("expected exactly one s-expression, found {n}"),
            line: 1,
            col: 1,
        }),
    }
}

pub fn write(sx: &Sexpr) -> String {
    let mut out = String::new();
    write_into(sx, &mut out);
    out
}

fn write_into(sx: &Sexpr, out: &mut String) {
    match sx {
        Sexpr::Atom(a) => out.push_str(a),
        Sexpr::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        Sexpr::List(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_into(item, out);
            }
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_strings() {
        let sx = read_one(r#"(seq ("P(x)" "Q(y)") "P(x)") ;; comment"#).unwrap();
        match &sx {
            Sexpr::List(items) => {
                assert_eq!(items[0].as_atom(), Some("seq"));
                assert_eq!(items[2].as_str(), Some("P(x)"));
            }
            _ => panic!("expected list"),
        }
        assert_eq!(read_one(&write(&sx)).unwrap(), sx);
    }

    #[test]
    fn rejects_unbalanced_input() {
        assert!(read_one("(a (b)").is_err());
        assert!(read_one(")").is_err());
    }
}
