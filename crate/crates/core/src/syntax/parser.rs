//! Recursive-descent parser for the surface syntax.
//!
//! Tokens: `bot`, `t = s`, `P(t1,...,tn)`, `A -> B`, `A & B`,
//! `forall x. A`, `K[a] A`, `j : A`, `T[a,t] A`, sugar `~A` and
//! `exists x. A`; terms `\x. t`, juxtaposition application, `!t` and
//! parentheses. Comments run from `;;` to end of line.
//!
//! Unary operators bind tighter than `&`, which binds tighter than `->`;
//! `->` associates to the right. Identifiers starting with an uppercase
//! letter are predicate symbols (`K` and `T` are reserved); lowercase
//! identifiers are term variables or, inside brackets, agent names.

use super::{occurs_in_formula, Formula, SymbolTable, Term};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{msg} at line {line}, column {col}")]
pub struct ParseError {
    pub msg: String,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    KwBot,
    KwForall,
    KwExists,
    Lambda,
    Dot,
    Bang,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Arrow,
    Amp,
    Tilde,
    Equals,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            msg: msg.into(),
            line: self.line,
            col: self.col,
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.bump();
                continue;
            }
            if c == b';' && self.peek2() == Some(b';') {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let tok = match c {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b':' => {
                    self.bump();
                    Tok::Colon
                }
                b'&' => {
                    self.bump();
                    Tok::Amp
                }
                b'~' => {
                    self.bump();
                    Tok::Tilde
                }
                b'=' => {
                    self.bump();
                    Tok::Equals
                }
                b'!' => {
                    self.bump();
                    Tok::Bang
                }
                b'\\' => {
                    self.bump();
                    Tok::Lambda
                }
                b'-' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::Arrow
                    } else {
                        return Err(self.error("expected `>` after `-`"));
                    }
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = self.pos;
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let word = std::str::from_utf8(&self.src[start..self.pos])
                        .expect("input was checked to be UTF-8")
                        .to_string();
                    match word.as_str() {
                        "bot" => Tok::KwBot,
                        "forall" => Tok::KwForall,
                        "exists" => Tok::KwExists,
                        _ => Tok::Ident(word),
                    }
                }
                other => {
                    return Err(self.error(format!("unexpected character `{}`", other as char)))
                }
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    st: &'a mut SymbolTable,
    end: (usize, usize),
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or(self.end)
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            msg: msg.into(),
            line,
            col,
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.bump() {
                Some(Tok::Ident(s)) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn lower_ident(&mut self, what: &str) -> Result<String, ParseError> {
        let err = self.error(format!("expected {what}"));
        let name = self.ident(what)?;
        if name.starts_with(|c: char| c.is_ascii_uppercase()) {
            return Err(err);
        }
        Ok(name)
    }

    // formula := and ('->' formula)?
    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.conjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let rhs = self.formula()?;
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    // and := unary ('&' unary)*
    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            let rhs = self.unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::KwBot) => {
                self.bump();
                Ok(Formula::Bot)
            }
            Some(Tok::Tilde) => {
                self.bump();
                Ok(Formula::neg(self.unary()?))
            }
            Some(Tok::KwForall) => {
                self.bump();
                let name = self.lower_ident("a variable after `forall`")?;
                let x = self.st.intern_var(&name);
                self.expect(Tok::Dot, "`.` after the quantified variable")?;
                Ok(Formula::forall(x, self.unary()?))
            }
            Some(Tok::KwExists) => {
                self.bump();
                let name = self.lower_ident("a variable after `exists`")?;
                let x = self.st.intern_var(&name);
                self.expect(Tok::Dot, "`.` after the quantified variable")?;
                Ok(Formula::exists(x, self.unary()?))
            }
            Some(Tok::Ident(name)) if name == "K" => {
                self.bump();
                self.expect(Tok::LBracket, "`[` after `K`")?;
                let agent = self.lower_ident("an agent name")?;
                let a = self.st.intern_agent(&agent);
                self.expect(Tok::RBracket, "`]` after the agent name")?;
                Ok(Formula::know(a, self.unary()?))
            }
            Some(Tok::Ident(name)) if name == "T" => {
                let (line, col) = self.here();
                self.bump();
                self.expect(Tok::LBracket, "`[` after `T`")?;
                let agent = self.lower_ident("an agent name")?;
                let a = self.st.intern_agent(&agent);
                self.expect(Tok::Comma, "`,` between agent and subject")?;
                let subject = self.term()?;
                self.expect(Tok::RBracket, "`]` after the trust subject")?;
                let body = self.unary()?;
                if !occurs_in_formula(&subject, &body) {
                    return Err(ParseError {
                        msg: "trust subject does not occur in the body".into(),
                        line,
                        col,
                    });
                }
                Ok(Formula::trust(a, subject, body))
            }
            Some(Tok::Ident(name))
                if name.starts_with(|c: char| c.is_ascii_uppercase()) =>
            {
                let (line, col) = self.here();
                let name = self.ident("a predicate symbol")?;
                self.expect(Tok::LParen, "`(` after the predicate symbol")?;
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    loop {
                        args.push(self.term()?);
                        if self.peek() == Some(&Tok::Comma) {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, "`)` closing the argument list")?;
                let p = self
                    .st
                    .intern_pred(&name, args.len())
                    .map_err(|e| ParseError {
                        msg: e.to_string(),
                        line,
                        col,
                    })?;
                Ok(Formula::Pred(p, args))
            }
            Some(Tok::LParen) => {
                // Either a parenthesized formula or a parenthesized term
                // followed by `:` or `=`; try the formula reading first.
                let save = self.pos;
                self.bump();
                if let Ok(f) = self.formula() {
                    if self.peek() == Some(&Tok::RParen) {
                        self.bump();
                        return Ok(f);
                    }
                }
                self.pos = save;
                self.term_headed()
            }
            _ => self.term_headed(),
        }
    }

    // A formula headed by a term: `t : A` or `t = s`.
    fn term_headed(&mut self) -> Result<Formula, ParseError> {
        let t = self.term()?;
        match self.peek() {
            Some(Tok::Colon) => {
                self.bump();
                Ok(Formula::just(t, self.unary()?))
            }
            Some(Tok::Equals) => {
                self.bump();
                let s = self.term()?;
                Ok(Formula::Eq(t, s))
            }
            _ => Err(self.error("expected `:` or `=` after a term")),
        }
    }

    // term := '\' var '.' term | app
    fn term(&mut self) -> Result<Term, ParseError> {
        if self.peek() == Some(&Tok::Lambda) {
            self.bump();
            let name = self.lower_ident("a variable after `\\`")?;
            let x = self.st.intern_var(&name);
            self.expect(Tok::Dot, "`.` after the lambda binder")?;
            return Ok(Term::lam(x, self.term()?));
        }
        let mut acc = self.term_atom()?;
        loop {
            match self.peek() {
                Some(Tok::Lambda) => {
                    // trailing lambda argument extends maximally right
                    let arg = self.term()?;
                    acc = Term::app(acc, arg);
                    return Ok(acc);
                }
                Some(Tok::Ident(name))
                    if !name.starts_with(|c: char| c.is_ascii_uppercase()) =>
                {
                    let arg = self.term_atom()?;
                    acc = Term::app(acc, arg);
                }
                Some(Tok::LParen) | Some(Tok::Bang) => {
                    let arg = self.term_atom()?;
                    acc = Term::app(acc, arg);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term_atom(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(Term::bang(self.term_atom()?))
            }
            Some(Tok::LParen) => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen, "`)` closing the term")?;
                Ok(t)
            }
            Some(Tok::Ident(name))
                if !name.starts_with(|c: char| c.is_ascii_uppercase()) =>
            {
                let name = self.ident("a term")?;
                Ok(Term::Var(self.st.intern_var(&name)))
            }
            _ => Err(self.error("expected a term")),
        }
    }
}

fn run_parser<T>(
    text: &str,
    st: &mut SymbolTable,
    f: impl FnOnce(&mut Parser) -> Result<T, ParseError>,
) -> Result<T, ParseError> {
    let lexer = Lexer::new(text);
    let end = {
        let lines = text.lines().count().max(1);
        let last = text.lines().last().unwrap_or("");
        (lines, last.chars().count() + 1)
    };
    let toks = lexer.tokens()?;
    let mut p = Parser {
        toks,
        pos: 0,
        st,
        end,
    };
    let out = f(&mut p)?;
    if p.pos != p.toks.len() {
        return Err(p.error("trailing input after a complete parse"));
    }
    Ok(out)
}

/// Parse a formula in the surface syntax.
pub fn parse_formula(text: &str, st: &mut SymbolTable) -> Result<Formula, ParseError> {
    run_parser(text, st, |p| p.formula())
}

/// Parse a term in the surface syntax.
pub fn parse_term(text: &str, st: &mut SymbolTable) -> Result<Term, ParseError> {
    run_parser(text, st, |p| p.term())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{print_formula, print_term, Variable};

    #[test]
    fn implication_associates_right() {
        let mut st = SymbolTable::new();
        let f = parse_formula("A() -> B() -> C()", &mut st).unwrap();
        let a = Formula::Pred(st.lookup_pred("A").unwrap(), vec![]);
        let b = Formula::Pred(st.lookup_pred("B").unwrap(), vec![]);
        let c = Formula::Pred(st.lookup_pred("C").unwrap(), vec![]);
        assert_eq!(f, Formula::imp(a, Formula::imp(b, c)));
    }

    #[test]
    fn negation_desugars_to_imp_bot() {
        let mut st = SymbolTable::new();
        let f = parse_formula("~P(x)", &mut st).unwrap();
        let p = Formula::Pred(st.lookup_pred("P").unwrap(), vec![Term::var(0)]);
        assert_eq!(f, Formula::neg(p));
    }

    #[test]
    fn trust_subject_must_occur() {
        let mut st = SymbolTable::new();
        let err = parse_formula("T[a,t] P(s)", &mut st).unwrap_err();
        assert!(err.msg.contains("does not occur"));
        assert!(parse_formula("T[a,t] P(t)", &mut st).is_ok());
    }

    #[test]
    fn lambda_chain_from_pair_footnote() {
        let mut st = SymbolTable::new();
        let t = parse_term(r"\x. \y. \z. z x y", &mut st).unwrap();
        let (x, y, z) = (Variable(0), Variable(1), Variable(2));
        let expected = Term::lam(
            x,
            Term::lam(
                y,
                Term::lam(z, Term::app(Term::app(Term::Var(z), Term::Var(x)), Term::Var(y))),
            ),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn bang_and_application_grouping() {
        let mut st = SymbolTable::new();
        let a = parse_term("(t s) u", &mut st).unwrap();
        let b = parse_term("t s u", &mut st).unwrap();
        assert_eq!(a, b);
        let bang = parse_term("!j", &mut st).unwrap();
        let j = st.intern_var("j");
        assert_eq!(bang, Term::bang(Term::Var(j)));
        // `!` binds the following atom only
        let bj = parse_term("!j k", &mut st).unwrap();
        let k = st.intern_var("k");
        assert_eq!(bj, Term::app(Term::bang(Term::Var(j)), Term::Var(k)));
    }

    #[test]
    fn precedence_of_connectives_and_operators() {
        let mut st = SymbolTable::new();
        let f = parse_formula("K[a] P(x) & Q(y) -> j : R(x)", &mut st).unwrap();
        match f {
            Formula::Imp(lhs, rhs) => {
                assert!(matches!(*lhs, Formula::And(..)));
                assert!(matches!(*rhs, Formula::Just(..)));
            }
            other => panic!("expected implication, got {other:?}"),
        }
    }

    #[test]
    fn parenthesized_term_before_identity() {
        let mut st = SymbolTable::new();
        let f = parse_formula("(x y) = z", &mut st).unwrap();
        assert!(matches!(f, Formula::Eq(Term::App(..), Term::Var(_))));
    }

    #[test]
    fn comments_are_skipped() {
        let mut st = SymbolTable::new();
        let f = parse_formula(";; heading\nP(x) ;; trailing\n", &mut st).unwrap();
        assert!(matches!(f, Formula::Pred(..)));
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let mut st = SymbolTable::new();
        parse_formula("P(x)", &mut st).unwrap();
        let err = parse_formula("P(x, y)", &mut st).unwrap_err();
        assert!(err.msg.contains("arity"));
    }

    #[test]
    fn printer_output_reparses_identically() {
        let mut st = SymbolTable::new();
        let texts = [
            "P(x) -> Q(y) -> P(x) & Q(y)",
            "forall x. P(x) -> exists y. Q(y)",
            "K[a] (P(x) & Q(y))",
            "T[alice, u] C(u)",
            "j : (P(x) -> bot)",
            "!j : (j : P(x))",
            "(\\x. x y) = z u",
            "~(~forall x. ~P(x))",
        ];
        for text in texts {
            let f = parse_formula(text, &mut st).unwrap();
            let printed = print_formula(&f, &st);
            let f2 = parse_formula(&printed, &mut st)
                .unwrap_or_else(|e| panic!("reparsing `{printed}`: {e}"));
            assert_eq!(f, f2, "round trip through `{printed}`");
        }
        let t = parse_term(r"\x. \y. \z. z x y", &mut st).unwrap();
        let printed = print_term(&t, &st);
        assert_eq!(parse_term(&printed, &mut st).unwrap(), t);
    }
}
