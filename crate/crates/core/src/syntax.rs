//! Abstract syntax, symbol interning, surface parser/printer and the two
//! substitution operators.
//!
//! Identifiers are interned to indices; equality of terms and formulae is
//! strictly syntactic (no alpha-equivalence). Printing uses the original
//! names when the symbol table knows them and falls back to the canonical
//! `x0, x1, ...` / `a0, a1, ...` scheme otherwise.

mod parser;
mod printer;
mod subst;

pub use parser::{parse_formula, parse_term, ParseError};
pub use printer::{print_formula, print_term};
pub use subst::{
    free_vars_formula, free_vars_term, fresh_var, occurs_in_formula, subst_ident,
    subst_parallel, subst_quant, subst_quant_lint, vars_of_formula, vars_of_term, SubstLint,
};

use std::collections::HashMap;
use thiserror::Error;

/// A term variable, identified by its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(pub u32);

/// An agent name, identified by its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentName(pub u32);

/// An interned predicate symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredSym(pub u32);

/// A pure lambda-calculus term extended with the proof-checker constructor `!t`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Variable),
    App(Box<Term>, Box<Term>),
    Lam(Variable, Box<Term>),
    Bang(Box<Term>),
}

impl Term {
    pub fn var(i: u32) -> Term {
        Term::Var(Variable(i))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn lam(x: Variable, body: Term) -> Term {
        Term::Lam(x, Box::new(body))
    }

    pub fn bang(t: Term) -> Term {
        Term::Bang(Box::new(t))
    }

    /// Number of constructors in the term tree.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(f, a) => 1 + f.size() + a.size(),
            Term::Lam(_, b) => 1 + b.size(),
            Term::Bang(t) => 1 + t.size(),
        }
    }
}

/// A first-order formula with identity, agent-indexed knowledge, evidence
/// justifications and the trust operator.
///
/// `~A` and `exists x. A` exist only as surface sugar for `A -> bot` and
/// `~forall x. ~A`; they never appear in the tree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Bot,
    Eq(Term, Term),
    Pred(PredSym, Vec<Term>),
    Imp(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Forall(Variable, Box<Formula>),
    K(AgentName, Box<Formula>),
    Just(Term, Box<Formula>),
    /// `Trust(a, t, A)`: agent `a` trusts subject `t` with respect to `A`.
    /// Invariant: `t` occurs in `A` (as a whole predicate or identity
    /// argument); enforced by the parser and the proof kernel.
    Trust(AgentName, Term, Box<Formula>),
}

impl Formula {
    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Formula) -> Formula {
        Formula::imp(a, Formula::Bot)
    }

    pub fn forall(x: Variable, a: Formula) -> Formula {
        Formula::Forall(x, Box::new(a))
    }

    pub fn know(a: AgentName, f: Formula) -> Formula {
        Formula::K(a, Box::new(f))
    }

    pub fn just(j: Term, f: Formula) -> Formula {
        Formula::Just(j, Box::new(f))
    }

    pub fn trust(a: AgentName, subject: Term, f: Formula) -> Formula {
        Formula::Trust(a, subject, Box::new(f))
    }

    /// `exists x. A` desugared as `~forall x. ~A`.
    pub fn exists(x: Variable, a: Formula) -> Formula {
        Formula::neg(Formula::forall(x, Formula::neg(a)))
    }

    /// True for `bot`, identities and predicate atoms.
    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Bot | Formula::Eq(..) | Formula::Pred(..))
    }
}

/// Symbol-table errors.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SymbolError {
    #[error("predicate `{name}` used with arity {found} but declared with arity {declared}")]
    ArityMismatch {
        name: String,
        declared: usize,
        found: usize,
    },
    #[error("`{0}` is reserved and cannot be used as a predicate symbol")]
    ReservedPredicate(String),
}

/// Interning table for variables, agent names and predicate symbols.
///
/// Names of the canonical form `x<digits>` / `a<digits>` claim exactly that
/// index, so printing a nameless variable as `x7` and re-parsing it yields
/// the same index.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    var_names: HashMap<u32, String>,
    var_index: HashMap<String, u32>,
    agent_names: HashMap<u32, String>,
    agent_index: HashMap<String, u32>,
    preds: Vec<(String, usize)>,
    pred_index: HashMap<String, u32>,
}

fn canonical_index(name: &str, prefix: char) -> Option<u32> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

impl SymbolTable {
    pub fn new() -> SymbolTable {
        SymbolTable::default()
    }

    /// Intern a variable name, returning its index.
    pub fn intern_var(&mut self, name: &str) -> Variable {
        if let Some(&i) = self.var_index.get(name) {
            return Variable(i);
        }
        let idx = match canonical_index(name, 'x') {
            Some(i) if !self.var_names.contains_key(&i) => i,
            _ => {
                let mut i = 0;
                while self.var_names.contains_key(&i) {
                    i += 1;
                }
                i
            }
        };
        self.var_names.insert(idx, name.to_string());
        self.var_index.insert(name.to_string(), idx);
        Variable(idx)
    }

    /// Intern an agent name, returning its index.
    pub fn intern_agent(&mut self, name: &str) -> AgentName {
        if let Some(&i) = self.agent_index.get(name) {
            return AgentName(i);
        }
        let idx = match canonical_index(name, 'a') {
            Some(i) if !self.agent_names.contains_key(&i) => i,
            _ => {
                let mut i = 0;
                while self.agent_names.contains_key(&i) {
                    i += 1;
                }
                i
            }
        };
        self.agent_names.insert(idx, name.to_string());
        self.agent_index.insert(name.to_string(), idx);
        AgentName(idx)
    }

    /// Intern a predicate symbol at the given arity. A symbol may not be
    /// registered at two different arities.
    pub fn intern_pred(&mut self, name: &str, arity: usize) -> Result<PredSym, SymbolError> {
        if name == "K" || name == "T" {
            return Err(SymbolError::ReservedPredicate(name.to_string()));
        }
        if let Some(&i) = self.pred_index.get(name) {
            let declared = self.preds[i as usize].1;
            if declared != arity {
                return Err(SymbolError::ArityMismatch {
                    name: name.to_string(),
                    declared,
                    found: arity,
                });
            }
            return Ok(PredSym(i));
        }
        let i = self.preds.len() as u32;
        self.preds.push((name.to_string(), arity));
        self.pred_index.insert(name.to_string(), i);
        Ok(PredSym(i))
    }

    pub fn pred_arity(&self, p: PredSym) -> usize {
        self.preds[p.0 as usize].1
    }

    pub fn pred_name(&self, p: PredSym) -> &str {
        &self.preds[p.0 as usize].0
    }

    pub fn lookup_pred(&self, name: &str) -> Option<PredSym> {
        self.pred_index.get(name).map(|&i| PredSym(i))
    }

    pub fn var_name(&self, v: Variable) -> String {
        match self.var_names.get(&v.0) {
            Some(n) => n.clone(),
            None => format!("x{}", v.0),
        }
    }

    pub fn agent_name(&self, a: AgentName) -> String {
        match self.agent_names.get(&a.0) {
            Some(n) => n.clone(),
            None => format!("a{}", a.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_names_claim_their_index() {
        let mut st = SymbolTable::new();
        assert_eq!(st.intern_var("x7"), Variable(7));
        assert_eq!(st.intern_var("y"), Variable(0));
        assert_eq!(st.intern_var("z"), Variable(1));
        assert_eq!(st.intern_var("x7"), Variable(7));
        assert_eq!(st.var_name(Variable(7)), "x7");
        assert_eq!(st.var_name(Variable(3)), "x3");
    }

    #[test]
    fn pred_arity_is_fixed() {
        let mut st = SymbolTable::new();
        let p = st.intern_pred("P", 2).unwrap();
        assert_eq!(st.intern_pred("P", 2).unwrap(), p);
        assert!(matches!(
            st.intern_pred("P", 1),
            Err(SymbolError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn variables_equal_iff_indices_equal() {
        let mut st = SymbolTable::new();
        let a = st.intern_var("prog");
        let b = st.intern_var("prog");
        assert_eq!(a, b);
        assert_ne!(a, st.intern_var("other"));
    }
}
