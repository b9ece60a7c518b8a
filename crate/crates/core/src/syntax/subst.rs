//! Free variables, occurrence checks and the two formula substitutions.
//!
//! A term occurs in a formula only as a whole predicate argument or a whole
//! identity side; the evidence position of `j : A`, the agent of `K[a]` and
//! the subject of `T[a,t]` do not count as term occurrences. Both
//! substitutions therefore replace whole argument slots equal to the
//! substituted variable and never descend into compound terms.

use super::{Formula, Term, Variable};
use std::collections::BTreeSet;

/// Free variables of a term: occurrences not in the range of a matching
/// lambda binder. `!t` is transparent.
pub fn free_vars_term(t: &Term) -> BTreeSet<Variable> {
    fn go(t: &Term, bound: &mut Vec<Variable>, out: &mut BTreeSet<Variable>) {
        match t {
            Term::Var(v) => {
                if !bound.contains(v) {
                    out.insert(*v);
                }
            }
            Term::App(f, a) => {
                go(f, bound, out);
                go(a, bound, out);
            }
            Term::Lam(x, b) => {
                bound.push(*x);
                go(b, bound, out);
                bound.pop();
            }
            Term::Bang(inner) => go(inner, bound, out),
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// Every variable appearing anywhere in a term, binders included.
pub fn vars_of_term(t: &Term) -> BTreeSet<Variable> {
    let mut out = BTreeSet::new();
    fn go(t: &Term, out: &mut BTreeSet<Variable>) {
        match t {
            Term::Var(v) => {
                out.insert(*v);
            }
            Term::App(f, a) => {
                go(f, out);
                go(a, out);
            }
            Term::Lam(x, b) => {
                out.insert(*x);
                go(b, out);
            }
            Term::Bang(inner) => go(inner, out),
        }
    }
    go(t, &mut out);
    out
}

/// Free variables of a formula: variables with a whole-argument occurrence
/// (predicate argument or identity side) outside the range of a matching
/// quantifier.
pub fn free_vars_formula(f: &Formula) -> BTreeSet<Variable> {
    fn go(f: &Formula, bound: &mut Vec<Variable>, out: &mut BTreeSet<Variable>) {
        let mut slot = |t: &Term, bound: &Vec<Variable>, out: &mut BTreeSet<Variable>| {
            if let Term::Var(v) = t {
                if !bound.contains(v) {
                    out.insert(*v);
                }
            }
        };
        match f {
            Formula::Bot => {}
            Formula::Eq(l, r) => {
                slot(l, bound, out);
                slot(r, bound, out);
            }
            Formula::Pred(_, args) => {
                for a in args {
                    slot(a, bound, out);
                }
            }
            Formula::Imp(a, b) | Formula::And(a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            Formula::Forall(x, body) => {
                bound.push(*x);
                go(body, bound, out);
                bound.pop();
            }
            Formula::K(_, body) | Formula::Just(_, body) | Formula::Trust(_, _, body) => {
                go(body, bound, out)
            }
        }
    }
    let mut out = BTreeSet::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

/// Every variable appearing anywhere in a formula: argument subterms,
/// evidence terms, trust subjects and binders included. This is the "does
/// not occur" notion used when picking a fresh renaming variable.
pub fn vars_of_formula(f: &Formula) -> BTreeSet<Variable> {
    let mut out = BTreeSet::new();
    fn go(f: &Formula, out: &mut BTreeSet<Variable>) {
        match f {
            Formula::Bot => {}
            Formula::Eq(l, r) => {
                out.extend(vars_of_term(l));
                out.extend(vars_of_term(r));
            }
            Formula::Pred(_, args) => {
                for a in args {
                    out.extend(vars_of_term(a));
                }
            }
            Formula::Imp(a, b) | Formula::And(a, b) => {
                go(a, out);
                go(b, out);
            }
            Formula::Forall(x, body) => {
                out.insert(*x);
                go(body, out);
            }
            Formula::K(_, body) => go(body, out),
            Formula::Just(j, body) => {
                out.extend(vars_of_term(j));
                go(body, out);
            }
            Formula::Trust(_, subject, body) => {
                out.extend(vars_of_term(subject));
                go(body, out);
            }
        }
    }
    go(f, &mut out);
    out
}

/// Whether the term `t` occurs in `f` as a whole predicate argument or
/// identity side. The evidence slot of `j : A` and the subject of `T[a,t]`
/// do not count.
pub fn occurs_in_formula(t: &Term, f: &Formula) -> bool {
    match f {
        Formula::Bot => false,
        Formula::Eq(l, r) => l == t || r == t,
        Formula::Pred(_, args) => args.iter().any(|a| a == t),
        Formula::Imp(a, b) | Formula::And(a, b) => {
            occurs_in_formula(t, a) || occurs_in_formula(t, b)
        }
        Formula::Forall(_, body)
        | Formula::K(_, body)
        | Formula::Just(_, body)
        | Formula::Trust(_, _, body) => occurs_in_formula(t, body),
    }
}

/// Least-index variable not in `avoid`.
pub fn fresh_var(avoid: &BTreeSet<Variable>) -> Variable {
    let mut i = 0;
    while avoid.contains(&Variable(i)) {
        i += 1;
    }
    Variable(i)
}

/// Argument-slot substitution: the whole slot is replaced when it equals
/// the variable `v`, and left alone otherwise (compound terms are opaque).
fn slot_subst(t: &Term, u: &Term, v: Variable) -> Term {
    if *t == Term::Var(v) {
        u.clone()
    } else {
        t.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Quantifier instantiation `[u/v]`: permutes under `K` and `:`.
    Quant,
    /// Substitution of identicals `(u/v)`: halts at `K`, `:` and `T`.
    Ident,
}

fn subst(f: &Formula, u: &Term, v: Variable, mode: Mode) -> Formula {
    match f {
        Formula::Bot => Formula::Bot,
        Formula::Eq(l, r) => Formula::Eq(slot_subst(l, u, v), slot_subst(r, u, v)),
        Formula::Pred(p, args) => {
            Formula::Pred(*p, args.iter().map(|a| slot_subst(a, u, v)).collect())
        }
        Formula::Imp(a, b) => Formula::imp(subst(a, u, v, mode), subst(b, u, v, mode)),
        Formula::And(a, b) => Formula::and(subst(a, u, v, mode), subst(b, u, v, mode)),
        Formula::Forall(y, body) => {
            if v == *y {
                f.clone()
            } else if *u != Term::Var(*y) {
                Formula::forall(*y, subst(body, u, v, mode))
            } else {
                // v != y = u: rename the binder to a variable absent from
                // the whole quantified formula, from u and from v.
                let mut avoid = vars_of_formula(f);
                avoid.extend(vars_of_term(u));
                avoid.insert(v);
                let z = fresh_var(&avoid);
                let renamed = subst(body, &Term::Var(z), *y, mode);
                Formula::forall(z, subst(&renamed, u, v, mode))
            }
        }
        Formula::K(a, body) => match mode {
            Mode::Quant => Formula::know(*a, subst(body, u, v, mode)),
            Mode::Ident => f.clone(),
        },
        Formula::Just(j, body) => match mode {
            Mode::Quant => Formula::just(j.clone(), subst(body, u, v, mode)),
            Mode::Ident => f.clone(),
        },
        Formula::Trust(a, subject, body) => match mode {
            // T[a,t] A abbreviates K[a] j:A, so [u/v] reaches the body while
            // the subject slot follows the argument-slot rule.
            Mode::Quant => Formula::trust(*a, slot_subst(subject, u, v), subst(body, u, v, mode)),
            Mode::Ident => f.clone(),
        },
    }
}

/// Quantifier instantiating substitution `A[u/v]`.
pub fn subst_quant(f: &Formula, u: &Term, v: Variable) -> Formula {
    subst(f, u, v, Mode::Quant)
}

/// Substitution of identicals `A(u/v)`; does not permute inside `K`, `:`
/// or `T`.
pub fn subst_ident(f: &Formula, u: &Term, v: Variable) -> Formula {
    subst(f, u, v, Mode::Ident)
}

/// Simultaneous quantifier-style substitution of terms for distinct
/// variables. Used to build the evidence-instance candidates of the truth
/// clause for `j : A`.
pub fn subst_parallel(f: &Formula, pairs: &[(Variable, Term)]) -> Formula {
    let slot = |t: &Term| -> Term {
        if let Term::Var(v) = t {
            for (x, u) in pairs {
                if v == x {
                    return u.clone();
                }
            }
        }
        t.clone()
    };
    match f {
        Formula::Bot => Formula::Bot,
        Formula::Eq(l, r) => Formula::Eq(slot(l), slot(r)),
        Formula::Pred(p, args) => Formula::Pred(*p, args.iter().map(slot).collect()),
        Formula::Imp(a, b) => Formula::imp(subst_parallel(a, pairs), subst_parallel(b, pairs)),
        Formula::And(a, b) => Formula::and(subst_parallel(a, pairs), subst_parallel(b, pairs)),
        Formula::Forall(y, body) => {
            let live: Vec<(Variable, Term)> = pairs
                .iter()
                .filter(|(x, _)| x != y)
                .cloned()
                .collect();
            if live.is_empty() {
                return f.clone();
            }
            if live.iter().any(|(_, u)| *u == Term::Var(*y)) {
                let mut avoid = vars_of_formula(f);
                for (x, u) in &live {
                    avoid.insert(*x);
                    avoid.extend(vars_of_term(u));
                }
                let z = fresh_var(&avoid);
                let renamed = subst_quant(body, &Term::Var(z), *y);
                Formula::forall(z, subst_parallel(&renamed, &live))
            } else {
                Formula::forall(*y, subst_parallel(body, &live))
            }
        }
        Formula::K(a, body) => Formula::know(*a, subst_parallel(body, pairs)),
        Formula::Just(j, body) => Formula::just(j.clone(), subst_parallel(body, pairs)),
        Formula::Trust(a, subject, body) => {
            Formula::trust(*a, slot(subject), subst_parallel(body, pairs))
        }
    }
}

/// Advisory lint for the underspecified corner of the quantifier
/// substitution: the renaming clause fires only when the substituted term
/// *is* the bound variable, so substituting a compound term that merely
/// contains the binder descends without renaming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstLint {
    pub binder: Variable,
}

/// Returns a lint when `A[u/v]` passes a quantifier whose binder occurs
/// free inside the compound term `u`.
pub fn subst_quant_lint(f: &Formula, u: &Term, v: Variable) -> Option<SubstLint> {
    if matches!(u, Term::Var(_)) {
        return None;
    }
    let u_free = free_vars_term(u);
    fn go(f: &Formula, u_free: &BTreeSet<Variable>, v: Variable) -> Option<SubstLint> {
        match f {
            Formula::Bot | Formula::Eq(..) | Formula::Pred(..) => None,
            Formula::Imp(a, b) | Formula::And(a, b) => {
                go(a, u_free, v).or_else(|| go(b, u_free, v))
            }
            Formula::Forall(y, body) => {
                if *y == v {
                    None
                } else if u_free.contains(y) && free_vars_formula(body).contains(&v) {
                    Some(SubstLint { binder: *y })
                } else {
                    go(body, u_free, v)
                }
            }
            Formula::K(_, body) | Formula::Just(_, body) | Formula::Trust(_, _, body) => {
                go(body, u_free, v)
            }
        }
    }
    go(f, &u_free, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{AgentName, SymbolTable};

    fn st() -> SymbolTable {
        SymbolTable::new()
    }

    #[test]
    fn free_vars_of_bang_and_lambda() {
        let x = Variable(0);
        let y = Variable(1);
        // \x. x y -> {y}
        let t = Term::lam(x, Term::app(Term::Var(x), Term::Var(y)));
        assert_eq!(free_vars_term(&t), BTreeSet::from([y]));
        // \x. x -> {}
        let id = Term::lam(x, Term::Var(x));
        assert!(free_vars_term(&id).is_empty());
        // !x -> {x}
        assert_eq!(free_vars_term(&Term::bang(Term::Var(x))), BTreeSet::from([x]));
    }

    #[test]
    fn formula_free_vars_follow_term_occurrences() {
        let mut st = st();
        let p = st.intern_pred("P", 1).unwrap();
        let q = st.intern_pred("Q", 1).unwrap();
        let x = st.intern_var("x");
        let y = st.intern_var("y");
        let j = st.intern_var("j");
        // P(x) & forall x. Q(x) -> {x}
        let f = Formula::and(
            Formula::Pred(p, vec![Term::Var(x)]),
            Formula::forall(x, Formula::Pred(q, vec![Term::Var(x)])),
        );
        assert_eq!(free_vars_formula(&f), BTreeSet::from([x]));
        // j : P(y) -> {y}: the evidence variable does not count.
        let g = Formula::just(Term::Var(j), Formula::Pred(p, vec![Term::Var(y)]));
        assert_eq!(free_vars_formula(&g), BTreeSet::from([y]));
        // forall x. P(x) -> {}
        let h = Formula::forall(x, Formula::Pred(p, vec![Term::Var(x)]));
        assert!(free_vars_formula(&h).is_empty());
    }

    #[test]
    fn fresh_var_picks_least_absent_index() {
        assert_eq!(fresh_var(&BTreeSet::from([Variable(0), Variable(1)])), Variable(2));
        assert_eq!(fresh_var(&BTreeSet::new()), Variable(0));
        assert_eq!(fresh_var(&BTreeSet::from([Variable(0), Variable(2)])), Variable(1));
    }

    #[test]
    fn quant_subst_permutes_under_k() {
        let mut st = st();
        let p = st.intern_pred("P", 1).unwrap();
        let x = st.intern_var("x");
        let t = st.intern_var("t");
        let a = AgentName(0);
        let f = Formula::know(a, Formula::Pred(p, vec![Term::Var(x)]));
        let expected = Formula::know(a, Formula::Pred(p, vec![Term::Var(t)]));
        assert_eq!(subst_quant(&f, &Term::Var(t), x), expected);
    }

    #[test]
    fn quant_subst_renames_captured_binder() {
        let mut st = st();
        let p = st.intern_pred("P", 1).unwrap();
        let x = st.intern_var("x");
        let y = st.intern_var("y");
        // (forall y. P(x))[y/x] = forall z. P(y) with z the least fresh index
        let f = Formula::forall(y, Formula::Pred(p, vec![Term::Var(x)]));
        let got = subst_quant(&f, &Term::Var(y), x);
        let z = Variable(2);
        assert_eq!(
            got,
            Formula::forall(z, Formula::Pred(p, vec![Term::Var(y)]))
        );
    }

    #[test]
    fn quant_subst_halts_on_matching_binder() {
        let mut st = st();
        let p = st.intern_pred("P", 1).unwrap();
        let x = st.intern_var("x");
        let t = st.intern_var("t");
        let f = Formula::forall(x, Formula::Pred(p, vec![Term::Var(x)]));
        assert_eq!(subst_quant(&f, &Term::Var(t), x), f);
    }

    #[test]
    fn ident_subst_halts_at_k_and_just() {
        let mut st = st();
        let p = st.intern_pred("P", 1).unwrap();
        let x = st.intern_var("x");
        let t = st.intern_var("t");
        let j = st.intern_var("j");
        let a = AgentName(0);
        let under_k = Formula::know(a, Formula::Pred(p, vec![Term::Var(x)]));
        assert_eq!(subst_ident(&under_k, &Term::Var(t), x), under_k);
        let under_j = Formula::just(Term::Var(j), Formula::Pred(p, vec![Term::Var(x)]));
        assert_eq!(subst_ident(&under_j, &Term::Var(t), x), under_j);
        // P(x) & K[a] P(x) substitutes only the exposed conjunct.
        let mixed = Formula::and(Formula::Pred(p, vec![Term::Var(x)]), under_k.clone());
        let expected = Formula::and(Formula::Pred(p, vec![Term::Var(t)]), under_k);
        assert_eq!(subst_ident(&mixed, &Term::Var(t), x), expected);
    }

    #[test]
    fn compound_arguments_are_opaque() {
        let mut st = st();
        let p = st.intern_pred("P", 1).unwrap();
        let x = st.intern_var("x");
        let y = st.intern_var("y");
        // P(x y)[t/x] leaves the compound argument alone.
        let f = Formula::Pred(p, vec![Term::app(Term::Var(x), Term::Var(y))]);
        assert_eq!(subst_quant(&f, &Term::var(9), x), f);
    }

    #[test]
    fn lint_fires_on_compound_with_binder() {
        let mut st = st();
        let p = st.intern_pred("P", 1).unwrap();
        let x = st.intern_var("x");
        let y = st.intern_var("y");
        let f = Formula::forall(y, Formula::Pred(p, vec![Term::Var(x)]));
        let u = Term::app(Term::Var(y), Term::Var(y));
        assert_eq!(subst_quant_lint(&f, &u, x), Some(SubstLint { binder: y }));
        assert_eq!(subst_quant_lint(&f, &Term::Var(y), x), None);
    }
}
