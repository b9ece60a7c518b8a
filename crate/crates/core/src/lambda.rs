//! Pure lambda-calculus evaluation: capture-avoiding term substitution,
//! redex enumeration via term contexts, bounded multi-step reduction, and
//! the pair/list encodings used by the computational-trust theories.

use crate::syntax::{free_vars_term, fresh_var, vars_of_term, Term, Variable};
use std::collections::{BTreeSet, HashSet, VecDeque};

/// Path from the root of a term to a subterm, as child indices
/// (`App`: 0 = function, 1 = argument; `Lam` and `Bang`: 0).
pub type Path = Vec<usize>;

/// A beta-redex position inside a term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedexOccurrence {
    pub path: Path,
}

/// Capture-avoiding substitution `t^{s/x}`: every free occurrence of `x`
/// in `t` is replaced by `s`, renaming binders on the path that would
/// capture a free variable of `s`.
pub fn term_subst(t: &Term, s: &Term, x: Variable) -> Term {
    match t {
        Term::Var(v) => {
            if *v == x {
                s.clone()
            } else {
                t.clone()
            }
        }
        Term::App(f, a) => Term::app(term_subst(f, s, x), term_subst(a, s, x)),
        Term::Bang(inner) => Term::bang(term_subst(inner, s, x)),
        Term::Lam(y, body) => {
            if *y == x {
                t.clone()
            } else if free_vars_term(s).contains(y) && free_vars_term(body).contains(&x) {
                let mut avoid: BTreeSet<Variable> = free_vars_term(s);
                avoid.extend(vars_of_term(body));
                avoid.insert(x);
                avoid.insert(*y);
                let z = fresh_var(&avoid);
                let renamed = term_subst(body, &Term::Var(z), *y);
                Term::lam(z, term_subst(&renamed, s, x))
            } else {
                Term::lam(*y, term_subst(body, s, x))
            }
        }
    }
}

/// All beta-redex positions in deterministic leftmost-outermost order.
pub fn redexes(t: &Term) -> Vec<RedexOccurrence> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    collect(t, &mut path, &mut out);
    out
}

fn collect(t: &Term, path: &mut Path, out: &mut Vec<RedexOccurrence>) {
    if let Term::App(f, _) = t {
        if matches!(f.as_ref(), Term::Lam(..)) {
            out.push(RedexOccurrence { path: path.clone() });
        }
    }
    match t {
        Term::Var(_) => {}
        Term::App(f, a) => {
            path.push(0);
            collect(f, path, out);
            path.pop();
            path.push(1);
            collect(a, path, out);
            path.pop();
        }
        Term::Lam(_, b) => {
            path.push(0);
            collect(b, path, out);
            path.pop();
        }
        Term::Bang(inner) => {
            path.push(0);
            collect(inner, path, out);
            path.pop();
        }
    }
}

/// Contract exactly the addressed redex. Panics if the path does not
/// address a subterm of the shape `(\x. t) s`.
pub fn step(t: &Term, r: &RedexOccurrence) -> Term {
    fn go(t: &Term, path: &[usize]) -> Term {
        match path.split_first() {
            None => match t {
                Term::App(f, a) => match f.as_ref() {
                    Term::Lam(x, body) => term_subst(body, a, *x),
                    _ => panic!("redex path does not address a beta-redex"),
                },
                _ => panic!("redex path does not address an application"),
            },
            Some((&i, rest)) => match (t, i) {
                (Term::App(f, a), 0) => Term::app(go(f, rest), (**a).clone()),
                (Term::App(f, a), 1) => Term::app((**f).clone(), go(a, rest)),
                (Term::Lam(x, b), 0) => Term::lam(*x, go(b, rest)),
                (Term::Bang(inner), 0) => Term::bang(go(inner, rest)),
                _ => panic!("redex path leaves the term"),
            },
        }
    }
    go(t, &r.path)
}

/// All one-step reducts of a term, leftmost-outermost order.
pub fn reducts(t: &Term) -> Vec<Term> {
    redexes(t).iter().map(|r| step(t, r)).collect()
}

/// Outcome of a fuel-bounded reachability query over `|->*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOutcome {
    /// A reduction path of length <= fuel exists.
    Reduces,
    /// The reachable set was exhausted without finding the target.
    DoesNotReduce,
    /// The fuel ran out with unexplored terms remaining.
    FuelExhausted,
}

/// Breadth-first search for a `|->` path from `t` to `u` of length <= `fuel`.
pub fn reduces_to(t: &Term, u: &Term, fuel: usize) -> ReduceOutcome {
    if t == u {
        return ReduceOutcome::Reduces;
    }
    let mut seen: HashSet<Term> = HashSet::new();
    seen.insert(t.clone());
    let mut frontier = vec![t.clone()];
    for _ in 0..fuel {
        let mut next = Vec::new();
        for term in &frontier {
            for r in reducts(term) {
                if r == *u {
                    return ReduceOutcome::Reduces;
                }
                if seen.insert(r.clone()) {
                    next.push(r);
                }
            }
        }
        if next.is_empty() {
            return ReduceOutcome::DoesNotReduce;
        }
        frontier = next;
    }
    ReduceOutcome::FuelExhausted
}

/// The set of terms reachable from `t` within `fuel` steps, paired with a
/// flag telling whether the exploration was cut off (by fuel or by the
/// node budget).
pub fn reachable(t: &Term, fuel: usize, node_budget: usize) -> (HashSet<Term>, bool) {
    let mut seen: HashSet<Term> = HashSet::new();
    seen.insert(t.clone());
    let mut frontier = vec![t.clone()];
    for _ in 0..fuel {
        let mut next = Vec::new();
        for term in &frontier {
            for r in reducts(term) {
                if seen.len() >= node_budget {
                    return (seen, true);
                }
                if seen.insert(r.clone()) {
                    next.push(r);
                }
            }
        }
        if next.is_empty() {
            return (seen, false);
        }
        frontier = next;
    }
    let cut = frontier.iter().any(|t| !redexes(t).is_empty());
    (seen, cut)
}

/// One step of normal-order reduction (contract the leftmost-outermost
/// redex), or `None` for a normal form.
pub fn normal_step(t: &Term) -> Option<Term> {
    let rs = redexes(t);
    rs.first().map(|r| step(t, r))
}

/// Normal-order reduction trace of at most `fuel` steps, starting with the
/// term itself. The flag is true when the last term still has a redex.
pub fn normal_trace(t: &Term, fuel: usize) -> (Vec<Term>, bool) {
    let mut trace = vec![t.clone()];
    for _ in 0..fuel {
        match normal_step(trace.last().expect("trace is never empty")) {
            Some(next) => trace.push(next),
            None => return (trace, false),
        }
    }
    let exhausted = !redexes(trace.last().expect("trace is never empty")).is_empty();
    (trace, exhausted)
}

/// Joinability of two terms: both breadth-first reachable sets are expanded
/// up to `fuel` and intersected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinOutcome {
    Joins,
    DoesNotJoin,
    FuelExhausted,
}

pub fn joinable(t1: &Term, t2: &Term, fuel: usize, node_budget: usize) -> JoinOutcome {
    let (set1, cut1) = reachable(t1, fuel, node_budget);
    let (set2, cut2) = reachable(t2, fuel, node_budget);
    if set1.intersection(&set2).next().is_some() {
        JoinOutcome::Joins
    } else if cut1 || cut2 {
        JoinOutcome::FuelExhausted
    } else {
        JoinOutcome::DoesNotJoin
    }
}

/// `\z. z t s`, the footnote pair encoding applied to `t` and `s`, with `z`
/// the least variable not occurring in either component.
pub fn encode_pair(t: &Term, s: &Term) -> Term {
    let mut avoid = vars_of_term(t);
    avoid.extend(vars_of_term(s));
    let z = fresh_var(&avoid);
    Term::lam(z, Term::app(Term::app(Term::Var(z), t.clone()), s.clone()))
}

/// First projection `\z1. \z2. z1`.
pub fn proj1() -> Term {
    Term::lam(Variable(0), Term::lam(Variable(1), Term::var(0)))
}

/// Second projection `\z1. \z2. z2`.
pub fn proj2() -> Term {
    Term::lam(Variable(0), Term::lam(Variable(1), Term::var(1)))
}

/// The chosen list terminator `\x. \y. y`.
pub fn encode_nil() -> Term {
    Term::lam(Variable(0), Term::lam(Variable(1), Term::var(1)))
}

/// Lists as right-nested pairs ending in [`encode_nil`].
pub fn encode_list(items: &[Term]) -> Term {
    let mut acc = encode_nil();
    for item in items.iter().rev() {
        acc = encode_pair(item, &acc);
    }
    acc
}

/// Church numeral `\f. \x. f (f ... (f x))`.
pub fn church_numeral(n: u64) -> Term {
    let f = Variable(0);
    let x = Variable(1);
    let mut body = Term::Var(x);
    for _ in 0..n {
        body = Term::app(Term::Var(f), body);
    }
    Term::lam(f, Term::lam(x, body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_term, SymbolTable};

    fn term(text: &str, st: &mut SymbolTable) -> Term {
        parse_term(text, st).unwrap()
    }

    #[test]
    fn subst_base_clauses() {
        let mut st = SymbolTable::new();
        let x = st.intern_var("x");
        let s = term("s t", &mut st);
        // x^{s/x} = s
        assert_eq!(term_subst(&Term::Var(x), &s, x), s);
        // (\x. t)^{s/x} = \x. t
        let lam = term(r"\x. x y", &mut st);
        assert_eq!(term_subst(&lam, &s, x), lam);
        // (!t)^{s/x} = !(t^{s/x})
        let banged = Term::bang(Term::Var(x));
        assert_eq!(term_subst(&banged, &s, x), Term::bang(s.clone()));
    }

    #[test]
    fn subst_avoids_capture() {
        let mut st = SymbolTable::new();
        let x = st.intern_var("x");
        let y = st.intern_var("y");
        // (\y. x)^{y/x} = \z. y with z fresh
        let t = Term::lam(y, Term::Var(x));
        let got = term_subst(&t, &Term::Var(y), x);
        match &got {
            Term::Lam(z, body) => {
                assert_ne!(*z, y);
                assert_eq!(**body, Term::Var(y));
            }
            other => panic!("expected a lambda, got {other:?}"),
        }
        // free variables of the result: (FV(\y. x) \ {x}) union FV(y)
        let expected: BTreeSet<_> = [y].into();
        assert_eq!(free_vars_term(&got), expected);
    }

    #[test]
    fn redex_enumeration_is_leftmost_outermost() {
        let mut st = SymbolTable::new();
        // (\x. x) y: one redex at the root
        let t = term(r"(\x. x) y", &mut st);
        assert_eq!(redexes(&t), vec![RedexOccurrence { path: vec![] }]);
        // \w. ((\x. x) y): one redex under the binder
        let t = term(r"\w. (\x. x) y", &mut st);
        assert_eq!(redexes(&t), vec![RedexOccurrence { path: vec![0] }]);
        // y z: no redex
        let t = term("y z", &mut st);
        assert!(redexes(&t).is_empty());
    }

    #[test]
    fn redexes_agree_with_subterm_scan() {
        // oracle: walk every subterm and test the redex shape directly
        fn scan(t: &Term, path: &mut Path, out: &mut Vec<Path>) {
            if let Term::App(f, _) = t {
                if matches!(f.as_ref(), Term::Lam(..)) {
                    out.push(path.clone());
                }
            }
            match t {
                Term::Var(_) => {}
                Term::App(f, a) => {
                    path.push(0);
                    scan(f, path, out);
                    path.pop();
                    path.push(1);
                    scan(a, path, out);
                    path.pop();
                }
                Term::Lam(_, b) | Term::Bang(b) => {
                    path.push(0);
                    scan(b, path, out);
                    path.pop();
                }
            }
        }
        let mut st = SymbolTable::new();
        for text in [
            r"(\x. x x) ((\y. y) z)",
            r"\w. (\x. x) ((\y. w) w)",
            r"!((\x. x) y) z",
        ] {
            let t = term(text, &mut st);
            let mut expected = Vec::new();
            scan(&t, &mut Vec::new(), &mut expected);
            let got: Vec<Path> = redexes(&t).into_iter().map(|r| r.path).collect();
            assert_eq!(got, expected, "on {text}");
        }
    }

    #[test]
    fn step_contracts_only_the_addressed_redex() {
        let mut st = SymbolTable::new();
        let t = term(r"(\x. x) y", &mut st);
        let y = st.intern_var("y");
        assert_eq!(step(&t, &RedexOccurrence { path: vec![] }), Term::Var(y));

        // (\x. \y. \z. z x y) t at the root -> \y. \z. z t y
        let t = term(r"(\x. \y. \z. z x y) t", &mut st);
        let got = step(&t, &RedexOccurrence { path: vec![] });
        let expected = term(r"\y. \z. z t y", &mut st);
        assert_eq!(got, expected);

        // \w. ((\x. x) y) at the inner position -> \w. y
        let t = term(r"\w. (\x. x) y", &mut st);
        let got = step(&t, &RedexOccurrence { path: vec![0] });
        assert_eq!(got, term(r"\w. y", &mut st));
    }

    #[test]
    fn reduces_to_is_reflexive_and_detects_divergence() {
        let mut st = SymbolTable::new();
        let t = term(r"(\x. x) y", &mut st);
        assert_eq!(reduces_to(&t, &t, 0), ReduceOutcome::Reduces);
        // Omega reduces only to itself
        let omega = term(r"(\x. x x) (\x. x x)", &mut st);
        let y = term("y", &mut st);
        assert_eq!(reduces_to(&omega, &y, 30), ReduceOutcome::FuelExhausted);
        assert_eq!(reducts(&omega), vec![omega.clone()]);
        // a normal form conclusively fails to reduce elsewhere
        let z = term("z", &mut st);
        assert_eq!(reduces_to(&y, &z, 10), ReduceOutcome::DoesNotReduce);
    }

    #[test]
    fn pair_encoding_projects_both_components() {
        let mut st = SymbolTable::new();
        let t = term("t", &mut st);
        let s = term("s", &mut st);
        let pair = encode_pair(&t, &s);
        let first = Term::app(pair.clone(), proj1());
        assert_eq!(reduces_to(&first, &t, 10), ReduceOutcome::Reduces);
        let second = Term::app(pair, proj2());
        assert_eq!(reduces_to(&second, &s, 10), ReduceOutcome::Reduces);
    }

    #[test]
    fn pair_operator_applied_reduces_to_encoding() {
        let mut st = SymbolTable::new();
        // (\x. \y. \z. z x y) t s |->* \z. z t s
        let applied = term(r"(\x. \y. \z. z x y) t s", &mut st);
        let t = term("t", &mut st);
        let s = term("s", &mut st);
        let pair = encode_pair(&t, &s);
        assert_eq!(reduces_to(&applied, &pair, 10), ReduceOutcome::Reduces);
    }

    #[test]
    fn nil_is_the_chosen_terminator() {
        let mut st = SymbolTable::new();
        assert_eq!(encode_list(&[]), term(r"\x. \y. y", &mut st));
    }
}
