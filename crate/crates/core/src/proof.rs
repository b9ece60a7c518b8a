//! Natural-deduction derivations over multiset sequents and the
//! rule-by-rule checker.
//!
//! Contexts are explicit multisets with explicit structural nodes (`weak`,
//! `contr`, `dup`). Rule parameters that would otherwise require
//! higher-order matching (instantiation terms, eigenvariables, substitution
//! schemes, agents, trust subjects) are stored in the proof object, so
//! checking a node is a pointwise schema comparison.

use crate::sexpr::{self, Sexpr};
use crate::syntax::{
    free_vars_formula, occurs_in_formula, parse_formula, parse_term, print_formula, print_term,
    subst_ident, subst_quant, subst_quant_lint, vars_of_formula, AgentName, Formula, SymbolTable,
    Term, Variable,
};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// A finite multiset of formulae.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Multiset(BTreeMap<Formula, usize>);

impl Multiset {
    pub fn new() -> Multiset {
        Multiset::default()
    }

    pub fn singleton(f: Formula) -> Multiset {
        let mut m = Multiset::new();
        m.insert(f);
        m
    }

    pub fn insert(&mut self, f: Formula) {
        *self.0.entry(f).or_insert(0) += 1;
    }

    pub fn count(&self, f: &Formula) -> usize {
        self.0.get(f).copied().unwrap_or(0)
    }

    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut out = self.clone();
        for (f, n) in &other.0 {
            *out.0.entry(f.clone()).or_insert(0) += n;
        }
        out
    }

    /// `self` plus one occurrence of `f`.
    pub fn with(&self, f: Formula) -> Multiset {
        let mut out = self.clone();
        out.insert(f);
        out
    }

    /// Multiset inclusion.
    pub fn includes(&self, other: &Multiset) -> bool {
        other.0.iter().all(|(f, n)| self.count(f) >= *n)
    }

    /// Distinct formulae present.
    pub fn support(&self) -> impl Iterator<Item = &Formula> {
        self.0.keys()
    }

    /// Occurrences with multiplicity.
    pub fn iter(&self) -> impl Iterator<Item = (&Formula, usize)> {
        self.0.iter().map(|(f, n)| (f, *n))
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self` minus one occurrence of `f`, if present.
    pub fn without(&self, f: &Formula) -> Option<Multiset> {
        let mut out = self.clone();
        match out.0.get_mut(f) {
            Some(n) if *n > 1 => {
                *n -= 1;
                Some(out)
            }
            Some(_) => {
                out.0.remove(f);
                Some(out)
            }
            None => None,
        }
    }
}

impl FromIterator<Formula> for Multiset {
    fn from_iter<I: IntoIterator<Item = Formula>>(iter: I) -> Multiset {
        let mut m = Multiset::new();
        for f in iter {
            m.insert(f);
        }
        m
    }
}

/// A sequent `Gamma => A` with a multiset context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequent {
    pub context: Multiset,
    pub conclusion: Formula,
}

impl Sequent {
    pub fn new(context: Multiset, conclusion: Formula) -> Sequent {
        Sequent {
            context,
            conclusion,
        }
    }

    pub fn render(&self, st: &SymbolTable) -> String {
        let mut parts = Vec::new();
        for (f, n) in self.context.iter() {
            for _ in 0..n {
                parts.push(print_formula(f, st));
            }
        }
        format!("{} => {}", parts.join(", "), print_formula(&self.conclusion, st))
    }
}

/// Rule tags with their node-local parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Ax,
    ImpI,
    ImpE,
    Efq,
    Dne,
    AndI,
    AndE1,
    AndE2,
    AllI { eigen: Variable },
    AllE { term: Term },
    EqRefl,
    EqSym,
    EqTrans,
    EqSubst { scheme: Formula, var: Variable },
    KNec { agent: AgentName },
    KDist,
    KT,
    K5,
    JApp,
    JT,
    JBang,
    JEqL { scheme: Formula, var: Variable },
    JEqR { scheme: Formula, var: Variable },
    TIntro { subject: Term },
    TElim { fresh: Variable },
    NecKt { agent: AgentName },
    Weak,
    Contr,
    Dup,
}

impl Rule {
    pub fn tag(&self) -> &'static str {
        match self {
            Rule::Ax => "ax",
            Rule::ImpI => "imp-i",
            Rule::ImpE => "imp-e",
            Rule::Efq => "efq",
            Rule::Dne => "dne",
            Rule::AndI => "and-i",
            Rule::AndE1 => "and-e1",
            Rule::AndE2 => "and-e2",
            Rule::AllI { .. } => "all-i",
            Rule::AllE { .. } => "all-e",
            Rule::EqRefl => "eq-refl",
            Rule::EqSym => "eq-sym",
            Rule::EqTrans => "eq-trans",
            Rule::EqSubst { .. } => "eq-subst",
            Rule::KNec { .. } => "k-nec",
            Rule::KDist => "k-dist",
            Rule::KT => "k-t",
            Rule::K5 => "k-5",
            Rule::JApp => "j-app",
            Rule::JT => "j-t",
            Rule::JBang => "j-bang",
            Rule::JEqL { .. } => "j-eq-l",
            Rule::JEqR { .. } => "j-eq-r",
            Rule::TIntro { .. } => "t-intro",
            Rule::TElim { .. } => "t-elim",
            Rule::NecKt { .. } => "nec-kt",
            Rule::Weak => "weak",
            Rule::Contr => "contr",
            Rule::Dup => "dup",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Rule::Ax | Rule::EqRefl => 0,
            Rule::ImpE
            | Rule::AndI
            | Rule::EqTrans
            | Rule::EqSubst { .. }
            | Rule::KDist
            | Rule::JApp
            | Rule::JEqL { .. }
            | Rule::JEqR { .. } => 2,
            _ => 1,
        }
    }
}

/// A derivation tree: a rule application with premise subderivations and
/// the concluded sequent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub premises: Vec<Derivation>,
    pub sequent: Sequent,
}

impl Derivation {
    pub fn new(rule: Rule, premises: Vec<Derivation>, sequent: Sequent) -> Derivation {
        Derivation {
            rule,
            premises,
            sequent,
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.premises.iter().map(|p| p.node_count()).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckReason {
    SchemaMismatch,
    SideConditionViolated(String),
    SubstitutionMismatch,
}

/// The first failing node: premise-index path from the root plus a reason.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rule `{rule}` at path {path:?}: {detail}")]
pub struct CheckFailure {
    pub path: Vec<usize>,
    pub rule: &'static str,
    pub reason: CheckReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckWarning {
    pub path: Vec<usize>,
    pub msg: String,
}

/// Outcome of checking a derivation: ok, or the first failing node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub failure: Option<CheckFailure>,
    pub warnings: Vec<CheckWarning>,
}

impl CheckReport {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Check every node of a derivation against its rule schema. Premises are
/// checked before their parent, left to right, so the reported failure is
/// the leftmost innermost one.
pub fn check(d: &Derivation) -> CheckReport {
    let mut warnings = Vec::new();
    let mut path = Vec::new();
    let failure = walk(d, &mut path, &mut warnings).err();
    CheckReport { failure, warnings }
}

fn walk(
    d: &Derivation,
    path: &mut Vec<usize>,
    warnings: &mut Vec<CheckWarning>,
) -> Result<(), CheckFailure> {
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        walk(p, path, warnings)?;
        path.pop();
    }
    check_node(d, path, warnings)
}

fn fail(
    d: &Derivation,
    path: &[usize],
    reason: CheckReason,
    detail: impl Into<String>,
) -> CheckFailure {
    CheckFailure {
        path: path.to_vec(),
        rule: d.rule.tag(),
        reason,
        detail: detail.into(),
    }
}

fn schema(
    d: &Derivation,
    path: &[usize],
    detail: impl Into<String>,
) -> CheckFailure {
    fail(d, path, CheckReason::SchemaMismatch, detail)
}

fn side(
    d: &Derivation,
    path: &[usize],
    name: &str,
    detail: impl Into<String>,
) -> CheckFailure {
    fail(
        d,
        path,
        CheckReason::SideConditionViolated(name.to_string()),
        detail,
    )
}

fn subst_fail(d: &Derivation, path: &[usize], detail: impl Into<String>) -> CheckFailure {
    fail(d, path, CheckReason::SubstitutionMismatch, detail)
}

fn check_node(
    d: &Derivation,
    path: &[usize],
    warnings: &mut Vec<CheckWarning>,
) -> Result<(), CheckFailure> {
    if d.premises.len() != d.rule.arity() {
        return Err(schema(
            d,
            path,
            format!(
                "rule `{}` takes {} premise(s), found {}",
                d.rule.tag(),
                d.rule.arity(),
                d.premises.len()
            ),
        ));
    }
    let ctx = &d.sequent.context;
    let concl = &d.sequent.conclusion;
    let prem = |i: usize| &d.premises[i].sequent;
    let same_ctx_union = |d: &Derivation, path: &[usize]| -> Result<(), CheckFailure> {
        let union = prem(0).context.union(&prem(1).context);
        if *ctx != union {
            return Err(schema(
                d,
                path,
                "conclusion context is not the multiset union of the premise contexts",
            ));
        }
        Ok(())
    };

    match &d.rule {
        Rule::Ax => {
            if *ctx != Multiset::singleton(concl.clone()) {
                return Err(schema(d, path, "axiom requires the context `A => A`"));
            }
        }
        Rule::ImpI => {
            let (a, b) = match concl {
                Formula::Imp(a, b) => (a.as_ref(), b.as_ref()),
                _ => return Err(schema(d, path, "conclusion is not an implication")),
            };
            if prem(0).conclusion != *b {
                return Err(schema(d, path, "premise does not conclude the consequent"));
            }
            if prem(0).context != ctx.with(a.clone()) {
                return Err(schema(
                    d,
                    path,
                    "premise context must be the conclusion context plus one antecedent occurrence",
                ));
            }
        }
        Rule::ImpE => {
            same_ctx_union(d, path)?;
            match &prem(0).conclusion {
                Formula::Imp(a, b) => {
                    if **a != prem(1).conclusion {
                        return Err(schema(d, path, "minor premise does not match the antecedent"));
                    }
                    if **b != *concl {
                        return Err(schema(d, path, "conclusion does not match the consequent"));
                    }
                }
                _ => return Err(schema(d, path, "major premise is not an implication")),
            }
        }
        Rule::Efq => {
            if prem(0).conclusion != Formula::Bot {
                return Err(schema(d, path, "premise must conclude bot"));
            }
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            if !concl.is_atomic() {
                return Err(side(d, path, "atomic", "ex falso concludes only atomic formulae"));
            }
        }
        Rule::Dne => {
            let expected = Formula::neg(Formula::neg(concl.clone()));
            if prem(0).conclusion != expected {
                return Err(schema(d, path, "premise must conclude the double negation"));
            }
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
        }
        Rule::AndI => {
            same_ctx_union(d, path)?;
            match concl {
                Formula::And(a, b) => {
                    if prem(0).conclusion != **a || prem(1).conclusion != **b {
                        return Err(schema(d, path, "premises do not match the conjuncts"));
                    }
                }
                _ => return Err(schema(d, path, "conclusion is not a conjunction")),
            }
        }
        Rule::AndE1 | Rule::AndE2 => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            match &prem(0).conclusion {
                Formula::And(a, b) => {
                    let picked = if matches!(d.rule, Rule::AndE1) { a } else { b };
                    if **picked != *concl {
                        return Err(schema(d, path, "conclusion is not the selected conjunct"));
                    }
                }
                _ => return Err(schema(d, path, "premise is not a conjunction")),
            }
        }
        Rule::AllI { eigen } => {
            let (x, body) = match concl {
                Formula::Forall(x, body) => (*x, body.as_ref()),
                _ => return Err(schema(d, path, "conclusion is not a universal formula")),
            };
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            let instantiated = subst_quant(body, &Term::Var(*eigen), x);
            if prem(0).conclusion != instantiated {
                return Err(subst_fail(
                    d,
                    path,
                    "premise does not conclude the eigenvariable instance of the body",
                ));
            }
            for f in ctx.support() {
                if free_vars_formula(f).contains(eigen) {
                    return Err(side(
                        d,
                        path,
                        "eigenvariable",
                        "eigenvariable occurs free in the context",
                    ));
                }
            }
            if *eigen != x && free_vars_formula(concl).contains(eigen) {
                return Err(side(
                    d,
                    path,
                    "eigenvariable",
                    "eigenvariable occurs free in the quantified formula",
                ));
            }
        }
        Rule::AllE { term } => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            let (x, body) = match &prem(0).conclusion {
                Formula::Forall(x, body) => (*x, body.as_ref()),
                _ => return Err(schema(d, path, "premise is not a universal formula")),
            };
            if *concl != subst_quant(body, term, x) {
                return Err(subst_fail(
                    d,
                    path,
                    "conclusion is not the [t/x] instance of the premise body",
                ));
            }
            if let Some(lint) = subst_quant_lint(body, term, x) {
                warnings.push(CheckWarning {
                    path: path.to_vec(),
                    msg: format!(
                        "all-e instantiates with a compound term containing the bound variable x{}; \
                         the substitution descends without renaming",
                        lint.binder.0
                    ),
                });
            }
        }
        Rule::EqRefl => {
            if !ctx.is_empty() {
                return Err(schema(d, path, "reflexivity takes an empty context"));
            }
            match concl {
                Formula::Eq(l, r) if l == r => {}
                _ => return Err(schema(d, path, "conclusion must be `t = t`")),
            }
        }
        Rule::EqSym => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            match (&prem(0).conclusion, concl) {
                (Formula::Eq(t, s), Formula::Eq(s2, t2)) if t == t2 && s == s2 => {}
                _ => return Err(schema(d, path, "conclusion must flip the premise identity")),
            }
        }
        Rule::EqTrans => {
            same_ctx_union(d, path)?;
            match (&prem(0).conclusion, &prem(1).conclusion, concl) {
                (Formula::Eq(u, t1), Formula::Eq(t2, v1), Formula::Eq(u2, v2))
                    if t1 == t2 && u == u2 && v1 == v2 => {}
                _ => {
                    return Err(schema(
                        d,
                        path,
                        "premises must share the middle term and the conclusion must join the ends",
                    ))
                }
            }
        }
        Rule::EqSubst { scheme, var } => {
            same_ctx_union(d, path)?;
            let (t, s) = match &prem(0).conclusion {
                Formula::Eq(t, s) => (t, s),
                _ => return Err(schema(d, path, "first premise is not an identity")),
            };
            if prem(1).conclusion != subst_ident(scheme, t, *var) {
                return Err(subst_fail(
                    d,
                    path,
                    "second premise is not the (t/x) instance of the scheme",
                ));
            }
            if *concl != subst_ident(scheme, s, *var) {
                return Err(subst_fail(
                    d,
                    path,
                    "conclusion is not the (s/x) instance of the scheme",
                ));
            }
        }
        Rule::KNec { agent } => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            if *concl != Formula::know(*agent, prem(0).conclusion.clone()) {
                return Err(schema(d, path, "conclusion must prefix the premise with K"));
            }
            for f in ctx.support() {
                match f {
                    Formula::K(a, _) if a == agent => {}
                    _ => {
                        return Err(side(
                            d,
                            path,
                            "k-context",
                            "every context formula must be K-prefixed for the same agent",
                        ))
                    }
                }
            }
        }
        Rule::NecKt { agent } => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            if *concl != Formula::know(*agent, prem(0).conclusion.clone()) {
                return Err(schema(d, path, "conclusion must prefix the premise with K"));
            }
            for f in ctx.support() {
                match f {
                    Formula::K(a, _) if a == agent => {}
                    Formula::Trust(a, _, _) if a == agent => {}
                    _ => {
                        return Err(side(
                            d,
                            path,
                            "kt-context",
                            "every context formula must be K- or T-prefixed for the same agent",
                        ))
                    }
                }
            }
        }
        Rule::KDist => {
            same_ctx_union(d, path)?;
            let (a1, inner) = match &prem(0).conclusion {
                Formula::K(a, inner) => (a, inner.as_ref()),
                _ => return Err(schema(d, path, "major premise is not a K formula")),
            };
            let (ante, cons) = match inner {
                Formula::Imp(x, y) => (x.as_ref(), y.as_ref()),
                _ => return Err(schema(d, path, "major premise is not K of an implication")),
            };
            match &prem(1).conclusion {
                Formula::K(a2, body) if a2 == a1 && **body == *ante => {}
                _ => return Err(schema(d, path, "minor premise must be K of the antecedent")),
            }
            if *concl != Formula::know(*a1, cons.clone()) {
                return Err(schema(d, path, "conclusion must be K of the consequent"));
            }
        }
        Rule::KT => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            match &prem(0).conclusion {
                Formula::K(_, body) if **body == *concl => {}
                _ => return Err(schema(d, path, "premise must be K of the conclusion")),
            }
        }
        Rule::K5 => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            let inner = match &prem(0).conclusion {
                Formula::Imp(inner, bot) if **bot == Formula::Bot => inner.as_ref(),
                _ => return Err(schema(d, path, "premise must be a negated K formula")),
            };
            let a = match inner {
                Formula::K(a, _) => *a,
                _ => return Err(schema(d, path, "premise must be a negated K formula")),
            };
            let expected = Formula::know(a, prem(0).conclusion.clone());
            if *concl != expected {
                return Err(schema(
                    d,
                    path,
                    "conclusion must be K of the negated knowledge premise",
                ));
            }
        }
        Rule::JApp => {
            same_ctx_union(d, path)?;
            let (j, inner) = match &prem(0).conclusion {
                Formula::Just(j, inner) => (j, inner.as_ref()),
                _ => return Err(schema(d, path, "major premise is not a justification")),
            };
            let (ante, cons) = match inner {
                Formula::Imp(x, y) => (x.as_ref(), y.as_ref()),
                _ => {
                    return Err(schema(
                        d,
                        path,
                        "major premise does not justify an implication",
                    ))
                }
            };
            let k = match &prem(1).conclusion {
                Formula::Just(k, body) if **body == *ante => k,
                _ => {
                    return Err(schema(
                        d,
                        path,
                        "minor premise must justify the antecedent",
                    ))
                }
            };
            let expected = Formula::just(Term::app(j.clone(), k.clone()), cons.clone());
            if *concl != expected {
                return Err(schema(
                    d,
                    path,
                    "conclusion evidence must be the syntactic application jk",
                ));
            }
        }
        Rule::JT => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            match &prem(0).conclusion {
                Formula::Just(_, body) if **body == *concl => {}
                _ => return Err(schema(d, path, "premise must justify the conclusion")),
            }
        }
        Rule::JBang => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            let (j, body) = match &prem(0).conclusion {
                Formula::Just(j, body) => (j, body.as_ref()),
                _ => return Err(schema(d, path, "premise is not a justification")),
            };
            let expected = Formula::just(
                Term::bang(j.clone()),
                Formula::just(j.clone(), body.clone()),
            );
            if *concl != expected {
                return Err(schema(
                    d,
                    path,
                    "conclusion must be !j : (j : A) for the premise j : A",
                ));
            }
        }
        Rule::JEqL { scheme, var } | Rule::JEqR { scheme, var } => {
            same_ctx_union(d, path)?;
            let ident = match &prem(0).conclusion {
                Formula::Just(_, body) => body.as_ref(),
                _ => return Err(schema(d, path, "first premise must justify an identity")),
            };
            let (t, s) = match (ident, &d.rule) {
                (Formula::Eq(t, s), Rule::JEqL { .. }) => (t, s),
                (Formula::Eq(s, t), Rule::JEqR { .. }) => (t, s),
                _ => return Err(schema(d, path, "first premise must justify an identity")),
            };
            let j = match &prem(1).conclusion {
                Formula::Just(j, body) if **body == subst_ident(scheme, t, *var) => j,
                Formula::Just(..) => {
                    return Err(subst_fail(
                        d,
                        path,
                        "second premise is not the (t/x) instance of the scheme",
                    ))
                }
                _ => return Err(schema(d, path, "second premise is not a justification")),
            };
            let expected = Formula::just(j.clone(), subst_ident(scheme, s, *var));
            if *concl != expected {
                return Err(subst_fail(
                    d,
                    path,
                    "conclusion is not the (s/x) instance under the same evidence",
                ));
            }
        }
        Rule::TIntro { subject } => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            let (a, body) = match &prem(0).conclusion {
                Formula::K(a, inner) => match inner.as_ref() {
                    Formula::Just(_, body) => (*a, body.as_ref()),
                    _ => return Err(schema(d, path, "premise must be K of a justification")),
                },
                _ => return Err(schema(d, path, "premise must be K of a justification")),
            };
            if *concl != Formula::trust(a, subject.clone(), body.clone()) {
                return Err(schema(d, path, "conclusion must be the trust formula"));
            }
            if !occurs_in_formula(subject, body) {
                return Err(side(
                    d,
                    path,
                    "subject-occurs",
                    "trust subject does not occur in the body",
                ));
            }
        }
        Rule::TElim { fresh } => {
            if prem(0).context != *ctx {
                return Err(schema(d, path, "context must be unchanged"));
            }
            let (a, body) = match &prem(0).conclusion {
                Formula::Trust(a, _, body) => (*a, body.as_ref()),
                _ => return Err(schema(d, path, "premise is not a trust formula")),
            };
            let expected = Formula::know(a, Formula::just(Term::Var(*fresh), body.clone()));
            if *concl != expected {
                return Err(schema(
                    d,
                    path,
                    "conclusion must be K of the fresh-variable justification",
                ));
            }
            if vars_of_formula(body).contains(fresh) {
                return Err(side(
                    d,
                    path,
                    "fresh-variable",
                    "the fresh variable occurs in the body",
                ));
            }
            for f in ctx.support() {
                if vars_of_formula(f).contains(fresh) {
                    return Err(side(
                        d,
                        path,
                        "fresh-variable",
                        "the fresh variable occurs in the context",
                    ));
                }
            }
        }
        Rule::Weak => {
            if prem(0).conclusion != *concl {
                return Err(schema(d, path, "conclusion must be unchanged"));
            }
            if !ctx.includes(&prem(0).context) {
                return Err(schema(
                    d,
                    path,
                    "weakening may only add formula occurrences",
                ));
            }
        }
        Rule::Contr => {
            if prem(0).conclusion != *concl {
                return Err(schema(d, path, "conclusion must be unchanged"));
            }
            let p = &prem(0).context;
            if !p.includes(ctx) {
                return Err(schema(
                    d,
                    path,
                    "contraction may only erase formula occurrences",
                ));
            }
            let support_kept = p.support().all(|f| ctx.count(f) >= 1);
            if !support_kept {
                return Err(schema(
                    d,
                    path,
                    "contraction must keep at least one occurrence of each formula",
                ));
            }
        }
        Rule::Dup => {
            if prem(0).conclusion != *concl {
                return Err(schema(d, path, "conclusion must be unchanged"));
            }
            let p = &prem(0).context;
            if !ctx.includes(p) {
                return Err(schema(d, path, "duplication may only add occurrences"));
            }
            let no_new = ctx.support().all(|f| p.count(f) >= 1);
            if !no_new {
                return Err(schema(
                    d,
                    path,
                    "duplication may not introduce new formulae",
                ));
            }
        }
    }
    Ok(())
}

/// Why a derivability query failed before it could be answered.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DerivesError {
    #[error("unchecked witness: {0}")]
    UncheckedWitness(CheckFailure),
}

/// `hyps |- goal` via an explicit witness derivation: the witness must
/// check, conclude the goal, and use only hypotheses from `hyps`.
pub fn derives(
    hyps: &BTreeSet<Formula>,
    goal: &Formula,
    witness: &Derivation,
) -> Result<bool, DerivesError> {
    let report = check(witness);
    if let Some(failure) = report.failure {
        return Err(DerivesError::UncheckedWitness(failure));
    }
    Ok(witness.sequent.conclusion == *goal
        && witness.sequent.context.support().all(|f| hyps.contains(f)))
}

/// Result of trust desugaring: the rewritten tree and any trust uses that
/// could not be eliminated.
#[derive(Debug, Clone)]
pub struct DesugarReport {
    pub derivation: Derivation,
    pub residual: Vec<Formula>,
}

/// Replace trust sugar by its K/justification definition: `t-intro` nodes
/// are spliced out (the conclusion becomes the premise's `K[a] j:A`),
/// `t-elim` nodes become identities once the eliminated hypothesis is
/// rewritten to its fresh-variable `K[a] x:A` form, and `nec-kt` nodes
/// whose contexts become purely K-shaped are retagged `k-nec`. Trust
/// formulae that survive (nested uses, conflicting eliminations) are
/// reported.
pub fn desugar_trust(d: &Derivation) -> DesugarReport {
    let mut mapping: BTreeMap<Formula, Formula> = BTreeMap::new();
    let mut residual: Vec<Formula> = Vec::new();
    collect_mapping(d, &mut mapping, &mut residual);
    let derivation = rewrite(d, &mapping);
    scan_residual(&derivation, &mut residual);
    residual.sort();
    residual.dedup();
    DesugarReport {
        derivation,
        residual,
    }
}

fn collect_mapping(
    d: &Derivation,
    mapping: &mut BTreeMap<Formula, Formula>,
    residual: &mut Vec<Formula>,
) {
    let mut record = |trust: &Formula, replacement: Formula, residual: &mut Vec<Formula>| {
        match mapping.get(trust) {
            None => {
                mapping.insert(trust.clone(), replacement);
            }
            Some(existing) if *existing == replacement => {}
            Some(_) => residual.push(trust.clone()),
        }
    };
    match &d.rule {
        Rule::TElim { fresh } => {
            if let Formula::Trust(a, _, body) = &d.premises[0].sequent.conclusion {
                let replacement =
                    Formula::know(*a, Formula::just(Term::Var(*fresh), (**body).clone()));
                record(&d.premises[0].sequent.conclusion, replacement, residual);
            }
        }
        Rule::TIntro { .. } => {
            record(
                &d.sequent.conclusion,
                d.premises[0].sequent.conclusion.clone(),
                residual,
            );
        }
        _ => {}
    }
    for p in &d.premises {
        collect_mapping(p, mapping, residual);
    }
}

fn map_formula(f: &Formula, mapping: &BTreeMap<Formula, Formula>) -> Formula {
    mapping.get(f).cloned().unwrap_or_else(|| f.clone())
}

fn map_sequent(s: &Sequent, mapping: &BTreeMap<Formula, Formula>) -> Sequent {
    let mut ctx = Multiset::new();
    for (f, n) in s.context.iter() {
        let mapped = map_formula(f, mapping);
        for _ in 0..n {
            ctx.insert(mapped.clone());
        }
    }
    Sequent::new(ctx, map_formula(&s.conclusion, mapping))
}

fn rewrite(d: &Derivation, mapping: &BTreeMap<Formula, Formula>) -> Derivation {
    let premises: Vec<Derivation> = d.premises.iter().map(|p| rewrite(p, mapping)).collect();
    let sequent = map_sequent(&d.sequent, mapping);
    match &d.rule {
        Rule::TElim { .. } | Rule::TIntro { .. } => {
            let spliced = premises.into_iter().next().expect("unary rule");
            if spliced.sequent == sequent {
                return spliced;
            }
            // inconsistent elimination; keep the node for the residual report
            Derivation::new(d.rule.clone(), vec![spliced], sequent)
        }
        Rule::NecKt { agent } => {
            let all_k = sequent
                .context
                .support()
                .all(|f| matches!(f, Formula::K(a, _) if a == agent));
            let rule = if all_k {
                Rule::KNec { agent: *agent }
            } else {
                Rule::NecKt { agent: *agent }
            };
            Derivation::new(rule, premises, sequent)
        }
        rule => Derivation::new(rule.clone(), premises, sequent),
    }
}

fn formula_mentions_trust(f: &Formula) -> bool {
    match f {
        Formula::Trust(..) => true,
        Formula::Bot | Formula::Eq(..) | Formula::Pred(..) => false,
        Formula::Imp(a, b) | Formula::And(a, b) => {
            formula_mentions_trust(a) || formula_mentions_trust(b)
        }
        Formula::Forall(_, body) | Formula::K(_, body) | Formula::Just(_, body) => {
            formula_mentions_trust(body)
        }
    }
}

fn scan_residual(d: &Derivation, residual: &mut Vec<Formula>) {
    for f in d
        .sequent
        .context
        .support()
        .chain(std::iter::once(&d.sequent.conclusion))
    {
        if formula_mentions_trust(f) {
            residual.push(f.clone());
        }
    }
    for p in &d.premises {
        scan_residual(p, residual);
    }
}

/// Constructors that compute each node's sequent from its premises. The
/// checker validates the result independently, so a wrongly built tree is
/// caught by [`check`] rather than silently accepted.
pub mod build {
    use super::*;

    pub fn ax(f: Formula) -> Derivation {
        Derivation::new(
            Rule::Ax,
            vec![],
            Sequent::new(Multiset::singleton(f.clone()), f),
        )
    }

    pub fn imp_i(antecedent: Formula, prem: Derivation) -> Derivation {
        let ctx = prem
            .sequent
            .context
            .without(&antecedent)
            .unwrap_or_else(Multiset::new);
        let concl = Formula::imp(antecedent, prem.sequent.conclusion.clone());
        Derivation::new(Rule::ImpI, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn imp_e(major: Derivation, minor: Derivation) -> Derivation {
        let ctx = major.sequent.context.union(&minor.sequent.context);
        let concl = match &major.sequent.conclusion {
            Formula::Imp(_, b) => (**b).clone(),
            other => other.clone(),
        };
        Derivation::new(Rule::ImpE, vec![major, minor], Sequent::new(ctx, concl))
    }

    pub fn efq(target: Formula, prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        Derivation::new(Rule::Efq, vec![prem], Sequent::new(ctx, target))
    }

    pub fn dne(prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = match &prem.sequent.conclusion {
            Formula::Imp(inner, _) => match inner.as_ref() {
                Formula::Imp(a, _) => (**a).clone(),
                other => other.clone(),
            },
            other => other.clone(),
        };
        Derivation::new(Rule::Dne, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn and_i(left: Derivation, right: Derivation) -> Derivation {
        let ctx = left.sequent.context.union(&right.sequent.context);
        let concl = Formula::and(
            left.sequent.conclusion.clone(),
            right.sequent.conclusion.clone(),
        );
        Derivation::new(Rule::AndI, vec![left, right], Sequent::new(ctx, concl))
    }

    fn and_e(rule: Rule, prem: Derivation, first: bool) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = match &prem.sequent.conclusion {
            Formula::And(a, b) => {
                if first {
                    (**a).clone()
                } else {
                    (**b).clone()
                }
            }
            other => other.clone(),
        };
        Derivation::new(rule, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn and_e1(prem: Derivation) -> Derivation {
        and_e(Rule::AndE1, prem, true)
    }

    pub fn and_e2(prem: Derivation) -> Derivation {
        and_e(Rule::AndE2, prem, false)
    }

    pub fn all_i(binder: Variable, body: Formula, eigen: Variable, prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        Derivation::new(
            Rule::AllI { eigen },
            vec![prem],
            Sequent::new(ctx, Formula::forall(binder, body)),
        )
    }

    pub fn all_e(term: Term, prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = match &prem.sequent.conclusion {
            Formula::Forall(x, body) => subst_quant(body, &term, *x),
            other => other.clone(),
        };
        Derivation::new(Rule::AllE { term }, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn eq_refl(t: Term) -> Derivation {
        Derivation::new(
            Rule::EqRefl,
            vec![],
            Sequent::new(Multiset::new(), Formula::Eq(t.clone(), t)),
        )
    }

    pub fn eq_sym(prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = match &prem.sequent.conclusion {
            Formula::Eq(t, s) => Formula::Eq(s.clone(), t.clone()),
            other => other.clone(),
        };
        Derivation::new(Rule::EqSym, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn eq_trans(first: Derivation, second: Derivation) -> Derivation {
        let ctx = first.sequent.context.union(&second.sequent.context);
        let concl = match (&first.sequent.conclusion, &second.sequent.conclusion) {
            (Formula::Eq(u, _), Formula::Eq(_, v)) => Formula::Eq(u.clone(), v.clone()),
            _ => first.sequent.conclusion.clone(),
        };
        Derivation::new(Rule::EqTrans, vec![first, second], Sequent::new(ctx, concl))
    }

    pub fn eq_subst(
        scheme: Formula,
        var: Variable,
        ident: Derivation,
        instance: Derivation,
    ) -> Derivation {
        let ctx = ident.sequent.context.union(&instance.sequent.context);
        let concl = match &ident.sequent.conclusion {
            Formula::Eq(_, s) => subst_ident(&scheme, s, var),
            other => other.clone(),
        };
        Derivation::new(
            Rule::EqSubst { scheme, var },
            vec![ident, instance],
            Sequent::new(ctx, concl),
        )
    }

    pub fn k_nec(agent: AgentName, prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = Formula::know(agent, prem.sequent.conclusion.clone());
        Derivation::new(Rule::KNec { agent }, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn nec_kt(agent: AgentName, prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = Formula::know(agent, prem.sequent.conclusion.clone());
        Derivation::new(Rule::NecKt { agent }, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn k_dist(major: Derivation, minor: Derivation) -> Derivation {
        let ctx = major.sequent.context.union(&minor.sequent.context);
        let concl = match &major.sequent.conclusion {
            Formula::K(a, inner) => match inner.as_ref() {
                Formula::Imp(_, b) => Formula::know(*a, (**b).clone()),
                other => other.clone(),
            },
            other => other.clone(),
        };
        Derivation::new(Rule::KDist, vec![major, minor], Sequent::new(ctx, concl))
    }

    pub fn k_t(prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = match &prem.sequent.conclusion {
            Formula::K(_, body) => (**body).clone(),
            other => other.clone(),
        };
        Derivation::new(Rule::KT, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn k_5(prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let agent = match &prem.sequent.conclusion {
            Formula::Imp(inner, _) => match inner.as_ref() {
                Formula::K(a, _) => Some(*a),
                _ => None,
            },
            _ => None,
        };
        let concl = match agent {
            Some(a) => Formula::know(a, prem.sequent.conclusion.clone()),
            None => prem.sequent.conclusion.clone(),
        };
        Derivation::new(Rule::K5, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn j_app(major: Derivation, minor: Derivation) -> Derivation {
        let ctx = major.sequent.context.union(&minor.sequent.context);
        let concl = match (&major.sequent.conclusion, &minor.sequent.conclusion) {
            (Formula::Just(j, inner), Formula::Just(k, _)) => match inner.as_ref() {
                Formula::Imp(_, b) => {
                    Formula::just(Term::app(j.clone(), k.clone()), (**b).clone())
                }
                other => other.clone(),
            },
            _ => major.sequent.conclusion.clone(),
        };
        Derivation::new(Rule::JApp, vec![major, minor], Sequent::new(ctx, concl))
    }

    pub fn j_t(prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = match &prem.sequent.conclusion {
            Formula::Just(_, body) => (**body).clone(),
            other => other.clone(),
        };
        Derivation::new(Rule::JT, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn j_bang(prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = match &prem.sequent.conclusion {
            Formula::Just(j, body) => Formula::just(
                Term::bang(j.clone()),
                Formula::just(j.clone(), (**body).clone()),
            ),
            other => other.clone(),
        };
        Derivation::new(Rule::JBang, vec![prem], Sequent::new(ctx, concl))
    }

    fn j_eq(
        rule_of: impl FnOnce(Formula, Variable) -> Rule,
        left_is_target: bool,
        scheme: Formula,
        var: Variable,
        ident: Derivation,
        instance: Derivation,
    ) -> Derivation {
        let ctx = ident.sequent.context.union(&instance.sequent.context);
        let target = match &ident.sequent.conclusion {
            Formula::Just(_, body) => match body.as_ref() {
                Formula::Eq(l, r) => Some(if left_is_target { l.clone() } else { r.clone() }),
                _ => None,
            },
            _ => None,
        };
        let concl = match (&instance.sequent.conclusion, target) {
            (Formula::Just(j, _), Some(s)) => {
                Formula::just(j.clone(), subst_ident(&scheme, &s, var))
            }
            _ => instance.sequent.conclusion.clone(),
        };
        Derivation::new(
            rule_of(scheme, var),
            vec![ident, instance],
            Sequent::new(ctx, concl),
        )
    }

    /// `j-eq-l`: from `k : t = s` and `j : A(t/x)` conclude `j : A(s/x)`.
    pub fn j_eq_l(
        scheme: Formula,
        var: Variable,
        ident: Derivation,
        instance: Derivation,
    ) -> Derivation {
        j_eq(
            |scheme, var| Rule::JEqL { scheme, var },
            false,
            scheme,
            var,
            ident,
            instance,
        )
    }

    /// `j-eq-r`: from `k : s = t` and `j : A(t/x)` conclude `j : A(s/x)`.
    pub fn j_eq_r(
        scheme: Formula,
        var: Variable,
        ident: Derivation,
        instance: Derivation,
    ) -> Derivation {
        j_eq(
            |scheme, var| Rule::JEqR { scheme, var },
            true,
            scheme,
            var,
            ident,
            instance,
        )
    }

    pub fn t_intro(subject: Term, prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = match &prem.sequent.conclusion {
            Formula::K(a, inner) => match inner.as_ref() {
                Formula::Just(_, body) => Formula::trust(*a, subject.clone(), (**body).clone()),
                other => other.clone(),
            },
            other => other.clone(),
        };
        Derivation::new(Rule::TIntro { subject }, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn t_elim(fresh: Variable, prem: Derivation) -> Derivation {
        let ctx = prem.sequent.context.clone();
        let concl = match &prem.sequent.conclusion {
            Formula::Trust(a, _, body) => {
                Formula::know(*a, Formula::just(Term::Var(fresh), (**body).clone()))
            }
            other => other.clone(),
        };
        Derivation::new(Rule::TElim { fresh }, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn weak(extra: impl IntoIterator<Item = Formula>, prem: Derivation) -> Derivation {
        let mut ctx = prem.sequent.context.clone();
        for f in extra {
            ctx.insert(f);
        }
        let concl = prem.sequent.conclusion.clone();
        Derivation::new(Rule::Weak, vec![prem], Sequent::new(ctx, concl))
    }

    pub fn contr(target: Multiset, prem: Derivation) -> Derivation {
        let concl = prem.sequent.conclusion.clone();
        Derivation::new(Rule::Contr, vec![prem], Sequent::new(target, concl))
    }

    pub fn dup(target: Multiset, prem: Derivation) -> Derivation {
        let concl = prem.sequent.conclusion.clone();
        Derivation::new(Rule::Dup, vec![prem], Sequent::new(target, concl))
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProofParseError {
    #[error("{0}")]
    Sexpr(#[from] sexpr::SexprError),
    #[error("{0}")]
    Formula(#[from] crate::syntax::ParseError),
    #[error("malformed proof node: {0}")]
    Shape(String),
}

fn shape(msg: impl Into<String>) -> ProofParseError {
    ProofParseError::Shape(msg.into())
}

struct Params<'a> {
    items: &'a [Sexpr],
}

impl<'a> Params<'a> {
    fn get(&self, key: &str) -> Option<&'a Sexpr> {
        for item in self.items {
            if let Some([k, v]) = item.as_list() {
                if k.as_atom() == Some(key) {
                    return Some(v);
                }
            }
        }
        None
    }

    fn text(&self, key: &str) -> Result<&'a str, ProofParseError> {
        let v = self
            .get(key)
            .ok_or_else(|| shape(format!("missing parameter `{key}`")))?;
        v.as_str()
            .or_else(|| v.as_atom())
            .ok_or_else(|| shape(format!("parameter `{key}` must be a name or string")))
    }
}

/// Parse one derivation from its s-expression form
/// `(rule-tag (params ...) premise* (seq (hyp*) concl))`.
pub fn parse_derivation(sx: &Sexpr, st: &mut SymbolTable) -> Result<Derivation, ProofParseError> {
    let items = sx
        .as_list()
        .ok_or_else(|| shape("derivation must be a list"))?;
    if items.len() < 3 {
        return Err(shape("derivation needs a tag, parameters and a sequent"));
    }
    let tag = items[0]
        .as_atom()
        .ok_or_else(|| shape("rule tag must be an atom"))?
        .to_string();
    let params = Params {
        items: items[1]
            .as_list()
            .ok_or_else(|| shape("parameters must be a list"))?,
    };
    let seq_sx = items
        .last()
        .expect("length checked above");
    let premises: Vec<Derivation> = items[2..items.len() - 1]
        .iter()
        .map(|p| parse_derivation(p, st))
        .collect::<Result<_, _>>()?;

    let rule = match tag.as_str() {
        "ax" => Rule::Ax,
        "imp-i" => Rule::ImpI,
        "imp-e" => Rule::ImpE,
        "efq" => Rule::Efq,
        "dne" => Rule::Dne,
        "and-i" => Rule::AndI,
        "and-e1" => Rule::AndE1,
        "and-e2" => Rule::AndE2,
        "all-i" => Rule::AllI {
            eigen: st.intern_var(params.text("eigen")?),
        },
        "all-e" => Rule::AllE {
            term: parse_term(params.text("term")?, st)?,
        },
        "eq-refl" => Rule::EqRefl,
        "eq-sym" => Rule::EqSym,
        "eq-trans" => Rule::EqTrans,
        "eq-subst" => Rule::EqSubst {
            scheme: parse_formula(params.text("scheme")?, st)?,
            var: st.intern_var(params.text("var")?),
        },
        "k-nec" => Rule::KNec {
            agent: st.intern_agent(params.text("agent")?),
        },
        "k-dist" => Rule::KDist,
        "k-t" => Rule::KT,
        "k-5" => Rule::K5,
        "j-app" => Rule::JApp,
        "j-t" => Rule::JT,
        "j-bang" => Rule::JBang,
        "j-eq-l" => Rule::JEqL {
            scheme: parse_formula(params.text("scheme")?, st)?,
            var: st.intern_var(params.text("var")?),
        },
        "j-eq-r" => Rule::JEqR {
            scheme: parse_formula(params.text("scheme")?, st)?,
            var: st.intern_var(params.text("var")?),
        },
        "t-intro" => Rule::TIntro {
            subject: parse_term(params.text("subject")?, st)?,
        },
        "t-elim" => Rule::TElim {
            fresh: st.intern_var(params.text("fresh")?),
        },
        "nec-kt" => Rule::NecKt {
            agent: st.intern_agent(params.text("agent")?),
        },
        "weak" => Rule::Weak,
        "contr" => Rule::Contr,
        "dup" => Rule::Dup,
        other => return Err(shape(format!("unknown rule tag `{other}`"))),
    };

    let seq_items = seq_sx
        .as_list()
        .filter(|l| l.first().and_then(Sexpr::as_atom) == Some("seq") && l.len() == 3)
        .ok_or_else(|| shape("last element must be `(seq (hyp*) concl)`"))?;
    let mut context = Multiset::new();
    for h in seq_items[1]
        .as_list()
        .ok_or_else(|| shape("hypotheses must form a list"))?
    {
        let text = h
            .as_str()
            .ok_or_else(|| shape("each hypothesis must be a quoted formula"))?;
        context.insert(parse_formula(text, st)?);
    }
    let concl_text = seq_items[2]
        .as_str()
        .ok_or_else(|| shape("the conclusion must be a quoted formula"))?;
    let conclusion = parse_formula(concl_text, st)?;

    Ok(Derivation::new(
        rule,
        premises,
        Sequent::new(context, conclusion),
    ))
}

/// Parse a proof file holding one or more derivations.
pub fn parse_proof_file(
    text: &str,
    st: &mut SymbolTable,
) -> Result<Vec<Derivation>, ProofParseError> {
    sexpr::read_all(text)?
        .iter()
        .map(|sx| parse_derivation(sx, st))
        .collect()
}

/// Render a derivation in the proof file format.
pub fn print_derivation(d: &Derivation, st: &SymbolTable) -> String {
    sexpr::write(&derivation_sexpr(d, st))
}

fn derivation_sexpr(d: &Derivation, st: &SymbolTable) -> Sexpr {
    let mut items = vec![Sexpr::atom(d.rule.tag())];
    let kv = |k: &str, v: Sexpr| Sexpr::list(vec![Sexpr::atom(k), v]);
    let params = match &d.rule {
        Rule::AllI { eigen } => vec![kv("eigen", Sexpr::atom(st.var_name(*eigen)))],
        Rule::AllE { term } => vec![kv("term", Sexpr::string(print_term(term, st)))],
        Rule::EqSubst { scheme, var } | Rule::JEqL { scheme, var } | Rule::JEqR { scheme, var } => {
            vec![
                kv("scheme", Sexpr::string(print_formula(scheme, st))),
                kv("var", Sexpr::atom(st.var_name(*var))),
            ]
        }
        Rule::KNec { agent } | Rule::NecKt { agent } => {
            vec![kv("agent", Sexpr::atom(st.agent_name(*agent)))]
        }
        Rule::TIntro { subject } => vec![kv("subject", Sexpr::string(print_term(subject, st)))],
        Rule::TElim { fresh } => vec![kv("fresh", Sexpr::atom(st.var_name(*fresh)))],
        _ => vec![],
    };
    items.push(Sexpr::list(params));
    for p in &d.premises {
        items.push(derivation_sexpr(p, st));
    }
    let mut hyps = Vec::new();
    for (f, n) in d.sequent.context.iter() {
        for _ in 0..n {
            hyps.push(Sexpr::string(print_formula(f, st)));
        }
    }
    items.push(Sexpr::list(vec![
        Sexpr::atom("seq"),
        Sexpr::list(hyps),
        Sexpr::string(print_formula(&d.sequent.conclusion, st)),
    ]));
    Sexpr::list(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn f(text: &str, st: &mut SymbolTable) -> Formula {
        parse_formula(text, st).unwrap()
    }

    fn ax(formula: Formula) -> Derivation {
        Derivation::new(
            Rule::Ax,
            vec![],
            Sequent::new(Multiset::singleton(formula.clone()), formula),
        )
    }

    #[test]
    fn axiom_checks_and_bad_axiom_fails() {
        let mut st = SymbolTable::new();
        let a = f("P(x)", &mut st);
        assert!(check(&ax(a.clone())).is_ok());
        let bad = Derivation::new(
            Rule::Ax,
            vec![],
            Sequent::new(Multiset::new(), a),
        );
        let report = check(&bad);
        assert!(matches!(
            report.failure,
            Some(CheckFailure {
                reason: CheckReason::SchemaMismatch,
                ..
            })
        ));
    }

    #[test]
    fn identity_reflexivity_is_a_zero_premise_rule() {
        let mut st = SymbolTable::new();
        let eq = f("t = t", &mut st);
        let d = Derivation::new(Rule::EqRefl, vec![], Sequent::new(Multiset::new(), eq));
        assert!(check(&d).is_ok());
        let neq = f("t = s", &mut st);
        let bad = Derivation::new(Rule::EqRefl, vec![], Sequent::new(Multiset::new(), neq));
        assert!(!check(&bad).is_ok());
    }

    #[test]
    fn eigenvariable_in_context_is_rejected() {
        let mut st = SymbolTable::new();
        // Q(y) => forall x. P(x) from Q(y) => P(y) violates the side condition.
        let qy = f("Q(y)", &mut st);
        let py = f("P(y)", &mut st);
        let all = f("forall x. P(x)", &mut st);
        let y = st.intern_var("y");
        let prem = Derivation::new(
            Rule::Weak,
            vec![ax(py.clone())],
            Sequent::new(Multiset::from_iter([qy.clone(), py.clone()]), py),
        );
        let d = Derivation::new(
            Rule::AllI { eigen: y },
            vec![prem.clone()],
            Sequent::new(prem.sequent.context.clone(), all),
        );
        let report = check(&d);
        match report.failure {
            Some(CheckFailure {
                reason: CheckReason::SideConditionViolated(name),
                ..
            }) => assert_eq!(name, "eigenvariable"),
            other => panic!("expected an eigenvariable violation, got {other:?}"),
        }
    }

    #[test]
    fn structural_rules_manipulate_multiplicities() {
        let mut st = SymbolTable::new();
        let a = f("P(x)", &mut st);
        let b = f("Q(x)", &mut st);
        let base = ax(a.clone());
        // weakening adds occurrences
        let weak = Derivation::new(
            Rule::Weak,
            vec![base.clone()],
            Sequent::new(Multiset::from_iter([a.clone(), b.clone()]), a.clone()),
        );
        assert!(check(&weak).is_ok());
        // duplication copies an existing occurrence
        let dup = Derivation::new(
            Rule::Dup,
            vec![base.clone()],
            Sequent::new(Multiset::from_iter([a.clone(), a.clone()]), a.clone()),
        );
        assert!(check(&dup).is_ok());
        // contraction erases one of them again
        let contr = Derivation::new(
            Rule::Contr,
            vec![dup.clone()],
            Sequent::new(Multiset::singleton(a.clone()), a.clone()),
        );
        assert!(check(&contr).is_ok());
        // contraction may not erase the last occurrence
        let too_far = Derivation::new(
            Rule::Contr,
            vec![base],
            Sequent::new(Multiset::new(), a.clone()),
        );
        assert!(!check(&too_far).is_ok());
        // duplication may not invent a new formula
        let invent = Derivation::new(
            Rule::Dup,
            vec![ax(a.clone())],
            Sequent::new(Multiset::from_iter([a, b.clone()]), b),
        );
        assert!(!check(&invent).is_ok());
    }

    #[test]
    fn proof_sexpr_round_trip() {
        let mut st = SymbolTable::new();
        let a = f("P(x)", &mut st);
        let d = Derivation::new(
            Rule::ImpI,
            vec![Derivation::new(
                Rule::Weak,
                vec![ax(a.clone())],
                Sequent::new(
                    Multiset::from_iter([a.clone(), f("Q(y)", &mut st)]),
                    a.clone(),
                ),
            )],
            Sequent::new(
                Multiset::singleton(a.clone()),
                f("Q(y) -> P(x)", &mut st),
            ),
        );
        assert!(check(&d).is_ok());
        let text = print_derivation(&d, &st);
        let sx = sexpr::read_one(&text).unwrap();
        let back = parse_derivation(&sx, &mut st).unwrap();
        assert_eq!(back, d);
    }
}
