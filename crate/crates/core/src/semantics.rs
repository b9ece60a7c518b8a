//! Finite Kripke models: validation of the frame and model conditions,
//! truth evaluation, consequence checking, the hyperintensionality and
//! identity-intensionality counterexample models, and a seeded random
//! model generator.
//!
//! Evidence is represented by finite per-state seeds; membership in the
//! induced least evidence function (closed under gamma-monotonicity, the
//! proof checker `!`, application, and justified-identity rewriting) is
//! decided by a depth-bounded backward search with a tri-state answer, so
//! the closure conditions hold by construction and an exhausted depth is
//! reported rather than misread as falsity.

use crate::sexpr::{self, Sexpr};
use crate::syntax::{
    free_vars_formula, fresh_var, parse_formula, parse_term, print_formula, print_term,
    subst_ident, subst_parallel, vars_of_formula, vars_of_term, AgentName, Formula, PredSym,
    SymbolTable, Term, Variable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use thiserror::Error;

/// A state of a finite frame, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

/// A domain element, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(pub u32);

pub type Pair = (StateId, StateId);

/// A finite frame: states, per-agent accessibility (reflexive and
/// Euclidean), the justification relation gamma (reflexive and
/// transitive), and the quantification domain.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiniteFrame {
    pub state_names: Vec<String>,
    pub domain_names: Vec<String>,
    pub agent_rel: BTreeMap<AgentName, BTreeSet<Pair>>,
    pub gamma_rel: BTreeSet<Pair>,
}

impl FiniteFrame {
    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.state_names.len() as u32).map(StateId)
    }

    pub fn elems(&self) -> impl Iterator<Item = Elem> {
        (0..self.domain_names.len() as u32).map(Elem)
    }
}

/// A finite model over a frame: a rigid global term table, per-state
/// identity and predicate interpretations, and per-state evidence seeds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiniteModel {
    pub frame: FiniteFrame,
    pub term_table: BTreeMap<Term, Elem>,
    pub eq_interp: Vec<BTreeSet<(Elem, Elem)>>,
    pub pred_interp: Vec<BTreeMap<PredSym, BTreeSet<Vec<Elem>>>>,
    pub evidence_seed: Vec<BTreeMap<Term, BTreeSet<Formula>>>,
}

impl FiniteModel {
    pub fn state_count(&self) -> usize {
        self.frame.state_names.len()
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.frame
            .state_names
            .iter()
            .position(|n| n == name)
            .map(|i| StateId(i as u32))
    }

    pub fn agent_edges(&self, a: AgentName) -> Option<&BTreeSet<Pair>> {
        self.frame.agent_rel.get(&a)
    }

    fn eq_at(&self, w: StateId) -> &BTreeSet<(Elem, Elem)> {
        &self.eq_interp[w.0 as usize]
    }

    fn preds_at(&self, w: StateId) -> &BTreeMap<PredSym, BTreeSet<Vec<Elem>>> {
        &self.pred_interp[w.0 as usize]
    }

    /// Gamma-predecessors of a state (including itself when gamma is
    /// reflexive), the states whose evidence it inherits.
    fn gamma_predecessors(&self, v: StateId) -> Vec<StateId> {
        self.frame
            .gamma_rel
            .iter()
            .filter(|(_, to)| *to == v)
            .map(|(from, _)| *from)
            .collect()
    }
}

/// An assignment: a total term valuation over the model's term universe
/// plus identity and predicate extensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub term_map: BTreeMap<Term, Elem>,
    pub eq: BTreeSet<(Elem, Elem)>,
    pub preds: BTreeMap<PredSym, BTreeSet<Vec<Elem>>>,
}

impl Assignment {
    /// The interpretation function `I_w`.
    pub fn interpretation(m: &FiniteModel, w: StateId) -> Assignment {
        Assignment {
            term_map: m.term_table.clone(),
            eq: m.eq_at(w).clone(),
            preds: m.preds_at(w).clone(),
        }
    }

    /// The x-variant that maps the variable `x` to `e`. Compound terms
    /// containing `x` are unaffected: assignments interpret terms
    /// atomically.
    pub fn with_var(&self, x: Variable, e: Elem) -> Assignment {
        let mut out = self.clone();
        out.term_map.insert(Term::Var(x), e);
        out
    }

    /// The combination `f_{w -> v}`: term values are carried over, the
    /// predicate and identity extensions are adopted from the target
    /// state.
    pub fn carry(&self, m: &FiniteModel, v: StateId) -> Assignment {
        Assignment {
            term_map: self.term_map.clone(),
            eq: m.eq_at(v).clone(),
            preds: m.preds_at(v).clone(),
        }
    }

    pub fn term(&self, t: &Term) -> Option<Elem> {
        self.term_map.get(t).copied()
    }
}

/// One violated frame or model condition, with witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyStateSet,
    EmptyDomain,
    AgentNotReflexive { agent: AgentName, state: StateId },
    AgentNotEuclidean { agent: AgentName, w: StateId, u: StateId, v: StateId },
    GammaNotReflexive { state: StateId },
    GammaNotTransitive { w: StateId, v: StateId, u: StateId },
    ElemUncovered { elem: Elem },
    EqNotReflexive { state: StateId, elem: Elem },
    EqNotSymmetric { state: StateId, pair: (Elem, Elem) },
    EqNotTransitive { state: StateId, chain: (Elem, Elem, Elem) },
    PredArity { state: StateId, pred: PredSym, tuple: Vec<Elem> },
    PredNotReplacementClosed {
        state: StateId,
        pred: PredSym,
        tuple: Vec<Elem>,
        from: Elem,
        to: Elem,
    },
    EvidenceNotMonotone {
        from: StateId,
        to: StateId,
        term: Term,
        formula: Formula,
    },
}

impl Violation {
    pub fn render(&self, m: &FiniteModel, st: &SymbolTable) -> String {
        let sn = |s: &StateId| m.frame.state_names[s.0 as usize].clone();
        let en = |e: &Elem| m.frame.domain_names[e.0 as usize].clone();
        match self {
            Violation::EmptyStateSet => "state set is empty".into(),
            Violation::EmptyDomain => "domain is empty".into(),
            Violation::AgentNotReflexive { agent, state } => format!(
                "R_{} not reflexive at {}",
                st.agent_name(*agent),
                sn(state)
            ),
            Violation::AgentNotEuclidean { agent, w, u, v } => format!(
                "R_{} not Euclidean: {} reaches {} and {} but ({}, {}) is missing",
                st.agent_name(*agent),
                sn(w),
                sn(u),
                sn(v),
                sn(u),
                sn(v)
            ),
            Violation::GammaNotReflexive { state } => {
                format!("R_gamma not reflexive at {}", sn(state))
            }
            Violation::GammaNotTransitive { w, v, u } => format!(
                "R_gamma not transitive: ({}, {}) and ({}, {}) but ({}, {}) is missing",
                sn(w),
                sn(v),
                sn(v),
                sn(u),
                sn(w),
                sn(u)
            ),
            Violation::ElemUncovered { elem } => format!(
                "domain element {} is not the image of any table term",
                en(elem)
            ),
            Violation::EqNotReflexive { state, elem } => {
                format!("identity at {} misses ({}, {})", sn(state), en(elem), en(elem))
            }
            Violation::EqNotSymmetric { state, pair } => format!(
                "identity at {} contains ({}, {}) but not its converse",
                sn(state),
                en(&pair.0),
                en(&pair.1)
            ),
            Violation::EqNotTransitive { state, chain } => format!(
                "identity at {} contains ({}, {}) and ({}, {}) but not ({}, {})",
                sn(state),
                en(&chain.0),
                en(&chain.1),
                en(&chain.1),
                en(&chain.2),
                en(&chain.0),
                en(&chain.2)
            ),
            Violation::PredArity { state, pred, tuple } => format!(
                "predicate {} at {} holds a tuple of width {} but is declared with arity {}",
                st.pred_name(*pred),
                sn(state),
                tuple.len(),
                st.pred_arity(*pred)
            ),
            Violation::PredNotReplacementClosed {
                state,
                pred,
                tuple,
                from,
                to,
            } => format!(
                "predicate {} at {} is not closed under uniform replacement of {} by {} in ({})",
                st.pred_name(*pred),
                sn(state),
                en(from),
                en(to),
                tuple
                    .iter()
                    .map(en)
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            Violation::EvidenceNotMonotone {
                from,
                to,
                term,
                formula,
            } => format!(
                "evidence seed not gamma-monotone: {} justifies `{}` at {} but not at {}",
                print_term(term, st),
                print_formula(formula, st),
                sn(from),
                sn(to)
            ),
        }
    }
}

/// The full list of violated conditions; empty iff the structure is a
/// model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every frame and model condition, reporting each violation with
/// witnesses.
pub fn validate_model(m: &FiniteModel, st: &SymbolTable) -> ValidationReport {
    let mut out = Vec::new();
    if m.frame.state_names.is_empty() {
        out.push(Violation::EmptyStateSet);
    }
    if m.frame.domain_names.is_empty() {
        out.push(Violation::EmptyDomain);
    }
    for (agent, rel) in &m.frame.agent_rel {
        for w in m.frame.states() {
            if !rel.contains(&(w, w)) {
                out.push(Violation::AgentNotReflexive {
                    agent: *agent,
                    state: w,
                });
            }
        }
        for &(w, u) in rel {
            for &(w2, v) in rel {
                if w == w2 && !rel.contains(&(u, v)) {
                    out.push(Violation::AgentNotEuclidean {
                        agent: *agent,
                        w,
                        u,
                        v,
                    });
                }
            }
        }
    }
    for w in m.frame.states() {
        if !m.frame.gamma_rel.contains(&(w, w)) {
            out.push(Violation::GammaNotReflexive { state: w });
        }
    }
    for &(w, v) in &m.frame.gamma_rel {
        for &(v2, u) in &m.frame.gamma_rel {
            if v == v2 && !m.frame.gamma_rel.contains(&(w, u)) {
                out.push(Violation::GammaNotTransitive { w, v, u });
            }
        }
    }
    let covered: BTreeSet<Elem> = m.term_table.values().copied().collect();
    for e in m.frame.elems() {
        if !covered.contains(&e) {
            out.push(Violation::ElemUncovered { elem: e });
        }
    }
    for w in m.frame.states() {
        let eq = m.eq_at(w);
        for e in m.frame.elems() {
            if !eq.contains(&(e, e)) {
                out.push(Violation::EqNotReflexive { state: w, elem: e });
            }
        }
        for &(d, e) in eq {
            if !eq.contains(&(e, d)) {
                out.push(Violation::EqNotSymmetric { state: w, pair: (d, e) });
            }
        }
        for &(c, d) in eq {
            for &(d2, e) in eq {
                if d == d2 && !eq.contains(&(c, e)) {
                    out.push(Violation::EqNotTransitive {
                        state: w,
                        chain: (c, d, e),
                    });
                }
            }
        }
        for (pred, tuples) in m.preds_at(w) {
            for tuple in tuples {
                if tuple.len() != st.pred_arity(*pred) {
                    out.push(Violation::PredArity {
                        state: w,
                        pred: *pred,
                        tuple: tuple.clone(),
                    });
                }
                for &e in tuple.iter() {
                    for &(e2, d) in eq {
                        if e == e2 {
                            let replaced: Vec<Elem> = tuple
                                .iter()
                                .map(|&x| if x == e { d } else { x })
                                .collect();
                            if !tuples.contains(&replaced) {
                                out.push(Violation::PredNotReplacementClosed {
                                    state: w,
                                    pred: *pred,
                                    tuple: tuple.clone(),
                                    from: e,
                                    to: d,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    for &(w, v) in &m.frame.gamma_rel {
        if w == v {
            continue;
        }
        for (term, formulas) in &m.evidence_seed[w.0 as usize] {
            for f in formulas {
                let present = m.evidence_seed[v.0 as usize]
                    .get(term)
                    .is_some_and(|set| set.contains(f));
                if !present {
                    out.push(Violation::EvidenceNotMonotone {
                        from: w,
                        to: v,
                        term: term.clone(),
                        formula: f.clone(),
                    });
                }
            }
        }
    }
    out.dedup();
    ValidationReport { violations: out }
}

/// A depth-bounded three-valued answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trivalent {
    True,
    False,
    /// The search was cut off before the query could be resolved.
    Unknown,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("term `{0:?}` is not in the model's term table")]
    UnknownTerm(Term),
    #[error("agent has no declared accessibility relation")]
    UnknownAgent(AgentName),
    #[error("evidence search depth exhausted")]
    DepthExhausted,
}

type EvidenceKey = (StateId, Term, Formula);

/// Shared evaluation context: pooled evidence seeds, enabler identities,
/// candidate implications and the evidence memo table.
pub struct EvalCx<'m> {
    model: &'m FiniteModel,
    depth: usize,
    pooled: Vec<BTreeMap<Term, BTreeSet<Formula>>>,
    enablers: Vec<Vec<(Term, Term)>>,
    impls: Vec<Vec<(Formula, Formula)>>,
    memo: HashMap<EvidenceKey, bool>,
    in_progress: HashSet<EvidenceKey>,
}

impl<'m> EvalCx<'m> {
    pub fn new(model: &'m FiniteModel, depth: usize) -> EvalCx<'m> {
        let mut pooled = Vec::with_capacity(model.state_count());
        for v in model.frame.states() {
            let mut pool: BTreeMap<Term, BTreeSet<Formula>> = BTreeMap::new();
            let mut sources = model.gamma_predecessors(v);
            if !sources.contains(&v) {
                sources.push(v);
            }
            for w in sources {
                for (t, fs) in &model.evidence_seed[w.0 as usize] {
                    pool.entry(t.clone()).or_default().extend(fs.iter().cloned());
                }
            }
            pooled.push(pool);
        }
        let mut enablers = Vec::with_capacity(pooled.len());
        let mut impls = Vec::with_capacity(pooled.len());
        for pool in &pooled {
            let mut ids = Vec::new();
            let mut imps = Vec::new();
            for fs in pool.values() {
                for f in fs {
                    match f {
                        Formula::Eq(t, s) => ids.push((t.clone(), s.clone())),
                        Formula::Imp(a, b) => imps.push(((**a).clone(), (**b).clone())),
                        _ => {}
                    }
                }
            }
            ids.sort();
            ids.dedup();
            imps.sort();
            imps.dedup();
            enablers.push(ids);
            impls.push(imps);
        }
        EvalCx {
            model,
            depth,
            pooled,
            enablers,
            impls,
            memo: HashMap::new(),
            in_progress: HashSet::new(),
        }
    }

    fn seeded(&self, w: StateId, j: &Term, a: &Formula) -> bool {
        self.pooled[w.0 as usize]
            .get(j)
            .is_some_and(|fs| fs.contains(a))
    }

    /// Membership of `a` in the induced evidence set `E_w(j)`.
    pub fn member(&mut self, w: StateId, j: &Term, a: &Formula) -> Trivalent {
        self.member_at(w, j, a, self.depth)
    }

    fn member_at(&mut self, w: StateId, j: &Term, a: &Formula, fuel: usize) -> Trivalent {
        if self.seeded(w, j, a) {
            return Trivalent::True;
        }
        let key = (w, j.clone(), a.clone());
        if let Some(&cached) = self.memo.get(&key) {
            return if cached { Trivalent::True } else { Trivalent::False };
        }
        if self.in_progress.contains(&key) {
            // cyclic support is not a derivation on this path
            return Trivalent::False;
        }

        // Candidate subgoals per closure condition.
        let mut subgoals: Vec<(Term, Formula)> = Vec::new();
        let mut pair_goals: Vec<((Term, Formula), (Term, Formula))> = Vec::new();
        if let (Term::Bang(k), Formula::Just(k2, body)) = (j, a) {
            if **k == *k2 {
                subgoals.push(((**k).clone(), (**body).clone()));
            }
        }
        if let Term::App(k, l) = j {
            for (x, y) in self.impls[w.0 as usize].clone() {
                if y == *a {
                    pair_goals.push((
                        ((**k).clone(), Formula::imp(x.clone(), y)),
                        ((**l).clone(), x),
                    ));
                }
            }
        }
        for (t, s) in self.enablers[w.0 as usize].clone() {
            for b in rewrite_predecessors(a, &t, &s) {
                subgoals.push((j.clone(), b));
            }
            for b in rewrite_predecessors(a, &s, &t) {
                subgoals.push((j.clone(), b));
            }
        }

        if subgoals.is_empty() && pair_goals.is_empty() {
            self.memo.insert(key, false);
            return Trivalent::False;
        }
        if fuel == 0 {
            return Trivalent::Unknown;
        }

        self.in_progress.insert(key.clone());
        let mut saw_unknown = false;
        let mut result = Trivalent::False;
        for (jj, aa) in subgoals {
            match self.member_at(w, &jj, &aa, fuel - 1) {
                Trivalent::True => {
                    result = Trivalent::True;
                    break;
                }
                Trivalent::Unknown => saw_unknown = true,
                Trivalent::False => {}
            }
        }
        if result != Trivalent::True {
            for ((j1, a1), (j2, a2)) in pair_goals {
                let first = self.member_at(w, &j1, &a1, fuel - 1);
                if first == Trivalent::False {
                    continue;
                }
                let second = self.member_at(w, &j2, &a2, fuel - 1);
                match (first, second) {
                    (Trivalent::True, Trivalent::True) => {
                        result = Trivalent::True;
                        break;
                    }
                    (_, Trivalent::False) => {}
                    _ => saw_unknown = true,
                }
            }
        }
        self.in_progress.remove(&key);
        match result {
            Trivalent::True => {
                self.memo.insert(key, true);
                Trivalent::True
            }
            _ if saw_unknown => Trivalent::Unknown,
            _ => {
                // every branch was explored and failed definitively;
                // results under an in-progress ancestor stay uncached
                if self.in_progress.is_empty() {
                    self.memo.insert(key, false);
                }
                Trivalent::False
            }
        }
    }
}

/// Single-position justified-identity predecessors: formulas `B` with
/// `B(t/x) = B` rewritten at one eligible slot such that `B(s/x) = A`.
/// Slots inside `K`, `:` and `T` bodies are ineligible (the substitution
/// of identicals halts there).
fn rewrite_predecessors(a: &Formula, t: &Term, s: &Term) -> Vec<Formula> {
    if t == s {
        return Vec::new();
    }
    let mut avoid = vars_of_formula(a);
    avoid.extend(vars_of_term(t));
    avoid.extend(vars_of_term(s));
    let x = fresh_var(&avoid);
    let mut out = Vec::new();
    let templates = slot_templates(a, s, x);
    for template in templates {
        if subst_ident(&template, s, x) == *a {
            out.push(subst_ident(&template, t, x));
        }
    }
    out
}

/// All formulas obtained from `a` by replacing exactly one eligible
/// whole-argument occurrence of `s` with the variable `x`.
fn slot_templates(a: &Formula, s: &Term, x: Variable) -> Vec<Formula> {
    let mut out = Vec::new();
    match a {
        Formula::Bot => {}
        Formula::Eq(l, r) => {
            if l == s {
                out.push(Formula::Eq(Term::Var(x), r.clone()));
            }
            if r == s {
                out.push(Formula::Eq(l.clone(), Term::Var(x)));
            }
        }
        Formula::Pred(p, args) => {
            for (i, arg) in args.iter().enumerate() {
                if arg == s {
                    let mut new_args = args.clone();
                    new_args[i] = Term::Var(x);
                    out.push(Formula::Pred(*p, new_args));
                }
            }
        }
        Formula::Imp(l, r) => {
            for t in slot_templates(l, s, x) {
                out.push(Formula::imp(t, (**r).clone()));
            }
            for t in slot_templates(r, s, x) {
                out.push(Formula::imp((**l).clone(), t));
            }
        }
        Formula::And(l, r) => {
            for t in slot_templates(l, s, x) {
                out.push(Formula::and(t, (**r).clone()));
            }
            for t in slot_templates(r, s, x) {
                out.push(Formula::and((**l).clone(), t));
            }
        }
        Formula::Forall(y, body) => {
            for t in slot_templates(body, s, x) {
                out.push(Formula::forall(*y, t));
            }
        }
        // opaque contexts
        Formula::K(..) | Formula::Just(..) | Formula::Trust(..) => {}
    }
    out
}

/// Public entry point for evidence membership with a fresh context.
pub fn e_member(m: &FiniteModel, w: StateId, j: &Term, a: &Formula, depth: usize) -> Trivalent {
    EvalCx::new(m, depth).member(w, j, a)
}

/// Truth of a formula at a state under an assignment, per the forcing
/// clauses. `K` and `:` recurse at successors under the carried
/// assignment; `:` additionally requires an evidence instance; `T[a,t] A`
/// holds when some table term justifiably witnesses `K[a] j:A`.
pub fn eval(
    m: &FiniteModel,
    w: StateId,
    f: &Assignment,
    a: &Formula,
    depth: usize,
) -> Result<bool, EvalError> {
    let mut cx = EvalCx::new(m, depth);
    eval_in(&mut cx, w, f, a)
}

/// Truth under a caller-provided context (reuses the evidence memo across
/// many queries against the same model).
pub fn eval_in(
    cx: &mut EvalCx<'_>,
    w: StateId,
    f: &Assignment,
    a: &Formula,
) -> Result<bool, EvalError> {
    let lookup = |f: &Assignment, t: &Term| -> Result<Elem, EvalError> {
        f.term(t).ok_or_else(|| EvalError::UnknownTerm(t.clone()))
    };
    match a {
        Formula::Bot => Ok(false),
        Formula::Eq(l, r) => {
            let le = lookup(f, l)?;
            let re = lookup(f, r)?;
            Ok(f.eq.contains(&(le, re)))
        }
        Formula::Pred(p, args) => {
            let tuple: Vec<Elem> = args
                .iter()
                .map(|t| lookup(f, t))
                .collect::<Result<_, _>>()?;
            Ok(f.preds.get(p).is_some_and(|set| set.contains(&tuple)))
        }
        Formula::Imp(x, y) => {
            if !eval_in(cx, w, f, x)? {
                return Ok(true);
            }
            eval_in(cx, w, f, y)
        }
        Formula::And(x, y) => Ok(eval_in(cx, w, f, x)? && eval_in(cx, w, f, y)?),
        Formula::Forall(x, body) => {
            let mut exhausted = false;
            for e in cx.model.frame.elems() {
                let variant = f.with_var(*x, e);
                match eval_in(cx, w, &variant, body) {
                    Ok(false) => return Ok(false),
                    Ok(true) => {}
                    Err(EvalError::DepthExhausted) => exhausted = true,
                    Err(err) => return Err(err),
                }
            }
            if exhausted {
                Err(EvalError::DepthExhausted)
            } else {
                Ok(true)
            }
        }
        Formula::K(agent, body) => {
            let rel = cx
                .model
                .agent_edges(*agent)
                .ok_or(EvalError::UnknownAgent(*agent))?
                .clone();
            let mut exhausted = false;
            for (from, to) in rel {
                if from != w {
                    continue;
                }
                let carried = f.carry(cx.model, to);
                match eval_in(cx, to, &carried, body) {
                    Ok(false) => return Ok(false),
                    Ok(true) => {}
                    Err(EvalError::DepthExhausted) => exhausted = true,
                    Err(err) => return Err(err),
                }
            }
            if exhausted {
                Err(EvalError::DepthExhausted)
            } else {
                Ok(true)
            }
        }
        Formula::Just(j, body) => {
            let mut exhausted = false;
            let successors: Vec<StateId> = cx
                .model
                .frame
                .gamma_rel
                .iter()
                .filter(|(from, _)| *from == w)
                .map(|(_, to)| *to)
                .collect();
            for v in successors {
                let carried = f.carry(cx.model, v);
                match eval_in(cx, v, &carried, body) {
                    Ok(false) => return Ok(false),
                    Ok(true) => {}
                    Err(EvalError::DepthExhausted) => exhausted = true,
                    Err(err) => return Err(err),
                }
            }
            match instance_witness(cx, w, f, j, body)? {
                Trivalent::True => {
                    if exhausted {
                        Err(EvalError::DepthExhausted)
                    } else {
                        Ok(true)
                    }
                }
                Trivalent::False => Ok(false),
                Trivalent::Unknown => Err(EvalError::DepthExhausted),
            }
        }
        Formula::Trust(agent, _, body) => {
            let witnesses: Vec<Term> = cx.model.term_table.keys().cloned().collect();
            let mut exhausted = false;
            for j in witnesses {
                let candidate = Formula::know(*agent, Formula::just(j, (**body).clone()));
                match eval_in(cx, w, f, &candidate) {
                    Ok(true) => return Ok(true),
                    Ok(false) => {}
                    Err(EvalError::DepthExhausted) => exhausted = true,
                    Err(err) => return Err(err),
                }
            }
            if exhausted {
                Err(EvalError::DepthExhausted)
            } else {
                Ok(false)
            }
        }
    }
}

/// The existential evidence condition of the `j : A` clause: some
/// substitution of table terms for the free variables of `A`, agreeing
/// with the assignment, lands in `E_w(j)`.
fn instance_witness(
    cx: &mut EvalCx<'_>,
    w: StateId,
    f: &Assignment,
    j: &Term,
    body: &Formula,
) -> Result<Trivalent, EvalError> {
    let free: Vec<Variable> = free_vars_formula(body).into_iter().collect();
    let mut candidate_sets: Vec<Vec<Term>> = Vec::with_capacity(free.len());
    for x in &free {
        let target = f
            .term(&Term::Var(*x))
            .ok_or_else(|| EvalError::UnknownTerm(Term::Var(*x)))?;
        let candidates: Vec<Term> = cx
            .model
            .term_table
            .keys()
            .filter(|t| f.term(t) == Some(target))
            .cloned()
            .collect();
        if candidates.is_empty() {
            return Ok(Trivalent::False);
        }
        candidate_sets.push(candidates);
    }
    let mut indices = vec![0usize; free.len()];
    let mut saw_unknown = false;
    loop {
        let pairs: Vec<(Variable, Term)> = free
            .iter()
            .enumerate()
            .map(|(k, x)| (*x, candidate_sets[k][indices[k]].clone()))
            .collect();
        let inst = subst_parallel(body, &pairs);
        match cx.member(w, j, &inst) {
            Trivalent::True => return Ok(Trivalent::True),
            Trivalent::Unknown => saw_unknown = true,
            Trivalent::False => {}
        }
        // advance the odometer
        let mut k = 0;
        loop {
            if k == free.len() {
                return Ok(if saw_unknown {
                    Trivalent::Unknown
                } else {
                    Trivalent::False
                });
            }
            indices[k] += 1;
            if indices[k] < candidate_sets[k].len() {
                break;
            }
            indices[k] = 0;
            k += 1;
        }
    }
}

/// `hyps |= a` restricted to the model: at every state whose
/// interpretation verifies all hypotheses, the conclusion holds.
pub fn consequence(
    m: &FiniteModel,
    hyps: &BTreeSet<Formula>,
    a: &Formula,
    depth: usize,
) -> Result<bool, EvalError> {
    let mut cx = EvalCx::new(m, depth);
    for w in m.frame.states() {
        let iw = Assignment::interpretation(m, w);
        let mut all = true;
        for h in hyps {
            if !eval_in(&mut cx, w, &iw, h)? {
                all = false;
                break;
            }
        }
        if all && !eval_in(&mut cx, w, &iw, a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Truth at every state of the model.
pub fn valid_in(m: &FiniteModel, a: &Formula, depth: usize) -> Result<bool, EvalError> {
    consequence(m, &BTreeSet::new(), a, depth)
}

fn equivalence_closure(pairs: &mut BTreeSet<(Elem, Elem)>, elems: usize) {
    for e in 0..elems as u32 {
        pairs.insert((Elem(e), Elem(e)));
    }
    loop {
        let mut added = Vec::new();
        for &(a, b) in pairs.iter() {
            if !pairs.contains(&(b, a)) {
                added.push((b, a));
            }
            for &(b2, c) in pairs.iter() {
                if b == b2 && !pairs.contains(&(a, c)) {
                    added.push((a, c));
                }
            }
        }
        if added.is_empty() {
            return;
        }
        pairs.extend(added);
    }
}

fn replacement_closure(
    tuples: &mut BTreeSet<Vec<Elem>>,
    eq: &BTreeSet<(Elem, Elem)>,
) {
    loop {
        let mut added = Vec::new();
        for tuple in tuples.iter() {
            for &e in tuple.iter() {
                for &(e2, d) in eq {
                    if e == e2 {
                        let replaced: Vec<Elem> = tuple
                            .iter()
                            .map(|&x| if x == e { d } else { x })
                            .collect();
                        if !tuples.contains(&replaced) {
                            added.push(replaced);
                        }
                    }
                }
            }
        }
        if added.is_empty() {
            return;
        }
        tuples.extend(added);
    }
}

fn reflexive_euclidean_closure(rel: &mut BTreeSet<Pair>, states: usize) {
    for w in 0..states as u32 {
        rel.insert((StateId(w), StateId(w)));
    }
    loop {
        let mut added = Vec::new();
        for &(w, u) in rel.iter() {
            for &(w2, v) in rel.iter() {
                if w == w2 && !rel.contains(&(u, v)) {
                    added.push((u, v));
                }
            }
        }
        if added.is_empty() {
            return;
        }
        rel.extend(added);
    }
}

fn reflexive_transitive_closure(rel: &mut BTreeSet<Pair>, states: usize) {
    for w in 0..states as u32 {
        rel.insert((StateId(w), StateId(w)));
    }
    loop {
        let mut added = Vec::new();
        for &(w, v) in rel.iter() {
            for &(v2, u) in rel.iter() {
                if v == v2 && !rel.contains(&(w, u)) {
                    added.push((w, u));
                }
            }
        }
        if added.is_empty() {
            return;
        }
        rel.extend(added);
    }
}

/// Propagate evidence seeds along gamma so the seed tables themselves are
/// monotone.
fn propagate_seeds(m: &mut FiniteModel) {
    loop {
        let mut changed = false;
        let edges: Vec<Pair> = m.frame.gamma_rel.iter().copied().collect();
        for (w, v) in edges {
            if w == v {
                continue;
            }
            let source = m.evidence_seed[w.0 as usize].clone();
            let target = &mut m.evidence_seed[v.0 as usize];
            for (t, fs) in source {
                let entry = target.entry(t).or_default();
                for f in fs {
                    changed |= entry.insert(f);
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// The two-state hyperintensionality counterexample: `P(x) & Q(y)` is
/// justified by `j` everywhere, the swapped conjunction by nothing.
pub fn build_hyper_counterexample(st: &mut SymbolTable) -> FiniteModel {
    let p = st.intern_pred("P", 1).expect("arity 1");
    let q = st.intern_pred("Q", 1).expect("arity 1");
    let x = st.intern_var("x");
    let y = st.intern_var("y");
    let j = st.intern_var("j");
    let a = st.intern_agent("a");

    let (ex, ey, ej) = (Elem(0), Elem(1), Elem(2));
    let states = 2;
    let mut frame = FiniteFrame {
        state_names: vec!["w".into(), "v".into()],
        domain_names: vec!["ex".into(), "ey".into(), "ej".into()],
        agent_rel: BTreeMap::new(),
        gamma_rel: BTreeSet::from([
            (StateId(0), StateId(0)),
            (StateId(1), StateId(1)),
            (StateId(0), StateId(1)),
        ]),
    };
    frame.agent_rel.insert(
        a,
        BTreeSet::from([(StateId(0), StateId(0)), (StateId(1), StateId(1))]),
    );

    let mut term_table = BTreeMap::new();
    term_table.insert(Term::Var(x), ex);
    term_table.insert(Term::Var(y), ey);
    term_table.insert(Term::Var(j), ej);

    let diag: BTreeSet<(Elem, Elem)> = (0..3).map(|i| (Elem(i), Elem(i))).collect();
    let seeded = Formula::and(
        Formula::Pred(p, vec![Term::Var(x)]),
        Formula::Pred(q, vec![Term::Var(y)]),
    );
    let mut seeds: BTreeMap<Term, BTreeSet<Formula>> = BTreeMap::new();
    seeds.insert(Term::Var(j), BTreeSet::from([seeded]));

    let mut preds: BTreeMap<PredSym, BTreeSet<Vec<Elem>>> = BTreeMap::new();
    preds.insert(p, BTreeSet::from([vec![ex]]));
    preds.insert(q, BTreeSet::from([vec![ey]]));

    FiniteModel {
        frame,
        term_table,
        eq_interp: vec![diag.clone(); states],
        pred_interp: vec![preds.clone(); states],
        evidence_seed: vec![seeds.clone(); states],
    }
}

/// The two-state identity-intensionality counterexample: `t = s` holds at
/// the actual state only, `P` holds of `t` everywhere and fails of `s` at
/// the accessible state.
pub fn build_intensional_counterexample(st: &mut SymbolTable) -> FiniteModel {
    let p = st.intern_pred("P", 1).expect("arity 1");
    let t = st.intern_var("t");
    let s = st.intern_var("s");
    let a = st.intern_agent("a");

    let (et, es) = (Elem(0), Elem(1));
    let w = StateId(0);
    let v = StateId(1);
    let mut frame = FiniteFrame {
        state_names: vec!["w".into(), "v".into()],
        domain_names: vec!["et".into(), "es".into()],
        agent_rel: BTreeMap::new(),
        gamma_rel: BTreeSet::from([(w, w), (v, v)]),
    };
    frame
        .agent_rel
        .insert(a, BTreeSet::from([(w, w), (w, v), (v, w), (v, v)]));

    let mut term_table = BTreeMap::new();
    term_table.insert(Term::Var(t), et);
    term_table.insert(Term::Var(s), es);

    let diag: BTreeSet<(Elem, Elem)> = [(et, et), (es, es)].into();
    let mut eq_w = diag.clone();
    eq_w.insert((et, es));
    eq_w.insert((es, et));

    let mut preds_w: BTreeMap<PredSym, BTreeSet<Vec<Elem>>> = BTreeMap::new();
    preds_w.insert(p, BTreeSet::from([vec![et], vec![es]]));
    let mut preds_v: BTreeMap<PredSym, BTreeSet<Vec<Elem>>> = BTreeMap::new();
    preds_v.insert(p, BTreeSet::from([vec![et]]));

    FiniteModel {
        frame,
        term_table,
        eq_interp: vec![eq_w, diag],
        pred_interp: vec![preds_w, preds_v],
        evidence_seed: vec![BTreeMap::new(), BTreeMap::new()],
    }
}

/// Sizes and seeding knobs for [`random_model`].
#[derive(Debug, Clone)]
pub struct RandomModelParams {
    pub states: usize,
    pub agents: usize,
    pub domain: usize,
    pub extra_terms: usize,
    pub rel_edges: usize,
    pub eq_pairs: usize,
    pub pred_tuples: usize,
    pub evidence_entries: usize,
}

impl Default for RandomModelParams {
    fn default() -> RandomModelParams {
        RandomModelParams {
            states: 3,
            agents: 2,
            domain: 3,
            extra_terms: 3,
            rel_edges: 3,
            eq_pairs: 1,
            pred_tuples: 4,
            evidence_entries: 3,
        }
    }
}

/// Interned handles shared by the random generator and its callers.
pub struct RandomVocabulary {
    pub preds: Vec<PredSym>,
    pub agents: Vec<AgentName>,
    pub base_vars: Vec<Variable>,
}

/// Intern the fixed vocabulary used by random models: unary `P`/`Q`,
/// binary `R`, agents `a0..`, and base variables `g0..`.
pub fn random_vocabulary(
    params: &RandomModelParams,
    st: &mut SymbolTable,
) -> RandomVocabulary {
    let preds = vec![
        st.intern_pred("P", 1).expect("arity fixed"),
        st.intern_pred("Q", 1).expect("arity fixed"),
        st.intern_pred("R", 2).expect("arity fixed"),
    ];
    let agents = (0..params.agents)
        .map(|i| st.intern_agent(&format!("a{i}")))
        .collect();
    let base_vars = (0..params.domain + params.extra_terms)
        .map(|i| st.intern_var(&format!("g{i}")))
        .collect();
    RandomVocabulary {
        preds,
        agents,
        base_vars,
    }
}

/// Generate a model and repair it to validity: reflexive-Euclidean closure
/// of agent relations, reflexive-transitive closure of gamma, equivalence
/// closure of identity, uniform-replacement closure of predicates, and
/// gamma-propagation of evidence seeds. Deterministic per seed.
pub fn random_model(
    params: &RandomModelParams,
    rng_seed: u64,
    st: &mut SymbolTable,
) -> FiniteModel {
    let vocab = random_vocabulary(params, st);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let states = params.states.max(1);
    let domain = params.domain.max(1);

    let mut frame = FiniteFrame {
        state_names: (0..states).map(|i| format!("w{i}")).collect(),
        domain_names: (0..domain).map(|i| format!("e{i}")).collect(),
        agent_rel: BTreeMap::new(),
        gamma_rel: BTreeSet::new(),
    };
    let rand_state = |rng: &mut ChaCha8Rng| StateId(rng.gen_range(0..states) as u32);
    let rand_elem = |rng: &mut ChaCha8Rng| Elem(rng.gen_range(0..domain) as u32);

    for &agent in &vocab.agents {
        let mut rel = BTreeSet::new();
        for _ in 0..params.rel_edges {
            rel.insert((rand_state(&mut rng), rand_state(&mut rng)));
        }
        reflexive_euclidean_closure(&mut rel, states);
        frame.agent_rel.insert(agent, rel);
    }
    for _ in 0..params.rel_edges {
        frame
            .gamma_rel
            .insert((rand_state(&mut rng), rand_state(&mut rng)));
    }
    reflexive_transitive_closure(&mut frame.gamma_rel, states);

    // term table: cover the domain with the first variables, then add
    // random compound terms
    let mut term_table: BTreeMap<Term, Elem> = BTreeMap::new();
    for (i, &v) in vocab.base_vars.iter().take(domain).enumerate() {
        term_table.insert(Term::Var(v), Elem(i as u32));
    }
    for &v in vocab.base_vars.iter().skip(domain) {
        let choice = rng.gen_range(0..3u8);
        let term = match choice {
            0 => Term::Var(v),
            1 => {
                let f = vocab.base_vars[rng.gen_range(0..vocab.base_vars.len())];
                let a = vocab.base_vars[rng.gen_range(0..vocab.base_vars.len())];
                Term::app(Term::Var(f), Term::Var(a))
            }
            _ => {
                let b = vocab.base_vars[rng.gen_range(0..vocab.base_vars.len())];
                Term::lam(vocab.base_vars[0], Term::Var(b))
            }
        };
        term_table.entry(term).or_insert_with(|| rand_elem(&mut rng));
    }

    let mut eq_interp = Vec::with_capacity(states);
    for _ in 0..states {
        let mut eq = BTreeSet::new();
        for _ in 0..params.eq_pairs {
            eq.insert((rand_elem(&mut rng), rand_elem(&mut rng)));
        }
        equivalence_closure(&mut eq, domain);
        eq_interp.push(eq);
    }

    let mut pred_interp = Vec::with_capacity(states);
    for w in 0..states {
        let mut preds: BTreeMap<PredSym, BTreeSet<Vec<Elem>>> = BTreeMap::new();
        for _ in 0..params.pred_tuples {
            let p = vocab.preds[rng.gen_range(0..vocab.preds.len())];
            let arity = st.pred_arity(p);
            let tuple: Vec<Elem> = (0..arity).map(|_| rand_elem(&mut rng)).collect();
            preds.entry(p).or_default().insert(tuple);
        }
        for tuples in preds.values_mut() {
            replacement_closure(tuples, &eq_interp[w]);
        }
        pred_interp.push(preds);
    }

    let table_terms: Vec<Term> = term_table.keys().cloned().collect();
    let mut evidence_seed: Vec<BTreeMap<Term, BTreeSet<Formula>>> =
        vec![BTreeMap::new(); states];
    for _ in 0..params.evidence_entries {
        let w = rng.gen_range(0..states);
        let holder = table_terms[rng.gen_range(0..table_terms.len())].clone();
        let formula = random_seed_formula(&mut rng, &vocab, &table_terms, st);
        evidence_seed[w]
            .entry(holder)
            .or_default()
            .insert(formula);
    }

    let mut model = FiniteModel {
        frame,
        term_table,
        eq_interp,
        pred_interp,
        evidence_seed,
    };
    propagate_seeds(&mut model);
    model
}

/// A small random formula for evidence seeds: atoms, identities, one-level
/// implications and conjunctions, and occasional justifications.
fn random_seed_formula(
    rng: &mut ChaCha8Rng,
    vocab: &RandomVocabulary,
    table_terms: &[Term],
    st: &SymbolTable,
) -> Formula {
    fn atom(
        rng: &mut ChaCha8Rng,
        vocab: &RandomVocabulary,
        table_terms: &[Term],
        st: &SymbolTable,
    ) -> Formula {
        let pick = |rng: &mut ChaCha8Rng| table_terms[rng.gen_range(0..table_terms.len())].clone();
        if rng.gen_bool(0.25) {
            Formula::Eq(pick(rng), pick(rng))
        } else {
            let p = vocab.preds[rng.gen_range(0..vocab.preds.len())];
            let args = (0..st.pred_arity(p)).map(|_| pick(rng)).collect();
            Formula::Pred(p, args)
        }
    }
    match rng.gen_range(0..5u8) {
        0 => Formula::imp(
            atom(rng, vocab, table_terms, st),
            atom(rng, vocab, table_terms, st),
        ),
        1 => Formula::and(
            atom(rng, vocab, table_terms, st),
            atom(rng, vocab, table_terms, st),
        ),
        2 => {
            let j = table_terms[rng.gen_range(0..table_terms.len())].clone();
            Formula::just(j, atom(rng, vocab, table_terms, st))
        }
        _ => atom(rng, vocab, table_terms, st),
    }
}

/// A random closed-enough formula for evaluation-oriented fuzzing; depth
/// limits nesting, terms come from the model's table.
pub fn random_eval_formula(
    rng: &mut ChaCha8Rng,
    vocab: &RandomVocabulary,
    table_terms: &[Term],
    st: &mut SymbolTable,
    depth: usize,
) -> Formula {
    let pick = |rng: &mut ChaCha8Rng| table_terms[rng.gen_range(0..table_terms.len())].clone();
    if depth == 0 {
        return match rng.gen_range(0..3u8) {
            0 => Formula::Eq(pick(rng), pick(rng)),
            1 => Formula::Bot,
            _ => {
                let p = vocab.preds[rng.gen_range(0..vocab.preds.len())];
                let args = (0..st.pred_arity(p)).map(|_| pick(rng)).collect();
                Formula::Pred(p, args)
            }
        };
    }
    match rng.gen_range(0..7u8) {
        0 => Formula::imp(
            random_eval_formula(rng, vocab, table_terms, st, depth - 1),
            random_eval_formula(rng, vocab, table_terms, st, depth - 1),
        ),
        1 => Formula::and(
            random_eval_formula(rng, vocab, table_terms, st, depth - 1),
            random_eval_formula(rng, vocab, table_terms, st, depth - 1),
        ),
        2 => {
            let x = vocab.base_vars[rng.gen_range(0..vocab.base_vars.len())];
            Formula::forall(
                x,
                random_eval_formula(rng, vocab, table_terms, st, depth - 1),
            )
        }
        3 => {
            let a = vocab.agents[rng.gen_range(0..vocab.agents.len())];
            Formula::know(
                a,
                random_eval_formula(rng, vocab, table_terms, st, depth - 1),
            )
        }
        4 => Formula::just(
            pick(rng),
            random_eval_formula(rng, vocab, table_terms, st, depth - 1),
        ),
        _ => random_eval_formula(rng, vocab, table_terms, st, 0),
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelParseError {
    #[error("{0}")]
    Sexpr(#[from] sexpr::SexprError),
    #[error("{0}")]
    Formula(#[from] crate::syntax::ParseError),
    #[error("{0}")]
    Symbol(#[from] crate::syntax::SymbolError),
    #[error("malformed model: {0}")]
    Shape(String),
}

fn mshape(msg: impl Into<String>) -> ModelParseError {
    ModelParseError::Shape(msg.into())
}

/// Parse the s-expression model format.
pub fn parse_model(text: &str, st: &mut SymbolTable) -> Result<FiniteModel, ModelParseError> {
    let sx = sexpr::read_one(text)?;
    let items = sx.as_list().ok_or_else(|| mshape("model must be a list"))?;
    if items.first().and_then(Sexpr::as_atom) != Some("model") {
        return Err(mshape("expected `(model ...)`"));
    }

    let mut state_names: Vec<String> = Vec::new();
    let mut domain_names: Vec<String> = Vec::new();
    // first pass: states and domain so ids can resolve
    for item in &items[1..] {
        let block = item.as_list().ok_or_else(|| mshape("expected a block"))?;
        match block.first().and_then(Sexpr::as_atom) {
            Some("states") => {
                for s in &block[1..] {
                    state_names.push(
                        s.as_atom()
                            .ok_or_else(|| mshape("state names must be atoms"))?
                            .to_string(),
                    );
                }
            }
            Some("domain") => {
                for e in &block[1..] {
                    domain_names.push(
                        e.as_atom()
                            .ok_or_else(|| mshape("domain elements must be atoms"))?
                            .to_string(),
                    );
                }
            }
            _ => {}
        }
    }
    let state_id = |name: &str| -> Result<StateId, ModelParseError> {
        state_names
            .iter()
            .position(|n| n == name)
            .map(|i| StateId(i as u32))
            .ok_or_else(|| mshape(format!("unknown state `{name}`")))
    };
    let elem_id = |name: &str| -> Result<Elem, ModelParseError> {
        domain_names
            .iter()
            .position(|n| n == name)
            .map(|i| Elem(i as u32))
            .ok_or_else(|| mshape(format!("unknown domain element `{name}`")))
    };
    let atom_of = |sx: &Sexpr, what: &str| -> Result<String, ModelParseError> {
        sx.as_atom()
            .map(str::to_string)
            .ok_or_else(|| mshape(format!("expected {what}")))
    };
    let pair_of = |sx: &Sexpr| -> Result<(String, String), ModelParseError> {
        match sx.as_list() {
            Some([a, b]) => Ok((atom_of(a, "a state")?, atom_of(b, "a state")?)),
            _ => Err(mshape("expected a pair")),
        }
    };

    let mut model = FiniteModel {
        frame: FiniteFrame {
            state_names: state_names.clone(),
            domain_names: domain_names.clone(),
            agent_rel: BTreeMap::new(),
            gamma_rel: BTreeSet::new(),
        },
        term_table: BTreeMap::new(),
        eq_interp: vec![BTreeSet::new(); state_names.len()],
        pred_interp: vec![BTreeMap::new(); state_names.len()],
        evidence_seed: vec![BTreeMap::new(); state_names.len()],
    };

    for item in &items[1..] {
        let block = item.as_list().expect("checked in the first pass");
        match block.first().and_then(Sexpr::as_atom) {
            Some("states") | Some("domain") => {}
            Some("agent-rel") => {
                if block.len() < 2 {
                    return Err(mshape("agent-rel needs an agent name"));
                }
                let agent = st.intern_agent(&atom_of(&block[1], "an agent name")?);
                let entry = model.frame.agent_rel.entry(agent).or_default();
                for p in &block[2..] {
                    let (a, b) = pair_of(p)?;
                    entry.insert((state_id(&a)?, state_id(&b)?));
                }
            }
            Some("gamma-rel") => {
                for p in &block[1..] {
                    let (a, b) = pair_of(p)?;
                    model.frame.gamma_rel.insert((state_id(&a)?, state_id(&b)?));
                }
            }
            Some("term-table") => {
                for entry in &block[1..] {
                    match entry.as_list() {
                        Some([term_sx, elem_sx]) => {
                            let term_text = term_sx
                                .as_str()
                                .ok_or_else(|| mshape("table terms must be quoted"))?;
                            let term = parse_term(term_text, st)?;
                            let elem = elem_id(&atom_of(elem_sx, "a domain element")?)?;
                            model.term_table.insert(term, elem);
                        }
                        _ => return Err(mshape("term-table entries are (term elem) pairs")),
                    }
                }
            }
            Some("eq") => {
                if block.len() < 2 {
                    return Err(mshape("eq needs a state"));
                }
                let w = state_id(&atom_of(&block[1], "a state")?)?;
                for p in &block[2..] {
                    let (a, b) = pair_of(p)?;
                    model.eq_interp[w.0 as usize].insert((elem_id(&a)?, elem_id(&b)?));
                }
            }
            Some("pred") => {
                if block.len() < 3 {
                    return Err(mshape("pred needs a state and a symbol"));
                }
                let w = state_id(&atom_of(&block[1], "a state")?)?;
                let name = atom_of(&block[2], "a predicate symbol")?;
                let mut tuples: Vec<Vec<Elem>> = Vec::new();
                for tup in &block[3..] {
                    let items = tup
                        .as_list()
                        .ok_or_else(|| mshape("pred tuples must be lists"))?;
                    let mut tuple = Vec::with_capacity(items.len());
                    for e in items {
                        tuple.push(elem_id(&atom_of(e, "a domain element")?)?);
                    }
                    tuples.push(tuple);
                }
                let arity = tuples.first().map(Vec::len).unwrap_or(0);
                let p = st.intern_pred(&name, arity)?;
                model.pred_interp[w.0 as usize]
                    .entry(p)
                    .or_default()
                    .extend(tuples);
            }
            Some("evidence") => {
                if block.len() < 2 {
                    return Err(mshape("evidence needs a state"));
                }
                let w = state_id(&atom_of(&block[1], "a state")?)?;
                for entry in &block[2..] {
                    let items = entry
                        .as_list()
                        .ok_or_else(|| mshape("evidence entries must be lists"))?;
                    if items.is_empty() {
                        return Err(mshape("evidence entry needs a term"));
                    }
                    let term_text = items[0]
                        .as_str()
                        .ok_or_else(|| mshape("evidence terms must be quoted"))?;
                    let term = parse_term(term_text, st)?;
                    let set = model.evidence_seed[w.0 as usize]
                        .entry(term)
                        .or_default();
                    for f in &items[1..] {
                        let text = f
                            .as_str()
                            .ok_or_else(|| mshape("evidence formulas must be quoted"))?;
                        set.insert(parse_formula(text, st)?);
                    }
                }
            }
            Some(other) => return Err(mshape(format!("unknown block `{other}`"))),
            None => return Err(mshape("blocks must start with a tag")),
        }
    }
    Ok(model)
}

/// Render a model in the s-expression model format.
pub fn write_model(m: &FiniteModel, st: &SymbolTable) -> String {
    let mut blocks: Vec<Sexpr> = vec![Sexpr::atom("model")];
    blocks.push(Sexpr::list(
        std::iter::once(Sexpr::atom("states"))
            .chain(m.frame.state_names.iter().map(Sexpr::atom))
            .collect(),
    ));
    blocks.push(Sexpr::list(
        std::iter::once(Sexpr::atom("domain"))
            .chain(m.frame.domain_names.iter().map(Sexpr::atom))
            .collect(),
    ));
    let sn = |s: StateId| Sexpr::atom(&m.frame.state_names[s.0 as usize]);
    let en = |e: Elem| Sexpr::atom(&m.frame.domain_names[e.0 as usize]);
    for (agent, rel) in &m.frame.agent_rel {
        let mut items = vec![Sexpr::atom("agent-rel"), Sexpr::atom(st.agent_name(*agent))];
        for &(a, b) in rel {
            items.push(Sexpr::list(vec![sn(a), sn(b)]));
        }
        blocks.push(Sexpr::list(items));
    }
    let mut gamma = vec![Sexpr::atom("gamma-rel")];
    for &(a, b) in &m.frame.gamma_rel {
        gamma.push(Sexpr::list(vec![sn(a), sn(b)]));
    }
    blocks.push(Sexpr::list(gamma));
    let mut table = vec![Sexpr::atom("term-table")];
    for (t, e) in &m.term_table {
        table.push(Sexpr::list(vec![
            Sexpr::string(print_term(t, st)),
            en(*e),
        ]));
    }
    blocks.push(Sexpr::list(table));
    for w in m.frame.states() {
        let eq = m.eq_at(w);
        if !eq.is_empty() {
            let mut items = vec![Sexpr::atom("eq"), sn(w)];
            for &(a, b) in eq {
                items.push(Sexpr::list(vec![en(a), en(b)]));
            }
            blocks.push(Sexpr::list(items));
        }
        for (p, tuples) in m.preds_at(w) {
            let mut items = vec![Sexpr::atom("pred"), sn(w), Sexpr::atom(st.pred_name(*p))];
            for tuple in tuples {
                items.push(Sexpr::list(tuple.iter().map(|&e| en(e)).collect()));
            }
            blocks.push(Sexpr::list(items));
        }
        let seeds = &m.evidence_seed[w.0 as usize];
        if !seeds.is_empty() {
            let mut items = vec![Sexpr::atom("evidence"), sn(w)];
            for (t, fs) in seeds {
                let mut entry = vec![Sexpr::string(print_term(t, st))];
                for f in fs {
                    entry.push(Sexpr::string(print_formula(f, st)));
                }
                items.push(Sexpr::list(entry));
            }
            blocks.push(Sexpr::list(items));
        }
    }
    sexpr::write(&Sexpr::list(blocks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_state_model(st: &mut SymbolTable) -> FiniteModel {
        let a = st.intern_agent("a");
        let x = st.intern_var("x");
        let mut frame = FiniteFrame {
            state_names: vec!["w".into()],
            domain_names: vec!["e".into()],
            agent_rel: BTreeMap::new(),
            gamma_rel: BTreeSet::from([(StateId(0), StateId(0))]),
        };
        frame
            .agent_rel
            .insert(a, BTreeSet::from([(StateId(0), StateId(0))]));
        FiniteModel {
            frame,
            term_table: BTreeMap::from([(Term::Var(x), Elem(0))]),
            eq_interp: vec![BTreeSet::from([(Elem(0), Elem(0))])],
            pred_interp: vec![BTreeMap::new()],
            evidence_seed: vec![BTreeMap::new()],
        }
    }

    #[test]
    fn minimal_model_is_valid() {
        let mut st = SymbolTable::new();
        let m = single_state_model(&mut st);
        assert!(validate_model(&m, &st).is_valid());
    }

    #[test]
    fn missing_reflexive_edge_is_reported() {
        let mut st = SymbolTable::new();
        let mut m = single_state_model(&mut st);
        let a = st.intern_agent("a");
        m.frame.agent_rel.insert(a, BTreeSet::new());
        let report = validate_model(&m, &st);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::AgentNotReflexive { .. })));
    }

    #[test]
    fn replacement_closure_violation_is_reported() {
        let mut st = SymbolTable::new();
        let p = st.intern_pred("P", 1).unwrap();
        let mut m = single_state_model(&mut st);
        let y = st.intern_var("y");
        m.frame.domain_names.push("d".into());
        m.term_table.insert(Term::Var(y), Elem(1));
        m.eq_interp[0] = BTreeSet::from([
            (Elem(0), Elem(0)),
            (Elem(1), Elem(1)),
            (Elem(0), Elem(1)),
            (Elem(1), Elem(0)),
        ]);
        // P holds of e but not of the eq-related d
        m.pred_interp[0].insert(p, BTreeSet::from([vec![Elem(0)]]));
        let report = validate_model(&m, &st);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PredNotReplacementClosed { .. })));
    }

    #[test]
    fn bot_is_false_and_identity_reflexive() {
        let mut st = SymbolTable::new();
        let m = single_state_model(&mut st);
        let iw = Assignment::interpretation(&m, StateId(0));
        assert_eq!(eval(&m, StateId(0), &iw, &Formula::Bot, 4), Ok(false));
        let x = st.intern_var("x");
        let eq = Formula::Eq(Term::Var(x), Term::Var(x));
        assert_eq!(eval(&m, StateId(0), &iw, &eq, 4), Ok(true));
    }

    #[test]
    fn unknown_terms_are_errors() {
        let mut st = SymbolTable::new();
        let m = single_state_model(&mut st);
        let iw = Assignment::interpretation(&m, StateId(0));
        let z = st.intern_var("zq");
        let eq = Formula::Eq(Term::Var(z), Term::Var(z));
        assert!(matches!(
            eval(&m, StateId(0), &iw, &eq, 4),
            Err(EvalError::UnknownTerm(_))
        ));
    }

    #[test]
    fn evidence_membership_follows_seed_bang_and_gamma() {
        let mut st = SymbolTable::new();
        let m = build_hyper_counterexample(&mut st);
        let j = parse_term("j", &mut st).unwrap();
        let seeded = parse_formula("P(x) & Q(y)", &mut st).unwrap();
        let w = StateId(0);
        assert_eq!(e_member(&m, w, &j, &seeded, 4), Trivalent::True);
        // proof-checker closure
        let banged = parse_formula("!j : (j : (P(x) & Q(y)))", &mut st).unwrap();
        let (bj, inner) = match banged {
            Formula::Just(t, b) => (t, *b),
            _ => unreachable!(),
        };
        assert_eq!(e_member(&m, w, &bj, &inner, 4), Trivalent::True);
        // gamma-successor inherits
        assert_eq!(e_member(&m, StateId(1), &j, &seeded, 4), Trivalent::True);
        // the swapped conjunction is justified by nothing
        let swapped = parse_formula("Q(y) & P(x)", &mut st).unwrap();
        for k in m.term_table.keys() {
            assert_eq!(e_member(&m, w, k, &swapped, 6), Trivalent::False);
        }
    }

    #[test]
    fn justified_identity_rewriting_is_bidirectional() {
        let mut st = SymbolTable::new();
        let mut m = single_state_model(&mut st);
        let c = st.intern_pred("C", 1).unwrap();
        let (s, u, j, k) = (
            st.intern_var("s"),
            st.intern_var("u"),
            st.intern_var("j"),
            st.intern_var("k"),
        );
        m.frame.domain_names = vec!["e0".into(), "e1".into()];
        m.term_table = BTreeMap::from([
            (Term::Var(s), Elem(0)),
            (Term::Var(u), Elem(1)),
            (Term::Var(j), Elem(0)),
            (Term::Var(k), Elem(0)),
        ]);
        let mut eq = BTreeSet::from([(Elem(0), Elem(1))]);
        equivalence_closure(&mut eq, 2);
        m.eq_interp = vec![eq];
        let mut tuples = BTreeSet::from([vec![Elem(0)]]);
        replacement_closure(&mut tuples, &m.eq_interp[0]);
        m.pred_interp = vec![BTreeMap::from([(c, tuples)])];
        let cs = Formula::Pred(c, vec![Term::Var(s)]);
        let cu = Formula::Pred(c, vec![Term::Var(u)]);
        let ident = Formula::Eq(Term::Var(s), Term::Var(u));
        m.evidence_seed = vec![BTreeMap::from([
            (Term::Var(j), BTreeSet::from([cs.clone()])),
            (Term::Var(k), BTreeSet::from([ident])),
        ])];
        let w = StateId(0);
        assert_eq!(e_member(&m, w, &Term::Var(j), &cu, 6), Trivalent::True);
        // and back again via the converse orientation
        assert_eq!(e_member(&m, w, &Term::Var(j), &cs, 6), Trivalent::True);
        // something unrelated stays out
        let ck = Formula::Pred(c, vec![Term::Var(Variable(99))]);
        assert_eq!(e_member(&m, w, &Term::Var(j), &ck, 6), Trivalent::False);
    }

    #[test]
    fn random_models_validate_and_are_deterministic() {
        let mut st = SymbolTable::new();
        let params = RandomModelParams::default();
        for seed in 0..25 {
            let m = random_model(&params, seed, &mut st);
            let report = validate_model(&m, &st);
            assert!(
                report.is_valid(),
                "seed {seed}: {:?}",
                report
                    .violations
                    .iter()
                    .map(|v| v.render(&m, &st))
                    .collect::<Vec<_>>()
            );
        }
        let a = random_model(&params, 42, &mut st);
        let b = random_model(&params, 42, &mut st);
        assert_eq!(a, b);
    }

    #[test]
    fn model_file_round_trip() {
        let mut st = SymbolTable::new();
        let m = build_intensional_counterexample(&mut st);
        let text = write_model(&m, &st);
        let back = parse_model(&text, &mut st).unwrap();
        assert_eq!(back, m);
    }
}
