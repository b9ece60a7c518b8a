//! The built-in corpus: derivations (propositional, quantifier, identity,
//! epistemic, justification and trust cases, the Barcan formula and the
//! excluded-middle instance), the hyperintensionality and identity
//! counterexample models, the advertising-services trust scenario, and the
//! probabilistic program-identity pipeline.

use crate::lambda::{encode_pair, proj1, proj2, reduces_to, ReduceOutcome};
use crate::proof::{build, check, derives, Derivation, Multiset};
use crate::semantics::{
    build_hyper_counterexample, build_intensional_counterexample, consequence, e_member, eval,
    random_model, validate_model, Assignment, Elem, FiniteModel, RandomModelParams, StateId,
    Trivalent,
};
use crate::syntax::{AgentName, Formula, SymbolTable, Term, Variable};
use crate::theory::{
    leftmost_term, lift_t, sigma_prob_eq, ProbClosure, ProbDist, ProbFact, Theory, TheoryError,
};
use num::bigint::BigInt;
use num::rational::BigRational;
use std::collections::{BTreeMap, BTreeSet};

/// One corpus derivation: a named sequent with a checking witness.
pub struct CorpusEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub hyps: BTreeSet<Formula>,
    pub goal: Formula,
    pub derivation: Derivation,
    /// Whether the entry takes part in the random-model soundness fuzz.
    /// Trust-sugar derivations are validated proof-theoretically instead:
    /// the elimination rule discards its witness, which the existential
    /// truth clause for `T` does not support state-pointwise.
    pub fuzz: bool,
}

/// The derivation corpus plus the symbol table everything was built in.
pub struct Corpus {
    pub st: SymbolTable,
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn entry(&self, id: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn fuzz_entries(&self) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.iter().filter(|e| e.fuzz)
    }
}

fn pred1(st: &mut SymbolTable, name: &str, t: Term) -> Formula {
    let p = st.intern_pred(name, 1).expect("fixed arity");
    Formula::Pred(p, vec![t])
}

/// Build the full corpus in a fresh symbol table.
pub fn build_corpus() -> Corpus {
    let mut st = SymbolTable::new();
    let mut entries = Vec::new();

    // Shared vocabulary; the g-variables coincide with the random model
    // generator's term universe so the fuzz needs no remapping.
    let g: Vec<Variable> = (0..6).map(|i| st.intern_var(&format!("g{i}"))).collect();
    let a0 = st.intern_agent("a0");
    let var = |i: usize| Term::Var(g[i]);

    let p = |st: &mut SymbolTable, t: Term| pred1(st, "P", t);
    let q = |st: &mut SymbolTable, t: Term| pred1(st, "Q", t);
    let dpred = |st: &mut SymbolTable, t: Term| pred1(st, "D", t);

    let mut push = |id: &'static str,
                    description: &'static str,
                    fuzz: bool,
                    derivation: Derivation,
                    entries: &mut Vec<CorpusEntry>| {
        let hyps: BTreeSet<Formula> = derivation.sequent.context.support().cloned().collect();
        let goal = derivation.sequent.conclusion.clone();
        entries.push(CorpusEntry {
            id,
            description,
            hyps,
            goal,
            derivation,
            fuzz,
        });
    };

    {
        let a = p(&mut st, var(0));
        push("ax", "A => A", true, build::ax(a), &mut entries);
    }
    {
        let a = p(&mut st, var(0));
        let b = q(&mut st, var(1));
        let d = build::imp_i(
            a.clone(),
            build::imp_i(b.clone(), build::weak([b], build::ax(a))),
        );
        push("weak-k-combinator", "=> A -> B -> A", true, d, &mut entries);
    }
    {
        let a = p(&mut st, var(0));
        let b = q(&mut st, var(1));
        let ab = Formula::and(a, b);
        let d = build::contr(
            Multiset::singleton(ab.clone()),
            build::and_i(
                build::and_e2(build::ax(ab.clone())),
                build::and_e1(build::ax(ab)),
            ),
        );
        push("and-commute", "A & B => B & A", true, d, &mut entries);
    }
    {
        let d = build::eq_sym(build::ax(Formula::Eq(var(0), var(1))));
        push("eq-sym", "t = s => s = t", true, d, &mut entries);
    }
    {
        let d = build::eq_trans(
            build::ax(Formula::Eq(var(0), var(1))),
            build::ax(Formula::Eq(var(1), var(2))),
        );
        push("eq-trans", "t = s, s = u => t = u", true, d, &mut entries);
    }
    {
        let scheme = p(&mut st, var(5));
        let d = build::eq_subst(
            scheme,
            g[5],
            build::ax(Formula::Eq(var(0), var(1))),
            build::ax(p(&mut st, var(0))),
        );
        push("eq-subst-pred", "t = s, P(t) => P(s)", true, d, &mut entries);
    }
    {
        let ka = Formula::know(a0, p(&mut st, var(0)));
        push("k-factivity", "K A => A", true, build::k_t(build::ax(ka)), &mut entries);
    }
    {
        let imp = Formula::imp(p(&mut st, var(0)), q(&mut st, var(0)));
        let d = build::k_dist(
            build::ax(Formula::know(a0, imp)),
            build::ax(Formula::know(a0, p(&mut st, var(0)))),
        );
        push("k-dist", "K(A -> B), K A => K B", true, d, &mut entries);
    }
    {
        let ka = Formula::know(a0, p(&mut st, var(0)));
        let d = build::k_nec(a0, build::ax(ka));
        push("k-introspection", "K A => K K A", true, d, &mut entries);
    }
    {
        let nk = Formula::neg(Formula::know(a0, p(&mut st, var(0))));
        let d = build::k_5(build::ax(nk));
        push("k-5", "~K A => K ~K A", true, d, &mut entries);
    }
    {
        let ja = Formula::just(var(4), p(&mut st, var(0)));
        push("j-factivity", "j : A => A", true, build::j_t(build::ax(ja)), &mut entries);
    }
    {
        let ja = Formula::just(var(4), p(&mut st, var(0)));
        let d = build::j_bang(build::ax(ja));
        push("j-bang", "j : A => !j : (j : A)", true, d, &mut entries);
    }
    {
        // closed bodies keep the evidence-instance condition exact
        let idterm = Term::lam(g[0], var(0));
        let a = p(&mut st, idterm.clone());
        let b = q(&mut st, idterm.clone());
        let d = build::j_app(
            build::ax(Formula::just(var(4), Formula::imp(a.clone(), b))),
            build::ax(Formula::just(var(5), a)),
        );
        push(
            "j-app-closed",
            "j : (A -> B), k : A => jk : B",
            true,
            d,
            &mut entries,
        );
    }
    {
        let tc = Term::lam(g[0], var(0));
        let sc = Term::lam(g[0], Term::lam(g[1], var(1)));
        let scheme = p(&mut st, var(5));
        let d = build::j_eq_l(
            scheme,
            g[5],
            build::ax(Formula::just(var(5), Formula::Eq(tc.clone(), sc))),
            build::ax(Formula::just(var(4), p(&mut st, tc))),
        );
        push(
            "j-eq-closed",
            "k : t = s, j : P(t) => j : P(s)",
            true,
            d,
            &mut entries,
        );
    }
    {
        let a = p(&mut st, var(0));
        let d = build::dne(build::ax(Formula::neg(Formula::neg(a))));
        push("dne", "~~A => A", true, d, &mut entries);
    }
    {
        let d = build::efq(p(&mut st, var(0)), build::ax(Formula::Bot));
        push("efq", "bot => P", true, d, &mut entries);
    }
    {
        let all = Formula::forall(g[2], p(&mut st, Term::Var(g[2])));
        let d = build::all_e(var(0), build::ax(all));
        push("all-e", "forall x. P(x) => P(t)", true, d, &mut entries);
    }
    {
        let all = Formula::forall(g[2], p(&mut st, Term::Var(g[2])));
        let body = p(&mut st, Term::Var(g[3]));
        let d = build::all_i(
            g[3],
            body,
            g[3],
            build::all_e(Term::Var(g[3]), build::ax(all)),
        );
        push(
            "all-rebind",
            "forall x. P(x) => forall y. P(y)",
            true,
            d,
            &mut entries,
        );
    }
    {
        let d = barcan(&mut st, a0, g[2]);
        push(
            "bf",
            "=> forall x. K P(x) -> K forall x. P(x)",
            true,
            d,
            &mut entries,
        );
    }
    {
        let alld = Formula::forall(g[2], dpred(&mut st, Term::Var(g[2])));
        let d = excluded_middle(alld);
        push(
            "em",
            "=> ~(~forall x. D(x) & ~~forall x. D(x))",
            true,
            d,
            &mut entries,
        );
    }
    {
        let ex2 = example2(&mut st);
        entries.push(CorpusEntry {
            id: "example2",
            description: "trusted classifier transfers along trusted identity",
            hyps: ex2.hyps,
            goal: ex2.goal,
            derivation: ex2.derivation,
            fuzz: false,
        });
    }
    {
        let ex3 = example3(&mut st).expect("the built-in behavior facts are well-formed");
        entries.push(CorpusEntry {
            id: "example3",
            description: "probabilistic program identity lifts to trust",
            hyps: ex3.hyps.formulas.into_iter().collect(),
            goal: ex3.goal,
            derivation: ex3.derivation,
            fuzz: false,
        });
    }

    Corpus { st, entries }
}

/// The Barcan formula `forall x. K[a] A -> K[a] forall x. A` with `A = P(x)`,
/// as derived in the appendix.
pub fn barcan(st: &mut SymbolTable, a: AgentName, x: Variable) -> Derivation {
    let px = pred1(st, "P", Term::Var(x));
    let kp = Formula::know(a, px.clone());
    let allkp = Formula::forall(x, kp.clone());
    let nallkp = Formula::neg(allkp.clone());
    let knallkp = Formula::know(a, nallkp.clone());
    let nknallkp = Formula::neg(knallkp.clone());
    let big = Formula::know(a, nknallkp.clone());
    let allp = Formula::forall(x, px.clone());

    // delta_1: => K ~K ~forall x. K P(x) -> K forall x. P(x)
    let r = build::k_nec(
        a,
        build::imp_i(
            allkp.clone(),
            build::imp_e(
                build::k_t(build::ax(Formula::know(a, Formula::neg(kp.clone())))),
                build::all_e(Term::Var(x), build::ax(allkp.clone())),
            ),
        ),
    );
    let n4 = build::imp_i(
        Formula::know(a, Formula::neg(kp.clone())),
        build::imp_e(build::k_t(build::ax(big.clone())), r),
    );
    let n5 = build::imp_e(n4, build::k_5(build::ax(Formula::neg(kp.clone()))));
    let n8 = build::k_t(build::dne(build::imp_i(Formula::neg(kp.clone()), n5)));
    let n9 = build::all_i(x, px, x, n8);
    let delta1 = build::imp_i(big.clone(), build::k_nec(a, n9));

    // delta_2: forall x. K P(x) => K ~K ~forall x. K P(x)
    let t4 = build::imp_i(
        nallkp.clone(),
        build::imp_e(build::ax(nallkp.clone()), build::ax(allkp.clone())),
    );
    let t7 = build::imp_e(t4, build::k_t(build::ax(knallkp.clone())));
    let delta2 = build::k_5(build::imp_i(knallkp, t7));

    build::imp_i(allkp, build::imp_e(delta1, delta2))
}

/// The excluded-middle instance `=> ~(~B & ~~B)` for a given `B`.
pub fn excluded_middle(b: Formula) -> Derivation {
    let both = Formula::and(Formula::neg(b.clone()), Formula::neg(Formula::neg(b)));
    let clash = build::imp_e(
        build::and_e2(build::ax(both.clone())),
        build::and_e1(build::ax(both.clone())),
    );
    build::imp_i(
        both.clone(),
        build::contr(Multiset::singleton(both), clash),
    )
}

/// The advertising-services scenario: hypotheses, goal, derivation, and the
/// underivable negative sequent.
pub struct Example2 {
    pub hyps: BTreeSet<Formula>,
    pub goal: Formula,
    pub derivation: Derivation,
    pub neg_hyps: BTreeSet<Formula>,
    pub neg_goal: Formula,
}

/// `T[a,s] C(s), T[a,u] s = u |- T[a,u] C(u)`, transcribed tree.
pub fn example2(st: &mut SymbolTable) -> Example2 {
    let a = st.intern_agent("a");
    let s = Term::Var(st.intern_var("s"));
    let u = Term::Var(st.intern_var("u"));
    let t = Term::Var(st.intern_var("t"));
    let x = st.intern_var("x");
    let y = st.intern_var("y");
    let z = st.intern_var("z");

    let cs = pred1(st, "C", s.clone());
    let cu = pred1(st, "C", u.clone());
    let ct = pred1(st, "C", t.clone());
    let su = Formula::Eq(s.clone(), u.clone());
    let st_eq = Formula::Eq(s.clone(), t.clone());

    let h_id = Formula::trust(a, u.clone(), su.clone());
    let h_cs = Formula::trust(a, s.clone(), cs.clone());

    let left = build::k_t(build::t_elim(y, build::ax(h_id.clone())));
    let right = build::k_t(build::t_elim(x, build::ax(h_cs.clone())));
    let joined = build::j_eq_l(pred1(st, "C", Term::Var(z)), z, left, right);
    let derivation = build::t_intro(u.clone(), build::nec_kt(a, joined));

    let goal = Formula::trust(a, u, cu);
    let neg_hyps = BTreeSet::from([
        Formula::neg(Formula::trust(a, t.clone(), st_eq)),
        h_id.clone(),
        h_cs.clone(),
    ]);
    let neg_goal = Formula::trust(a, t, ct);

    Example2 {
        hyps: BTreeSet::from([h_id, h_cs]),
        goal,
        derivation,
        neg_hyps,
        neg_goal,
    }
}

/// The probabilistic pipeline: behavior facts, their identity closure, the
/// transcribed chain, the lifted trust hypotheses, and the derivation of
/// the program-identity trust conclusion.
pub struct Example3 {
    pub facts: Vec<ProbFact>,
    pub closure: ProbClosure,
    /// The chain `((1,u)) = r1, r1 = r2, r2 = r3, r3 = D` plus the root
    /// fact for `s`, in derivation order.
    pub chain: Vec<(ProbDist, ProbDist)>,
    pub hyps: Theory,
    pub goal: Formula,
    pub derivation: Derivation,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Behavior facts of the two advertising services.
pub fn example3_facts(st: &mut SymbolTable) -> Vec<ProbFact> {
    let s = Term::Var(st.intern_var("s"));
    let u = Term::Var(st.intern_var("u"));
    let u1 = Term::Var(st.intern_var("u1"));
    let u2 = Term::Var(st.intern_var("u2"));
    let o1 = Term::Var(st.intern_var("o1"));
    let o2 = Term::Var(st.intern_var("o2"));
    vec![
        ProbFact { source: s.clone(), probability: rat(1, 4), target: o1.clone() },
        ProbFact { source: s, probability: rat(3, 4), target: o2.clone() },
        ProbFact { source: u.clone(), probability: rat(3, 4), target: u1.clone() },
        ProbFact { source: u, probability: rat(1, 4), target: u2.clone() },
        ProbFact { source: u1.clone(), probability: rat(1, 3), target: o1 },
        ProbFact { source: u1, probability: rat(2, 3), target: o2.clone() },
        ProbFact { source: u2, probability: rat(1, 1), target: o2 },
    ]
}

pub fn example3(st: &mut SymbolTable) -> Result<Example3, TheoryError> {
    let facts = example3_facts(st);
    let a = st.intern_agent("a");
    let s = Term::Var(st.intern_var("s"));
    let u = Term::Var(st.intern_var("u"));
    let u1 = Term::Var(st.intern_var("u1"));
    let u2 = Term::Var(st.intern_var("u2"));
    let o1 = Term::Var(st.intern_var("o1"));
    let o2 = Term::Var(st.intern_var("o2"));

    let closure = sigma_prob_eq(&facts, 4)?;

    let dist_d = ProbDist::new(vec![(rat(1, 4), o1.clone()), (rat(3, 4), o2.clone())]);
    let r1 = ProbDist::new(vec![(rat(3, 4), u1), (rat(1, 4), u2.clone())]);
    let r2 = ProbDist::new(vec![
        (rat(1, 4), o1.clone()),
        (rat(1, 2), o2.clone()),
        (rat(1, 4), u2),
    ]);
    let r3 = ProbDist::new(vec![
        (rat(1, 4), o1),
        (rat(1, 2), o2.clone()),
        (rat(1, 4), o2),
    ]);
    let chain = vec![
        (ProbDist::unit(s.clone()), dist_d.clone()),
        (ProbDist::unit(u.clone()), r1.clone()),
        (r1, r2.clone()),
        (r2, r3.clone()),
        (r3, dist_d),
    ];

    let chain_theory = Theory::from_formulas(
        "example3-chain",
        chain.iter().map(|(l, r)| Formula::Eq(l.encode(), r.encode())),
    );
    let hyps = lift_t(&chain_theory, a, leftmost_term)?;

    // fresh justification variables at high canonical indices, away from
    // both the program variables and the encoding binders
    let fresh: Vec<Variable> = (0..5).map(|i| st.intern_var(&format!("x{}", 100 + i))).collect();
    let idents: Vec<Formula> = chain
        .iter()
        .map(|(l, r)| Formula::Eq(l.encode(), r.encode()))
        .collect();
    let elim = |i: usize, st_: &Formula| -> Derivation {
        let subject = leftmost_term(st_).expect("identities have a left side");
        let hyp = Formula::trust(a, subject, st_.clone());
        build::k_t(build::t_elim(fresh[i], build::ax(hyp)))
    };
    let e0 = elim(0, &idents[0]);
    let e1 = elim(1, &idents[1]);
    let e2 = elim(2, &idents[2]);
    let e3 = elim(3, &idents[3]);
    let e4 = elim(4, &idents[4]);

    let z = st.intern_var(&format!("x{}", 105));
    let lhs_u = ProbDist::unit(u).encode();
    let scheme = Formula::Eq(lhs_u.clone(), Term::Var(z));
    let c1 = build::j_eq_l(scheme.clone(), z, e2, e1);
    let c2 = build::j_eq_l(scheme.clone(), z, e3, c1);
    let c3 = build::j_eq_l(scheme.clone(), z, e4, c2);
    let c4 = build::j_eq_r(scheme, z, e0, c3);
    let derivation = build::t_intro(lhs_u.clone(), build::nec_kt(a, c4));

    let goal = Formula::trust(
        a,
        lhs_u.clone(),
        Formula::Eq(lhs_u, ProbDist::unit(s).encode()),
    );

    Ok(Example3 {
        facts,
        closure,
        chain,
        hyps,
        goal,
        derivation,
    })
}

/// The handcrafted countermodel sketched for the negative trust claim: at
/// the accessible state `v`, `s = t` fails and nothing justifies `C(t)`.
pub fn example2_model(st: &mut SymbolTable) -> FiniteModel {
    let a = st.intern_agent("a");
    let s = Term::Var(st.intern_var("s"));
    let u = Term::Var(st.intern_var("u"));
    let t = Term::Var(st.intern_var("t"));
    let j = Term::Var(st.intern_var("j"));
    let k = Term::Var(st.intern_var("k"));
    let c = st.intern_pred("C", 1).expect("arity 1");

    let (w, v) = (StateId(0), StateId(1));
    let es = Elem(0);
    let eu = Elem(1);
    let et = Elem(2);
    let ej = Elem(3);
    let ek = Elem(4);

    let mut model = FiniteModel::default();
    model.frame.state_names = vec!["w".into(), "v".into()];
    model.frame.domain_names = (0..5).map(|i| format!("d{i}")).collect();
    model
        .frame
        .agent_rel
        .insert(a, BTreeSet::from([(w, w), (w, v), (v, w), (v, v)]));
    model.frame.gamma_rel = BTreeSet::from([(w, w), (v, v)]);
    model.term_table = BTreeMap::from([
        (s.clone(), es),
        (u.clone(), eu),
        (t.clone(), et),
        (j.clone(), ej),
        (k.clone(), ek),
    ]);

    let diag: BTreeSet<(Elem, Elem)> = (0..5).map(|i| (Elem(i), Elem(i))).collect();
    // at w everything Alice relies on holds, including the unobserved s = t
    let mut eq_w = diag.clone();
    for (x, y) in [(es, eu), (es, et), (eu, et)] {
        eq_w.insert((x, y));
        eq_w.insert((y, x));
    }
    let mut eq_v = diag;
    eq_v.insert((es, eu));
    eq_v.insert((eu, es));
    model.eq_interp = vec![eq_w, eq_v];

    let cw = BTreeSet::from([vec![es], vec![eu], vec![et]]);
    let cv = BTreeSet::from([vec![es], vec![eu]]);
    model.pred_interp = vec![
        BTreeMap::from([(c, cw)]),
        BTreeMap::from([(c, cv)]),
    ];

    let cs = Formula::Pred(c, vec![s.clone()]);
    let ident = Formula::Eq(s, u);
    let seeds = BTreeMap::from([
        (j, BTreeSet::from([cs])),
        (k, BTreeSet::from([ident])),
    ]);
    model.evidence_seed = vec![seeds.clone(), seeds];
    model
}

/// A random valid model with the negative-claim construction grafted on:
/// two extra states forming their own `R_a` class, fresh elements for the
/// three services, evidence for `C(s)` and `s = u` only.
pub fn example2_embedded(
    params: &RandomModelParams,
    seed: u64,
    st: &mut SymbolTable,
) -> (FiniteModel, StateId) {
    let mut m = random_model(params, seed, st);
    let graft = example2_model(st);
    let a = st.intern_agent("a");

    let base_states = m.frame.state_names.len() as u32;
    let base_elems = m.frame.domain_names.len() as u32;
    let w = StateId(base_states);
    let v = StateId(base_states + 1);
    m.frame.state_names.push("exw".into());
    m.frame.state_names.push("exv".into());
    for name in &graft.frame.domain_names {
        m.frame.domain_names.push(format!("ex_{name}"));
    }
    let shift_elem = |e: Elem| Elem(e.0 + base_elems);
    let shift_state = |sid: StateId| StateId(sid.0 + base_states);

    // every declared agent must stay reflexive over the new states
    for rel in m.frame.agent_rel.values_mut() {
        rel.insert((w, w));
        rel.insert((v, v));
    }
    let entry = m.frame.agent_rel.entry(a).or_default();
    for sid in 0..base_states {
        entry.insert((StateId(sid), StateId(sid)));
    }
    for &(x, y) in graft.frame.agent_rel.get(&a).expect("graft declares a") {
        entry.insert((shift_state(x), shift_state(y)));
    }
    for &(x, y) in &graft.frame.gamma_rel {
        m.frame.gamma_rel.insert((shift_state(x), shift_state(y)));
    }

    for (term, elem) in &graft.term_table {
        m.term_table.insert(term.clone(), shift_elem(*elem));
    }

    // old states: new elements are isolated diagonal points
    for eq in &mut m.eq_interp {
        for e in base_elems..base_elems + 5 {
            eq.insert((Elem(e), Elem(e)));
        }
    }
    for (idx, graft_eq) in graft.eq_interp.iter().enumerate() {
        let mut eq: BTreeSet<(Elem, Elem)> = (0..base_elems + 5)
            .map(|e| (Elem(e), Elem(e)))
            .collect();
        for &(x, y) in graft_eq {
            eq.insert((shift_elem(x), shift_elem(y)));
        }
        let _ = idx;
        m.eq_interp.push(eq);
    }
    for graft_preds in &graft.pred_interp {
        let mut preds = BTreeMap::new();
        for (p, tuples) in graft_preds {
            let shifted: BTreeSet<Vec<Elem>> = tuples
                .iter()
                .map(|tup| tup.iter().map(|&e| shift_elem(e)).collect())
                .collect();
            preds.insert(*p, shifted);
        }
        m.pred_interp.push(preds);
    }
    for graft_seeds in &graft.evidence_seed {
        m.evidence_seed.push(graft_seeds.clone());
    }
    (m, w)
}

/// Pass/fail record for one built-in case.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

fn case(id: &str, pass: bool, detail: impl Into<String>) -> CaseResult {
    CaseResult {
        id: id.to_string(),
        pass,
        detail: detail.into(),
    }
}

/// Run every built-in corpus case (optionally filtered by id), each
/// reporting one machine-readable record.
pub fn run_cases(filter: Option<&str>, depth: usize) -> Vec<CaseResult> {
    let corpus = build_corpus();
    let mut results = Vec::new();
    let want = |id: &str| filter.map_or(true, |f| f == id);

    for entry in &corpus.entries {
        if !want(entry.id) {
            continue;
        }
        let report = check(&entry.derivation);
        let pass = report.is_ok()
            && derives(&entry.hyps, &entry.goal, &entry.derivation).unwrap_or(false);
        let detail = match &report.failure {
            Some(f) => format!("check failed: {f}"),
            None => format!("{} nodes", entry.derivation.node_count()),
        };
        results.push(case(entry.id, pass, detail));
    }

    if want("hyper-model") {
        results.push(hyper_model_case(depth));
    }
    if want("intensional-model") {
        results.push(intensional_model_case(depth));
    }
    if want("example2-negative") {
        results.push(example2_negative_case(depth));
    }
    if want("example3-arithmetic") {
        results.push(example3_arithmetic_case());
    }
    if want("pair-projections") {
        results.push(pair_projection_case());
    }
    results
}

fn hyper_model_case(depth: usize) -> CaseResult {
    let mut st = SymbolTable::new();
    let m = build_hyper_counterexample(&mut st);
    if !validate_model(&m, &st).is_valid() {
        return case("hyper-model", false, "model fails validation");
    }
    let x = Term::Var(st.intern_var("x"));
    let y = Term::Var(st.intern_var("y"));
    let j = Term::Var(st.intern_var("j"));
    let pq = Formula::and(pred1(&mut st, "P", x.clone()), pred1(&mut st, "Q", y.clone()));
    let qp = Formula::and(pred1(&mut st, "Q", y), pred1(&mut st, "P", x));
    let w = StateId(0);
    let iw = Assignment::interpretation(&m, w);
    let pos = eval(&m, w, &iw, &Formula::just(j, pq), depth);
    if pos != Ok(true) {
        return case("hyper-model", false, "j does not justify the conjunction");
    }
    for k in m.term_table.keys() {
        if eval(&m, w, &iw, &Formula::just(k.clone(), qp.clone()), depth) != Ok(false) {
            return case(
                "hyper-model",
                false,
                "a justification for the swapped conjunction appeared",
            );
        }
    }
    case("hyper-model", true, "hyperintensionality conditions hold")
}

fn intensional_model_case(depth: usize) -> CaseResult {
    let mut st = SymbolTable::new();
    let m = build_intensional_counterexample(&mut st);
    if !validate_model(&m, &st).is_valid() {
        return case("intensional-model", false, "model fails validation");
    }
    let a = st.intern_agent("a");
    let t = Term::Var(st.intern_var("t"));
    let s = Term::Var(st.intern_var("s"));
    let w = StateId(0);
    let iw = Assignment::interpretation(&m, w);
    let checks = [
        (Formula::Eq(t.clone(), s.clone()), true),
        (Formula::know(a, pred1(&mut st, "P", t)), true),
        (Formula::know(a, pred1(&mut st, "P", s)), false),
    ];
    for (f, expected) in checks {
        if eval(&m, w, &iw, &f, depth) != Ok(expected) {
            return case("intensional-model", false, "a truth value came out wrong");
        }
    }
    case("intensional-model", true, "identity intensionality holds")
}

fn example2_negative_case(depth: usize) -> CaseResult {
    let mut st = SymbolTable::new();
    let ex = example2(&mut st);
    let m = example2_model(&mut st);
    if !validate_model(&m, &st).is_valid() {
        return case("example2-negative", false, "model fails validation");
    }
    let w = StateId(0);
    let iw = Assignment::interpretation(&m, w);
    for h in &ex.neg_hyps {
        match eval(&m, w, &iw, h, depth) {
            Ok(true) => {}
            other => {
                return case(
                    "example2-negative",
                    false,
                    format!("hypothesis not verified at w: {other:?}"),
                )
            }
        }
    }
    match consequence(&m, &ex.neg_hyps, &ex.neg_goal, depth) {
        Ok(false) => case("example2-negative", true, "countermodel refutes the sequent"),
        other => case(
            "example2-negative",
            false,
            format!("consequence check returned {other:?}"),
        ),
    }
}

fn example3_arithmetic_case() -> CaseResult {
    let mut st = SymbolTable::new();
    let ex = match example3(&mut st) {
        Ok(ex) => ex,
        Err(e) => return case("example3-arithmetic", false, e.to_string()),
    };
    for link in &ex.chain {
        if !ex.closure.idents.contains(link) {
            return case(
                "example3-arithmetic",
                false,
                "closure misses a chain identity",
            );
        }
    }
    let one = BigRational::new(BigInt::from(1), BigInt::from(1));
    for (l, r) in &ex.closure.idents {
        if l.entries.first().map(|(p, _)| p == &one).unwrap_or(false) && l.entries.len() == 1 {
            for d in [l, r] {
                if d.mass() != one {
                    return case("example3-arithmetic", false, "mass leak in a distribution");
                }
            }
        }
    }
    case("example3-arithmetic", true, "exact chain present")
}

fn pair_projection_case() -> CaseResult {
    let mut st = SymbolTable::new();
    let t = Term::Var(st.intern_var("t"));
    let s = Term::Var(st.intern_var("s"));
    let pair = encode_pair(&t, &s);
    let first = reduces_to(&Term::app(pair.clone(), proj1()), &t, 10);
    let second = reduces_to(&Term::app(pair, proj2()), &s, 10);
    let pass = first == ReduceOutcome::Reduces && second == ReduceOutcome::Reduces;
    case("pair-projections", pass, "footnote pair encoding")
}

/// Quick sanity access to evidence membership for the hyper model, used by
/// unit tests and the CLI.
pub fn hyper_bang_closure_holds(depth: usize) -> bool {
    let mut st = SymbolTable::new();
    let m = build_hyper_counterexample(&mut st);
    let j = Term::Var(st.intern_var("j"));
    let pq = Formula::and(
        pred1(&mut st, "P", Term::Var(st.intern_var("x"))),
        pred1(&mut st, "Q", Term::Var(st.intern_var("y"))),
    );
    let inner = Formula::just(j.clone(), pq);
    e_member(&m, StateId(0), &Term::bang(j), &inner, depth) == Trivalent::True
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_corpus_entry_checks_and_derives() {
        let corpus = build_corpus();
        assert!(corpus.entries.len() >= 14);
        assert!(corpus.fuzz_entries().count() >= 12);
        for entry in &corpus.entries {
            let report = check(&entry.derivation);
            assert!(
                report.is_ok(),
                "{}: {:?}",
                entry.id,
                report.failure.map(|f| f.to_string())
            );
            assert_eq!(
                derives(&entry.hyps, &entry.goal, &entry.derivation),
                Ok(true),
                "{} does not derive its goal",
                entry.id
            );
        }
    }

    #[test]
    fn corpus_includes_bf_and_em() {
        let corpus = build_corpus();
        assert!(corpus.entry("bf").is_some_and(|e| e.fuzz));
        assert!(corpus.entry("em").is_some_and(|e| e.fuzz));
    }

    #[test]
    fn builtin_cases_all_pass() {
        for result in run_cases(None, 6) {
            assert!(result.pass, "{}: {}", result.id, result.detail);
        }
    }

    #[test]
    fn case_filter_selects_one() {
        let results = run_cases(Some("example3"), 6);
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].id, "example3");
    }

    #[test]
    fn embedded_models_stay_valid() {
        let mut st = SymbolTable::new();
        let params = RandomModelParams::default();
        for seed in 0..5 {
            let (m, _) = example2_embedded(&params, seed, &mut st);
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
    }
}
