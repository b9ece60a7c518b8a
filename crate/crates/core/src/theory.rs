//! Syntactic theories of computation: one-step reduction facts, their
//! reflexive-transitive closure, program identity, probabilistic program
//! identity with exact rational arithmetic, and the epistemic liftings
//! `K_a Sigma` and `T_a Sigma`.
//!
//! Probabilities are `BigRational`s and every collapse (`p + q`) and
//! expansion (`p * q`) is exact; floating point never appears.

use crate::lambda::{church_numeral, encode_pair, redexes, reducts, step};
use crate::syntax::{
    occurs_in_formula, parse_formula, parse_term, AgentName, Formula, ParseError, SymbolTable,
    Term,
};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use thiserror::Error;

/// A finite, deduplicated set of formulae with a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub label: String,
    pub formulas: BTreeSet<Formula>,
}

impl Theory {
    pub fn new(label: impl Into<String>) -> Theory {
        Theory {
            label: label.into(),
            formulas: BTreeSet::new(),
        }
    }

    pub fn from_formulas(
        label: impl Into<String>,
        formulas: impl IntoIterator<Item = Formula>,
    ) -> Theory {
        Theory {
            label: label.into(),
            formulas: formulas.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.formulas.contains(f)
    }
}

/// Intern the designated one-step reduction predicate.
pub fn step_pred(st: &mut SymbolTable) -> crate::syntax::PredSym {
    st.intern_pred("step", 2).expect("`step` is binary")
}

/// Intern the designated reflexive-transitive reduction predicate.
pub fn star_pred(st: &mut SymbolTable) -> crate::syntax::PredSym {
    st.intern_pred("star", 2).expect("`star` is binary")
}

/// One-step reduction facts `step(u, v)` for every `u` reachable from a
/// seed within `fuel` reductions. The flag is true when unexplored terms
/// with redexes remained at the cutoff.
pub fn sigma_step(
    seeds: &BTreeSet<Term>,
    fuel: usize,
    st: &mut SymbolTable,
) -> (Theory, bool) {
    let step_p = step_pred(st);
    let mut theory = Theory::new("sigma-step");
    let mut seen: HashSet<Term> = seeds.iter().cloned().collect();
    let mut frontier: Vec<Term> = seeds.iter().cloned().collect();
    for _ in 0..=fuel {
        if frontier.is_empty() {
            return (theory, false);
        }
        let mut next = Vec::new();
        for u in &frontier {
            for v in reducts(u) {
                theory
                    .formulas
                    .insert(Formula::Pred(step_p, vec![u.clone(), v.clone()]));
                if seen.insert(v.clone()) {
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    let exhausted = frontier.iter().any(|t| !redexes(t).is_empty());
    (theory, exhausted)
}

fn binary_facts(theory: &Theory, pred: crate::syntax::PredSym) -> Vec<(Term, Term)> {
    theory
        .formulas
        .iter()
        .filter_map(|f| match f {
            Formula::Pred(p, args) if *p == pred && args.len() == 2 => {
                Some((args[0].clone(), args[1].clone()))
            }
            _ => None,
        })
        .collect()
}

/// The reflexive-transitive closure theory `star(t, s)`: reflexive facts
/// for every universe term, the embedded step facts, and transitivity to
/// fixpoint.
pub fn sigma_star(
    step_facts: &Theory,
    universe: &BTreeSet<Term>,
    st: &mut SymbolTable,
) -> Theory {
    let step_p = step_pred(st);
    let star_p = star_pred(st);
    let mut pairs: BTreeSet<(Term, Term)> = BTreeSet::new();
    for t in universe {
        pairs.insert((t.clone(), t.clone()));
    }
    for (u, v) in binary_facts(step_facts, step_p) {
        pairs.insert((u.clone(), u));
        pairs.insert((v.clone(), v.clone()));
        pairs.insert((u, v));
    }
    loop {
        let mut added = Vec::new();
        for (a, b) in &pairs {
            for (c, d) in &pairs {
                if b == c && !pairs.contains(&(a.clone(), d.clone())) {
                    added.push((a.clone(), d.clone()));
                }
            }
        }
        if added.is_empty() {
            break;
        }
        pairs.extend(added);
    }
    Theory::from_formulas(
        "sigma-star",
        pairs
            .into_iter()
            .map(|(a, b)| Formula::Pred(star_p, vec![a, b])),
    )
}

/// Basis relation for program identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqBasis {
    /// Literal definition: mutual one-step reduction.
    OneStep,
    /// Opt-in variant over the reflexive-transitive closure.
    Star,
}

/// Program identity `t = s` for terms that reduce to each other, per the
/// chosen basis. Trivial reflexive identities produced by the `Star` basis
/// are kept only when the two sides differ.
pub fn sigma_lambda_eq(facts: &Theory, basis: EqBasis, st: &mut SymbolTable) -> Theory {
    let pred = match basis {
        EqBasis::OneStep => step_pred(st),
        EqBasis::Star => star_pred(st),
    };
    let pairs: BTreeSet<(Term, Term)> = binary_facts(facts, pred).into_iter().collect();
    let mut out = Theory::new("sigma-lambda-eq");
    for (t, s) in &pairs {
        if t != s && pairs.contains(&(s.clone(), t.clone())) {
            out.formulas.insert(Formula::Eq(t.clone(), s.clone()));
        }
    }
    out
}

/// A probabilistic one-step reduction fact `t |>p t'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbFact {
    pub source: Term,
    pub probability: BigRational,
    pub target: Term,
}

/// An ordered list of `(probability, term)` outcomes with exact mass.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProbDist {
    pub entries: Vec<(BigRational, Term)>,
}

impl ProbDist {
    pub fn new(entries: Vec<(BigRational, Term)>) -> ProbDist {
        ProbDist { entries }
    }

    /// The unit distribution `((1, t))`.
    pub fn unit(t: Term) -> ProbDist {
        ProbDist {
            entries: vec![(BigRational::one(), t)],
        }
    }

    /// Exact total mass.
    pub fn mass(&self) -> BigRational {
        self.entries
            .iter()
            .fold(BigRational::zero(), |acc, (p, _)| acc + p)
    }

    /// Lambda-encoding: a right-nested pair list of `(rational, term)`
    /// pairs, rationals as pairs of Church numerals.
    pub fn encode(&self) -> Term {
        let items: Vec<Term> = self
            .entries
            .iter()
            .map(|(p, t)| encode_pair(&encode_rational(p), t))
            .collect();
        crate::lambda::encode_list(&items)
    }
}

/// Encode a non-negative rational as a pair of Church numerals
/// `(numerator, denominator)` in lowest terms.
pub fn encode_rational(r: &BigRational) -> Term {
    fn to_u64(i: &BigInt) -> u64 {
        u64::try_from(i.clone()).expect("rational component exceeds the encodable range")
    }
    encode_pair(
        &church_numeral(to_u64(r.numer())),
        &church_numeral(to_u64(r.denom())),
    )
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TheoryError {
    #[error("probabilities for `{source}` sum to {mass}, expected 1")]
    MassError { source: String, mass: String },
    #[error("probability {p} for `{source}` lies outside (0, 1]")]
    ProbabilityRange { source: String, p: String },
    #[error("trust subject chooser returned a term that does not occur in the formula")]
    SubjectNotOccurring,
    #[error("no term occurs in the formula, so no trust subject exists")]
    NoSubject,
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("behavior line {line}: {msg}")]
    Behavior { line: usize, msg: String },
}

/// The probabilistic-program-identity closure: the generated identities in
/// emission order (as distributions) together with the lambda-encoded
/// theory.
#[derive(Debug, Clone)]
pub struct ProbClosure {
    pub idents: Vec<(ProbDist, ProbDist)>,
    pub theory: Theory,
}

/// Closure of the behavior facts under the four probabilistic-identity
/// rules, applied at most `max_depth` rounds:
///
/// 1. root translation of every source into its full outcome distribution;
/// 2. in-place expansion of an entry whose term is itself a source;
/// 3. adjacent transposition (lists are read as multisets);
/// 4. collapse of adjacent entries carrying the same term.
pub fn sigma_prob_eq(
    facts: &[ProbFact],
    max_depth: usize,
) -> Result<ProbClosure, TheoryError> {
    let mut by_source: BTreeMap<Term, Vec<(BigRational, Term)>> = BTreeMap::new();
    for f in facts {
        if !f.probability.is_positive() || f.probability > BigRational::one() {
            return Err(TheoryError::ProbabilityRange {
                source: format!("{:?}", f.source),
                p: f.probability.to_string(),
            });
        }
        by_source
            .entry(f.source.clone())
            .or_default()
            .push((f.probability.clone(), f.target.clone()));
    }
    for (source, outs) in &by_source {
        let mass: BigRational = outs
            .iter()
            .fold(BigRational::zero(), |acc, (p, _)| acc + p);
        if !mass.is_one() {
            return Err(TheoryError::MassError {
                source: format!("{source:?}"),
                mass: mass.to_string(),
            });
        }
    }

    let mut idents: Vec<(ProbDist, ProbDist)> = Vec::new();
    let mut seen: HashSet<(ProbDist, ProbDist)> = HashSet::new();
    let mut push = |idents: &mut Vec<(ProbDist, ProbDist)>,
                    seen: &mut HashSet<(ProbDist, ProbDist)>,
                    l: ProbDist,
                    r: ProbDist| {
        if seen.insert((l.clone(), r.clone())) {
            idents.push((l, r));
        }
    };

    // rule 1
    for (source, outs) in &by_source {
        push(
            &mut idents,
            &mut seen,
            ProbDist::unit(source.clone()),
            ProbDist::new(outs.clone()),
        );
    }

    for _ in 0..max_depth {
        let mut fresh: Vec<(ProbDist, ProbDist)> = Vec::new();
        for (_, rhs) in &idents {
            // rule 2: expand an entry whose term is a source
            for (i, (p, t)) in rhs.entries.iter().enumerate() {
                if let Some(outs) = by_source.get(t) {
                    let mut entries = rhs.entries[..i].to_vec();
                    for (q, s) in outs {
                        entries.push((p * q, s.clone()));
                    }
                    entries.extend_from_slice(&rhs.entries[i + 1..]);
                    fresh.push((rhs.clone(), ProbDist::new(entries)));
                }
            }
            // rule 3: adjacent transposition
            for i in 0..rhs.entries.len().saturating_sub(1) {
                let mut entries = rhs.entries.clone();
                entries.swap(i, i + 1);
                fresh.push((rhs.clone(), ProbDist::new(entries)));
            }
            // rule 4: collapse adjacent duplicates
            for i in 0..rhs.entries.len().saturating_sub(1) {
                if rhs.entries[i].1 == rhs.entries[i + 1].1 {
                    let mut entries = rhs.entries[..i].to_vec();
                    entries.push((
                        &rhs.entries[i].0 + &rhs.entries[i + 1].0,
                        rhs.entries[i].1.clone(),
                    ));
                    entries.extend_from_slice(&rhs.entries[i + 2..]);
                    fresh.push((rhs.clone(), ProbDist::new(entries)));
                }
            }
        }
        let before = idents.len();
        for (l, r) in fresh {
            push(&mut idents, &mut seen, l, r);
        }
        if idents.len() == before {
            break;
        }
    }

    let theory = Theory::from_formulas(
        "sigma-prob-eq",
        idents
            .iter()
            .map(|(l, r)| Formula::Eq(l.encode(), r.encode())),
    );
    Ok(ProbClosure { idents, theory })
}

/// Prefix every formula of the theory with `K[a]`.
pub fn lift_k(theory: &Theory, a: AgentName) -> Theory {
    Theory::from_formulas(
        format!("K[{}]({})", a.0, theory.label),
        theory
            .formulas
            .iter()
            .map(|f| Formula::know(a, f.clone())),
    )
}

/// The default trust-subject chooser: the leftmost term occurrence.
pub fn leftmost_term(f: &Formula) -> Option<Term> {
    match f {
        Formula::Bot => None,
        Formula::Eq(l, _) => Some(l.clone()),
        Formula::Pred(_, args) => args.first().cloned(),
        Formula::Imp(a, b) | Formula::And(a, b) => leftmost_term(a).or_else(|| leftmost_term(b)),
        Formula::Forall(_, body)
        | Formula::K(_, body)
        | Formula::Just(_, body)
        | Formula::Trust(_, _, body) => leftmost_term(body),
    }
}

/// Prefix every formula with `T[a, t]` where `t` is chosen per formula;
/// the chosen subject must occur in the formula.
pub fn lift_t(
    theory: &Theory,
    a: AgentName,
    chooser: impl Fn(&Formula) -> Option<Term>,
) -> Result<Theory, TheoryError> {
    let mut out = Theory::new(format!("T[{}]({})", a.0, theory.label));
    for f in &theory.formulas {
        let subject = chooser(f).ok_or(TheoryError::NoSubject)?;
        if !occurs_in_formula(&subject, f) {
            return Err(TheoryError::SubjectNotOccurring);
        }
        out.formulas.insert(Formula::trust(a, subject, f.clone()));
    }
    Ok(out)
}

/// Parse a probabilistic behavior file: lines `t |>n/d u`, `;;` comments.
pub fn parse_behavior(text: &str, st: &mut SymbolTable) -> Result<Vec<ProbFact>, TheoryError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find(";;") {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| TheoryError::Behavior {
            line: i + 1,
            msg: msg.to_string(),
        };
        let (lhs, rest) = line.split_once("|>").ok_or_else(|| err("missing `|>`"))?;
        let rest = rest.trim_start();
        let split = rest
            .find(|c: char| c.is_ascii_whitespace())
            .ok_or_else(|| err("missing target term after the probability"))?;
        let (prob_text, target_text) = rest.split_at(split);
        let probability = parse_rational(prob_text.trim())
            .ok_or_else(|| err("probability must be a rational literal n/d"))?;
        let source = parse_term(lhs.trim(), st)?;
        let target = parse_term(target_text.trim(), st)?;
        out.push(ProbFact {
            source,
            probability,
            target,
        });
    }
    Ok(out)
}

/// Parse a rational literal `n` or `n/d`.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let n: BigInt = n.trim().parse().ok()?;
    let d: BigInt = d.trim().parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

/// Render a theory in the theory file format: one formula per line.
pub fn write_theory(theory: &Theory, st: &SymbolTable) -> String {
    let mut out = format!(";; {}\n", theory.label);
    for f in &theory.formulas {
        out.push_str(&crate::syntax::print_formula(f, st));
        out.push('\n');
    }
    out
}

/// Parse a theory file: one formula per line, `;;` comments.
pub fn parse_theory(
    text: &str,
    label: impl Into<String>,
    st: &mut SymbolTable,
) -> Result<Theory, ParseError> {
    let mut theory = Theory::new(label);
    for raw in text.lines() {
        let line = match raw.find(";;") {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        theory.formulas.insert(parse_formula(line, st)?);
    }
    Ok(theory)
}

/// Parse a seeds file: one term per line, `;;` comments.
pub fn parse_seeds(text: &str, st: &mut SymbolTable) -> Result<BTreeSet<Term>, ParseError> {
    let mut out = BTreeSet::new();
    for raw in text.lines() {
        let line = match raw.find(";;") {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        out.insert(parse_term(line, st)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::rational::Ratio;

    fn rat(n: i64, d: i64) -> BigRational {
        Ratio::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn sigma_step_emits_single_contraction() {
        let mut st = SymbolTable::new();
        let t = parse_term(r"(\x. x) y", &mut st).unwrap();
        let y = parse_term("y", &mut st).unwrap();
        let (theory, exhausted) = sigma_step(&BTreeSet::from([t.clone()]), 1, &mut st);
        assert!(!exhausted);
        let step_p = step_pred(&mut st);
        assert_eq!(
            theory.formulas,
            BTreeSet::from([Formula::Pred(step_p, vec![t, y])])
        );
    }

    #[test]
    fn sigma_step_covers_the_pair_projection_chain() {
        let mut st = SymbolTable::new();
        let seed = parse_term(r"(\x. \y. \z. z x y) t s", &mut st).unwrap();
        let (theory, exhausted) = sigma_step(&BTreeSet::from([seed.clone()]), 4, &mut st);
        assert!(!exhausted);
        let step_p = step_pred(&mut st);
        let mid = parse_term(r"(\y. \z. z t y) s", &mut st).unwrap();
        let end = parse_term(r"\z. z t s", &mut st).unwrap();
        assert!(theory.contains(&Formula::Pred(step_p, vec![seed, mid.clone()])));
        assert!(theory.contains(&Formula::Pred(step_p, vec![mid, end])));
    }

    #[test]
    fn sigma_step_of_normal_form_is_empty() {
        let mut st = SymbolTable::new();
        let y = parse_term("y", &mut st).unwrap();
        let (theory, exhausted) = sigma_step(&BTreeSet::from([y]), 10, &mut st);
        assert!(theory.is_empty());
        assert!(!exhausted);
    }

    #[test]
    fn sigma_star_reflexive_embed_transitive() {
        let mut st = SymbolTable::new();
        let (a, b, c) = (Term::var(0), Term::var(1), Term::var(2));
        let step_p = step_pred(&mut st);
        let star_p = star_pred(&mut st);
        // empty facts, universe {t}: only star(t, t)
        let out = sigma_star(&Theory::new("s"), &BTreeSet::from([a.clone()]), &mut st);
        assert_eq!(
            out.formulas,
            BTreeSet::from([Formula::Pred(star_p, vec![a.clone(), a.clone()])])
        );
        // step(a,b), step(b,c) closes to star(a,c)
        let steps = Theory::from_formulas(
            "s",
            [
                Formula::Pred(step_p, vec![a.clone(), b.clone()]),
                Formula::Pred(step_p, vec![b.clone(), c.clone()]),
            ],
        );
        let out = sigma_star(&steps, &BTreeSet::new(), &mut st);
        assert!(out.contains(&Formula::Pred(star_p, vec![a.clone(), c.clone()])));
        // idempotent: re-closing the star facts changes nothing
        let again = sigma_star(&steps, &BTreeSet::new(), &mut st);
        assert_eq!(out, again);
    }

    #[test]
    fn lambda_eq_requires_mutual_steps() {
        let mut st = SymbolTable::new();
        let (a, b) = (Term::var(0), Term::var(1));
        let step_p = step_pred(&mut st);
        let one = Theory::from_formulas("s", [Formula::Pred(step_p, vec![a.clone(), b.clone()])]);
        assert!(sigma_lambda_eq(&one, EqBasis::OneStep, &mut st).is_empty());
        let both = Theory::from_formulas(
            "s",
            [
                Formula::Pred(step_p, vec![a.clone(), b.clone()]),
                Formula::Pred(step_p, vec![b.clone(), a.clone()]),
            ],
        );
        let out = sigma_lambda_eq(&both, EqBasis::OneStep, &mut st);
        assert_eq!(out.formulas, BTreeSet::from([Formula::Eq(a, b)]));
        assert!(sigma_lambda_eq(&Theory::new("s"), EqBasis::OneStep, &mut st).is_empty());
    }

    #[test]
    fn prob_closure_translates_roots() {
        let mut st = SymbolTable::new();
        let x = parse_term("x", &mut st).unwrap();
        let t = parse_term("t", &mut st).unwrap();
        let s = parse_term("s", &mut st).unwrap();
        let facts = vec![
            ProbFact {
                source: x.clone(),
                probability: rat(1, 3),
                target: t.clone(),
            },
            ProbFact {
                source: x.clone(),
                probability: rat(2, 3),
                target: s.clone(),
            },
        ];
        let closure = sigma_prob_eq(&facts, 1).unwrap();
        let lhs = ProbDist::unit(x);
        let rhs = ProbDist::new(vec![(rat(1, 3), t), (rat(2, 3), s)]);
        assert!(closure.idents.contains(&(lhs.clone(), rhs.clone())));
        assert!(closure.theory.contains(&Formula::Eq(lhs.encode(), rhs.encode())));
    }

    #[test]
    fn prob_closure_rejects_bad_mass() {
        let mut st = SymbolTable::new();
        let x = parse_term("x", &mut st).unwrap();
        let t = parse_term("t", &mut st).unwrap();
        let facts = vec![ProbFact {
            source: x,
            probability: rat(1, 3),
            target: t,
        }];
        assert!(matches!(
            sigma_prob_eq(&facts, 1),
            Err(TheoryError::MassError { .. })
        ));
    }

    #[test]
    fn lift_k_and_t() {
        let mut st = SymbolTable::new();
        let f = parse_formula("P(t)", &mut st).unwrap();
        let a = st.intern_agent("a");
        let theory = Theory::from_formulas("th", [f.clone()]);
        let lifted = lift_k(&theory, a);
        assert_eq!(
            lifted.formulas,
            BTreeSet::from([Formula::know(a, f.clone())])
        );
        assert!(lift_k(&Theory::new("e"), a).is_empty());

        let t = parse_term("t", &mut st).unwrap();
        let trusted = lift_t(&theory, a, leftmost_term).unwrap();
        assert_eq!(
            trusted.formulas,
            BTreeSet::from([Formula::trust(a, t, f.clone())])
        );
        // a chooser returning a non-occurring subject is rejected
        let bad = lift_t(&theory, a, |_| Some(Term::var(99)));
        assert!(matches!(bad, Err(TheoryError::SubjectNotOccurring)));
    }

    #[test]
    fn behavior_file_round_trip() {
        let mut st = SymbolTable::new();
        let text = ";; behavior of s\ns |> 1/4 o1\ns |> 3/4 o2\n";
        let facts = parse_behavior(text, &mut st).unwrap();
        assert_eq!(facts.len(), 2);
        assert_eq!(facts[0].probability, rat(1, 4));
        assert_eq!(facts[1].probability, rat(3, 4));
        assert!(parse_behavior("s 1/4 o1", &mut st).is_err());
    }

    #[test]
    fn rationals_stay_reduced() {
        assert_eq!(parse_rational("2/4").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("1").unwrap(), rat(1, 1));
        assert!(parse_rational("1/0").is_none());
    }
}
