//! A verification toolkit for a quantified epistemic + justification logic
//! with a hyperintensional trust operator over lambda-calculus terms.
//!
//! The crate is organised around five subsystems:
//!
//! * [`syntax`] — abstract syntax, surface parser and printer, free-variable
//!   computation, and the two substitution operators (quantifier
//!   instantiation `[u/v]` and substitution of identicals `(u/v)`).
//! * [`lambda`] — pure lambda-calculus evaluation: capture-avoiding term
//!   substitution, redex enumeration, bounded multi-step reduction, and the
//!   pair/list encodings used by the computational-trust theories.
//! * [`theory`] — generators for the syntactic theories of computation:
//!   one-step reduction facts, their reflexive-transitive closure, program
//!   identity, probabilistic program identity (exact rationals), and the
//!   epistemic liftings `K_a Sigma` / `T_a Sigma`.
//! * [`proof`] — natural-deduction derivations over multiset sequents and
//!   the rule-by-rule checker, plus trust desugaring.
//! * [`semantics`] — finite Kripke models, model validation, truth
//!   evaluation, consequence checking, the hyperintensionality and
//!   intensionality counterexample models, and a seeded random model
//!   generator for soundness fuzzing.
//!
//! [`corpus`] bundles the built-in derivations and models exercised by the
//! acceptance suite and the `trustlogic corpus` command.

pub mod corpus;
pub mod lambda;
pub mod proof;
pub mod semantics;
pub mod sexpr;
pub mod syntax;
pub mod theory;

pub use syntax::{AgentName, Formula, PredSym, SymbolTable, Term, Variable};
