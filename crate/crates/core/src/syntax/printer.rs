//! Canonical printer for the surface syntax. Printing then parsing yields a
//! syntactically identical tree.

use super::{Formula, SymbolTable, Term, Variable};

/// Render a term. Application is left-associative, lambda bodies extend
/// maximally right, `!` binds the following atom.
pub fn print_term(t: &Term, st: &SymbolTable) -> String {
    let mut out = String::new();
    write_term(t, st, &mut out, false);
    out
}

fn atomic_term(t: &Term) -> bool {
    matches!(t, Term::Var(_) | Term::Bang(_))
}

fn write_term(t: &Term, st: &SymbolTable, out: &mut String, atom_position: bool) {
    match t {
        Term::Var(v) => out.push_str(&st.var_name(*v)),
        Term::Bang(inner) => {
            out.push('!');
            if atomic_term(inner) {
                write_term(inner, st, out, true);
            } else {
                out.push('(');
                write_term(inner, st, out, false);
                out.push(')');
            }
        }
        Term::Lam(x, body) => {
            if atom_position {
                out.push('(');
            }
            out.push('\\');
            out.push_str(&st.var_name(*x));
            out.push_str(". ");
            write_term(body, st, out, false);
            if atom_position {
                out.push(')');
            }
        }
        Term::App(f, a) => {
            if atom_position {
                out.push('(');
            }
            // the function part may itself be an application
            match f.as_ref() {
                Term::App(..) => write_term(f, st, out, false),
                _ => write_term(f, st, out, true),
            }
            out.push(' ');
            write_term(a, st, out, true);
            if atom_position {
                out.push(')');
            }
        }
    }
}

/// Render a formula with the sugar `~A` for `A -> bot` and `exists x. A`
/// for `~forall x. ~A`.
pub fn print_formula(f: &Formula, st: &SymbolTable) -> String {
    let mut out = String::new();
    write_formula(f, st, &mut out, Level::Imp);
    out
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Imp,
    And,
    Unary,
}

fn as_neg(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Imp(a, b) if **b == Formula::Bot => Some(a),
        _ => None,
    }
}

fn as_exists(f: &Formula) -> Option<(Variable, &Formula)> {
    let inner = as_neg(f)?;
    if let Formula::Forall(x, body) = inner {
        let body = as_neg(body)?;
        return Some((*x, body));
    }
    None
}

fn write_formula(f: &Formula, st: &SymbolTable, out: &mut String, level: Level) {
    // sugared forms first: they parse at unary level
    if let Some((x, body)) = as_exists(f) {
        out.push_str("exists ");
        out.push_str(&st.var_name(x));
        out.push_str(". ");
        write_formula(body, st, out, Level::Unary);
        return;
    }
    if let Some(inner) = as_neg(f) {
        out.push('~');
        write_formula(inner, st, out, Level::Unary);
        return;
    }
    match f {
        Formula::Bot => out.push_str("bot"),
        Formula::Eq(l, r) => {
            write_term_arg(l, st, out);
            out.push_str(" = ");
            write_term_arg(r, st, out);
        }
        Formula::Pred(p, args) => {
            out.push_str(st.pred_name(*p));
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(a, st, out, false);
            }
            out.push(')');
        }
        Formula::Imp(a, b) => {
            paren_if(level > Level::Imp, out, |out| {
                write_formula(a, st, out, Level::And);
                out.push_str(" -> ");
                write_formula(b, st, out, Level::Imp);
            });
        }
        Formula::And(a, b) => {
            paren_if(level > Level::And, out, |out| {
                write_formula(a, st, out, Level::And);
                out.push_str(" & ");
                write_formula(b, st, out, Level::Unary);
            });
        }
        Formula::Forall(x, body) => {
            out.push_str("forall ");
            out.push_str(&st.var_name(*x));
            out.push_str(". ");
            write_formula(body, st, out, Level::Unary);
        }
        Formula::K(a, body) => {
            out.push_str("K[");
            out.push_str(&st.agent_name(*a));
            out.push_str("] ");
            write_formula(body, st, out, Level::Unary);
        }
        Formula::Just(j, body) => {
            write_term_arg(j, st, out);
            out.push_str(" : ");
            write_formula(body, st, out, Level::Unary);
        }
        Formula::Trust(a, subject, body) => {
            out.push_str("T[");
            out.push_str(&st.agent_name(*a));
            out.push_str(", ");
            write_term(subject, st, out, false);
            out.push_str("] ");
            write_formula(body, st, out, Level::Unary);
        }
    }
}

// A term in identity or evidence position: parenthesize non-atoms so the
// formula parser can re-read it unambiguously.
fn write_term_arg(t: &Term, st: &SymbolTable, out: &mut String) {
    match t {
        Term::Var(_) | Term::Bang(_) => write_term(t, st, out, false),
        _ => {
            out.push('(');
            write_term(t, st, out, false);
            out.push(')');
        }
    }
}

fn paren_if(cond: bool, out: &mut String, body: impl FnOnce(&mut String)) {
    if cond {
        out.push('(');
        body(out);
        out.push(')');
    } else {
        body(out);
    }
}
