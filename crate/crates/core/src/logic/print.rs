use super::nnf::GuardedAtom;
use super::{Atom, Formula, Term};

/// Renders formulas in the concrete input grammar.
///
/// With `show_types`, variables print as `type:Name` so a theory with several
/// types reparses unambiguously.
#[derive(Clone, Copy, Debug, Default)]
pub struct FormulaPrinter {
    pub show_types: bool,
}

const IFF: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const NOT: u8 = 5;
const ATOM: u8 = 6;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => IFF,
        Formula::Implies(..) => IMPLIES,
        Formula::Or(v) if v.len() > 1 => OR,
        Formula::And(v) if v.len() > 1 => AND,
        Formula::Or(v) | Formula::And(v) if v.len() == 1 => precedence(&v[0]),
        Formula::Not(_) => NOT,
        _ => ATOM,
    }
}

impl FormulaPrinter {
    pub fn typed() -> Self {
        FormulaPrinter { show_types: true }
    }

    pub fn term(&self, t: &Term) -> String {
        match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) if self.show_types => format!("{}:{}", v.ty, v.name),
            Term::Var(v) => v.name.clone(),
        }
    }

    pub fn atom(&self, a: &Atom) -> String {
        if a.args.is_empty() {
            return a.predicate.clone();
        }
        let args: Vec<String> = a.args.iter().map(|t| self.term(t)).collect();
        format!("{}({})", a.predicate, args.join(","))
    }

    fn guard(&self, ts: &[Term]) -> String {
        let args: Vec<String> = ts.iter().map(|t| self.term(t)).collect();
        format!("alldiff({})", args.join(","))
    }

    pub fn formula(&self, f: &Formula) -> String {
        let mut out = String::new();
        self.write(f, &mut out);
        out
    }

    fn wrapped(&self, f: &Formula, paren: bool, out: &mut String) {
        if paren {
            out.push('(');
            self.write(f, out);
            out.push(')');
        } else {
            self.write(f, out);
        }
    }

    fn write(&self, f: &Formula, out: &mut String) {
        match f {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Atom(a) => out.push_str(&self.atom(a)),
            Formula::Distinct(ts) => out.push_str(&self.guard(ts)),
            Formula::Not(a) => {
                out.push('!');
                self.wrapped(a, precedence(a) < NOT, out);
            }
            Formula::And(v) | Formula::Or(v) if v.is_empty() => {
                out.push_str(if matches!(f, Formula::And(_)) {
                    "true"
                } else {
                    "false"
                })
            }
            Formula::And(v) | Formula::Or(v) => {
                let (own, sep) = if matches!(f, Formula::And(_)) {
                    (AND, " & ")
                } else {
                    (OR, " | ")
                };
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        out.push_str(sep);
                    }
                    self.wrapped(c, precedence(c) <= own && v.len() > 1, out);
                }
            }
            Formula::Implies(a, b) => {
                self.wrapped(a, precedence(a) <= IMPLIES, out);
                out.push_str(" -> ");
                self.wrapped(b, precedence(b) < IMPLIES, out);
            }
            Formula::Iff(a, b) => {
                self.wrapped(a, precedence(a) <= IFF, out);
                out.push_str(" <-> ");
                self.wrapped(b, precedence(b) <= IFF, out);
            }
        }
    }

    /// Render a clause: ordinary literals sorted by text, guards last,
    /// joined by ` | `. The empty clause is `false`.
    pub fn clause(&self, lits: &[(GuardedAtom, bool)]) -> String {
        let mut plain = Vec::new();
        let mut guards = Vec::new();
        for (a, sign) in lits {
            let body = match a {
                GuardedAtom::Atom(a) => self.atom(a),
                GuardedAtom::Distinct(ts) => self.guard(ts),
            };
            let text = if *sign { body } else { format!("!{body}") };
            match a {
                GuardedAtom::Atom(_) => plain.push(text),
                GuardedAtom::Distinct(_) => guards.push(text),
            }
        }
        if plain.is_empty() && guards.is_empty() {
            return "false".into();
        }
        plain.sort_by(|x, y| {
            x.trim_start_matches('!')
                .cmp(y.trim_start_matches('!'))
                .then(x.cmp(y))
        });
        guards.sort();
        plain.extend(guards);
        plain.join(" | ")
    }
}
