use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::cnf::{to_cnf, Encoder};
use super::nnf::{is_tautology, GuardedAtom, Nnf};
use super::{Atom, Formula, Term, Var};
use crate::sat::Solver;

/// Distribution beyond this many clauses skips prime implicates.
const CLAUSE_CAP: u64 = 512;
/// Resolution closure is abandoned past this many clauses.
const CLOSURE_CAP: usize = 4096;

type Clause = BTreeSet<(Atom, bool)>;

/// Renaming-invariant key; isomorphic formulas always share it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(String);

impl Fingerprint {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// True iff `f1 <-> f2` is valid. Variables are read as fresh constants,
/// one per name, shared between both sides.
pub fn equivalent(f1: &Formula, f2: &Formula) -> bool {
    let (g1, g2) = (skolemize(f1), skolemize(f2));
    let mut enc = Encoder::new();
    let neg = Formula::not(Formula::iff(g1, g2));
    let clauses = to_cnf(&neg, &mut enc).expect("skolemized formulas are ground");
    let mut s = Solver::new();
    s.ensure_vars(enc.num_vars());
    for c in &clauses {
        s.add_clause(c);
    }
    !s.solve().is_sat()
}

fn skolemize(f: &Formula) -> Formula {
    f.map_terms(&mut |t| match t {
        Term::Var(v) => Term::Const(format!("'{}", v.name)),
        c => c.clone(),
    })
}

pub fn fingerprint(f: &Formula) -> Fingerprint {
    CanonicalForm::new(f).fingerprint
}

/// True iff some type-respecting bijection between the variables maps `f1`
/// onto a formula equivalent to `f2`, with disequality guards mapped onto
/// guards.
pub fn isomorphic(f1: &Formula, f2: &Formula) -> bool {
    CanonicalForm::new(f1).isomorphic(&CanonicalForm::new(f2))
}

/// Precomputed data for repeated isomorphism tests against one formula.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    formula: Formula,
    /// Prime implicates of the guard-stripped formula, when small enough.
    implicates: Option<BTreeSet<Clause>>,
    guards: BTreeSet<(Var, Var)>,
    vars: Vec<Var>,
    var_sig: BTreeMap<Var, String>,
    fingerprint: Fingerprint,
}

fn arg_pattern(t: &Term) -> String {
    match t {
        Term::Const(c) => c.clone(),
        Term::Var(v) => format!("?{}", v.ty),
    }
}

fn literal_sig(a: &Atom, sign: bool) -> String {
    let args: Vec<String> = a.args.iter().map(arg_pattern).collect();
    format!(
        "{}{}({})",
        if sign { "" } else { "!" },
        a.predicate,
        args.join(",")
    )
}

fn guard_pairs(f: &Formula) -> BTreeSet<(Var, Var)> {
    fn walk(f: &Formula, out: &mut BTreeSet<(Var, Var)>) {
        match f {
            Formula::Distinct(ts) => {
                let vs: Vec<&Var> = ts
                    .iter()
                    .filter_map(|t| match t {
                        Term::Var(v) => Some(v),
                        Term::Const(_) => None,
                    })
                    .collect();
                for i in 0..vs.len() {
                    for j in i + 1..vs.len() {
                        let (a, b) = (vs[i].clone(), vs[j].clone());
                        out.insert(if a <= b { (a, b) } else { (b, a) });
                    }
                }
            }
            Formula::Not(a) => walk(a, out),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|c| walk(c, out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            _ => {}
        }
    }
    let mut out = BTreeSet::new();
    walk(f, &mut out);
    out
}

fn strip_guards(n: &Nnf<GuardedAtom>) -> Nnf<Atom> {
    match n {
        Nnf::True => Nnf::True,
        Nnf::False => Nnf::False,
        Nnf::Lit(GuardedAtom::Atom(a), s) => Nnf::Lit(a.clone(), *s),
        Nnf::Lit(GuardedAtom::Distinct(_), _) => Nnf::False,
        Nnf::And(v) => Nnf::and(v.iter().map(strip_guards).collect()),
        Nnf::Or(v) => Nnf::or(v.iter().map(strip_guards).collect()),
    }
}

fn clause_count(n: &Nnf<Atom>) -> u64 {
    match n {
        Nnf::True => 0,
        Nnf::False | Nnf::Lit(..) => 1,
        Nnf::And(v) => v.iter().map(clause_count).fold(0, u64::saturating_add),
        Nnf::Or(v) => v.iter().map(clause_count).fold(1, u64::saturating_mul),
    }
}

fn subsumes(a: &Clause, b: &Clause) -> bool {
    a.len() <= b.len() && a.is_subset(b)
}

fn insert_reduced(set: &mut Vec<Clause>, c: Clause) -> bool {
    if set.iter().any(|d| subsumes(d, &c)) {
        return false;
    }
    set.retain(|d| !subsumes(&c, d));
    set.push(c);
    true
}

/// Prime implicates by resolution closure with subsumption.
fn prime_implicates(clauses: Vec<Clause>) -> Option<BTreeSet<Clause>> {
    let mut set: Vec<Clause> = Vec::new();
    for c in clauses {
        insert_reduced(&mut set, c);
    }
    loop {
        let mut added = false;
        let snapshot = set.clone();
        'pairs: for i in 0..snapshot.len() {
            for j in i + 1..snapshot.len() {
                for (a, s) in &snapshot[i] {
                    if snapshot[j].contains(&(a.clone(), !s)) {
                        let mut r: Clause = snapshot[i].clone();
                        r.remove(&(a.clone(), *s));
                        r.extend(snapshot[j].iter().filter(|l| l.0 != *a).cloned());
                        if !is_tautology(&r) && insert_reduced(&mut set, r) {
                            added = true;
                            if set.len() > CLOSURE_CAP {
                                return None;
                            }
                        }
                        if !set.contains(&snapshot[i]) {
                            continue 'pairs;
                        }
                    }
                }
            }
        }
        if !added {
            return Some(set.into_iter().collect());
        }
    }
}

impl CanonicalForm {
    pub fn new(f: &Formula) -> Self {
        let vars = f.vars();
        let guards = guard_pairs(f);
        let stripped = f.to_nnf().map(|n| strip_guards(&n)).unwrap_or(Nnf::False);
        let implicates = if clause_count(&stripped) <= CLAUSE_CAP {
            prime_implicates(stripped.distribute())
        } else {
            None
        };
        let mut var_occ: BTreeMap<Var, Vec<String>> = vars.iter().map(|v| (v.clone(), Vec::new())).collect();
        let mut lits = Vec::new();
        let note = |a: &Atom, s: bool, ctx: &str, var_occ: &mut BTreeMap<Var, Vec<String>>| {
            let sig = literal_sig(a, s);
            for (i, t) in a.args.iter().enumerate() {
                if let Term::Var(v) = t {
                    var_occ
                        .entry(v.clone())
                        .or_default()
                        .push(format!("{sig}@{i}{ctx}"));
                }
            }
            sig
        };
        let body = match &implicates {
            Some(pis) => {
                let mut clause_sigs: Vec<String> = pis
                    .iter()
                    .map(|c| {
                        let mut ls: Vec<String> = c.iter().map(|(a, s)| literal_sig(a, *s)).collect();
                        ls.sort();
                        let ctx = format!("[{}]", ls.join("|"));
                        for (a, s) in c {
                            lits.push(note(a, *s, &ctx, &mut var_occ));
                        }
                        ctx
                    })
                    .collect();
                clause_sigs.sort();
                format!("pi{}", clause_sigs.join(""))
            }
            None => {
                stripped.visit_lits(&mut |a, s| lits.push(note(a, s, "", &mut var_occ)));
                lits.sort();
                format!("raw[{}]", lits.join("|"))
            }
        };
        for (a, b) in &guards {
            var_occ.entry(a.clone()).or_default().push("#".into());
            var_occ.entry(b.clone()).or_default().push("#".into());
        }
        let var_sig: BTreeMap<Var, String> = var_occ
            .into_iter()
            .map(|(v, mut occ)| {
                occ.sort();
                (v.clone(), format!("{}:{}{{{}}}", v.ty, occ.len(), occ.join(",")))
            })
            .collect();
        let mut types: Vec<&str> = vars.iter().map(|v| v.ty.as_str()).collect();
        types.sort();
        let mut sigs: Vec<&String> = var_sig.values().collect();
        sigs.sort();
        let fingerprint = Fingerprint(format!(
            "{body};vars[{}];deg[{}];g{}",
            types.join(","),
            sigs.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(";"),
            guards.len()
        ));
        CanonicalForm {
            formula: f.clone(),
            implicates,
            guards,
            vars,
            var_sig,
            fingerprint,
        }
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn isomorphic(&self, other: &CanonicalForm) -> bool {
        if self.fingerprint != other.fingerprint || self.vars.len() != other.vars.len() {
            return false;
        }
        let mut theta: BTreeMap<Var, Var> = BTreeMap::new();
        let mut used = vec![false; other.vars.len()];
        self.search(other, 0, &mut theta, &mut used)
    }

    fn search(
        &self,
        other: &CanonicalForm,
        i: usize,
        theta: &mut BTreeMap<Var, Var>,
        used: &mut [bool],
    ) -> bool {
        if i == self.vars.len() {
            return self.check(other, theta);
        }
        let v = &self.vars[i];
        for (j, w) in other.vars.iter().enumerate() {
            if used[j] || w.ty != v.ty || self.var_sig[v] != other.var_sig[w] {
                continue;
            }
            used[j] = true;
            theta.insert(v.clone(), w.clone());
            if self.search(other, i + 1, theta, used) {
                return true;
            }
            theta.remove(v);
            used[j] = false;
        }
        false
    }

    fn check(&self, other: &CanonicalForm, theta: &BTreeMap<Var, Var>) -> bool {
        let rename = |t: &Term| match t {
            Term::Var(v) => Term::Var(theta[v].clone()),
            c => c.clone(),
        };
        let mapped_guards: BTreeSet<(Var, Var)> = self
            .guards
            .iter()
            .map(|(a, b)| {
                let (x, y) = (theta[a].clone(), theta[b].clone());
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        if mapped_guards != other.guards {
            return false;
        }
        match (&self.implicates, &other.implicates) {
            (Some(a), Some(b)) => {
                let mapped: BTreeSet<Clause> = a
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|(at, s)| {
                                (
                                    Atom::new(at.predicate.clone(), at.args.iter().map(rename).collect()),
                                    *s,
                                )
                            })
                            .collect()
                    })
                    .collect();
                mapped == *b
            }
            _ => {
                let mut r = rename;
                equivalent(&self.formula.map_terms(&mut r), &other.formula)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: &str) -> Formula {
        Formula::prop(n)
    }

    fn at(pred: &str, vars: &[&str]) -> Formula {
        Formula::Atom(Atom::new(pred, vars.iter().map(|v| Term::var(*v, "t")).collect()))
    }

    fn smokes_rule(x: &str, y: &str) -> Formula {
        Formula::implies(Formula::and(vec![at("s", &[x]), at("f", &[x, y])]), at("s", &[y]))
    }

    #[test]
    fn equivalence_basics() {
        assert!(equivalent(
            &Formula::implies(p("a"), p("b")),
            &Formula::or(vec![Formula::not(p("a")), p("b")])
        ));
        assert!(!equivalent(&p("a"), &p("b")));
        assert!(equivalent(
            &Formula::not(Formula::and(vec![p("a"), p("x")])),
            &Formula::or(vec![Formula::not(p("a")), Formula::not(p("x"))])
        ));
    }

    #[test]
    fn renaming() {
        let f = Formula::implies(at("p", &["X"]), at("q", &["X"]));
        let g = Formula::implies(at("p", &["Y"]), at("q", &["Y"]));
        assert!(isomorphic(&f, &g));
        assert_eq!(fingerprint(&f), fingerprint(&g));
    }

    #[test]
    fn swapped_smokers_rule() {
        assert!(isomorphic(&smokes_rule("A", "B"), &smokes_rule("B", "A")));
        assert_eq!(
            fingerprint(&smokes_rule("A", "B")),
            fingerprint(&smokes_rule("B", "A"))
        );
    }

    #[test]
    fn converse_is_not_isomorphic() {
        let f = Formula::implies(at("p", &["X"]), at("q", &["X"]));
        let g = Formula::implies(at("q", &["X"]), at("p", &["X"]));
        assert!(!isomorphic(&f, &g));
    }

    #[test]
    fn sign_changes_fingerprint() {
        assert_ne!(
            fingerprint(&at("p", &["X"])),
            fingerprint(&Formula::not(at("p", &["X"])))
        );
    }

    #[test]
    fn guards_must_correspond() {
        let body = Formula::or(vec![Formula::not(at("f", &["A", "B"])), at("f", &["B", "A"])]);
        let guarded = Formula::implies(
            Formula::Distinct(vec![Term::var("A", "t"), Term::var("B", "t")]),
            body.clone(),
        );
        assert!(!isomorphic(&guarded, &body));
        assert!(isomorphic(&guarded, &guarded));
    }

    #[test]
    fn equivalent_non_clausal_forms() {
        let f = Formula::implies(
            at("p", &["X"]),
            Formula::and(vec![at("q", &["X"]), at("r", &["X"])]),
        );
        let g = Formula::and(vec![
            Formula::or(vec![Formula::not(at("p", &["Y"])), at("r", &["Y"])]),
            Formula::or(vec![Formula::not(at("p", &["Y"])), at("q", &["Y"])]),
        ]);
        assert!(isomorphic(&f, &g));
    }

    #[test]
    fn prime_implicates_add_resolvents() {
        let f = Formula::and(vec![
            Formula::implies(p("a"), p("b")),
            Formula::implies(p("b"), p("c")),
        ]);
        let g = Formula::and(vec![
            Formula::implies(p("a"), p("b")),
            Formula::implies(p("b"), p("c")),
            Formula::implies(p("a"), p("c")),
        ]);
        assert!(isomorphic(&f, &g));
    }
}
