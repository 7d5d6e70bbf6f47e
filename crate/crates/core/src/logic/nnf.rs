use std::collections::BTreeSet;

use super::eval::distinct_constants;
use super::{Atom, Formula, Term};
use crate::error::Result;

/// Negation normal form over an arbitrary atom type, with constants folded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nnf<A> {
    True,
    False,
    Lit(A, bool),
    And(Vec<Nnf<A>>),
    Or(Vec<Nnf<A>>),
}

/// Atom of a formula in NNF: either an ordinary atom or a disequality guard
/// that could not be decided (non-ground).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GuardedAtom {
    Atom(Atom),
    Distinct(Vec<Term>),
}

impl<A: Clone> Nnf<A> {
    pub fn and(parts: Vec<Nnf<A>>) -> Nnf<A> {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Nnf::True => {}
                Nnf::False => return Nnf::False,
                Nnf::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Nnf::True,
            1 => out.pop().unwrap(),
            _ => Nnf::And(out),
        }
    }

    pub fn or(parts: Vec<Nnf<A>>) -> Nnf<A> {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Nnf::False => {}
                Nnf::True => return Nnf::True,
                Nnf::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Nnf::False,
            1 => out.pop().unwrap(),
            _ => Nnf::Or(out),
        }
    }

    pub fn negate(&self) -> Nnf<A> {
        match self {
            Nnf::True => Nnf::False,
            Nnf::False => Nnf::True,
            Nnf::Lit(a, s) => Nnf::Lit(a.clone(), !s),
            Nnf::And(v) => Nnf::or(v.iter().map(Nnf::negate).collect()),
            Nnf::Or(v) => Nnf::and(v.iter().map(Nnf::negate).collect()),
        }
    }

    pub fn map_atoms<B: Clone>(&self, f: &mut impl FnMut(&A) -> B) -> Nnf<B> {
        match self {
            Nnf::True => Nnf::True,
            Nnf::False => Nnf::False,
            Nnf::Lit(a, s) => Nnf::Lit(f(a), *s),
            Nnf::And(v) => Nnf::And(v.iter().map(|c| c.map_atoms(f)).collect()),
            Nnf::Or(v) => Nnf::Or(v.iter().map(|c| c.map_atoms(f)).collect()),
        }
    }

    pub fn visit_lits(&self, f: &mut impl FnMut(&A, bool)) {
        match self {
            Nnf::True | Nnf::False => {}
            Nnf::Lit(a, s) => f(a, *s),
            Nnf::And(v) | Nnf::Or(v) => v.iter().for_each(|c| c.visit_lits(f)),
        }
    }

    /// Three-valued evaluation under a partial assignment.
    pub fn eval3(&self, value: &impl Fn(&A) -> Option<bool>) -> Option<bool> {
        match self {
            Nnf::True => Some(true),
            Nnf::False => Some(false),
            Nnf::Lit(a, s) => value(a).map(|v| v == *s),
            Nnf::And(v) => {
                let mut all = true;
                for c in v {
                    match c.eval3(value) {
                        Some(false) => return Some(false),
                        None => all = false,
                        Some(true) => {}
                    }
                }
                all.then_some(true)
            }
            Nnf::Or(v) => {
                let mut none = true;
                for c in v {
                    match c.eval3(value) {
                        Some(true) => return Some(true),
                        None => none = false,
                        Some(false) => {}
                    }
                }
                none.then_some(false)
            }
        }
    }

    /// If the formula is a single clause (a literal or a disjunction of
    /// literals), return its literals.
    pub fn as_clause(&self) -> Option<Vec<(A, bool)>> {
        match self {
            Nnf::False => Some(vec![]),
            Nnf::Lit(a, s) => Some(vec![(a.clone(), *s)]),
            Nnf::Or(v) => v
                .iter()
                .map(|c| match c {
                    Nnf::Lit(a, s) => Some((a.clone(), *s)),
                    _ => None,
                })
                .collect(),
            _ => None,
        }
    }
}

impl<A: Clone + Ord> Nnf<A> {
    /// Clause set obtained by plain distribution, without auxiliary atoms.
    /// Tautological clauses are dropped and literals deduplicated.
    pub fn distribute(&self) -> Vec<BTreeSet<(A, bool)>> {
        match self {
            Nnf::True => vec![],
            Nnf::False => vec![BTreeSet::new()],
            Nnf::Lit(a, s) => vec![BTreeSet::from([(a.clone(), *s)])],
            Nnf::And(v) => v.iter().flat_map(|c| c.distribute()).collect(),
            Nnf::Or(v) => {
                let mut acc: Vec<BTreeSet<(A, bool)>> = vec![BTreeSet::new()];
                for c in v {
                    let cs = c.distribute();
                    let mut next = Vec::with_capacity(acc.len() * cs.len());
                    for a in &acc {
                        for b in &cs {
                            let mut u = a.clone();
                            u.extend(b.iter().cloned());
                            if !is_tautology(&u) {
                                next.push(u);
                            }
                        }
                    }
                    acc = next;
                }
                acc
            }
        }
    }
}

pub(crate) fn is_tautology<A: Ord>(clause: &BTreeSet<(A, bool)>) -> bool {
    let mut prev: Option<&(A, bool)> = None;
    for l in clause {
        if let Some(p) = prev {
            if p.0 == l.0 && p.1 != l.1 {
                return true;
            }
        }
        prev = Some(l);
    }
    false
}

impl Formula {
    /// NNF where ground guards are decided and non-ground guards are kept as
    /// opaque literals.
    pub fn to_nnf(&self) -> Result<Nnf<GuardedAtom>> {
        self.nnf_signed(true)
    }

    fn nnf_signed(&self, positive: bool) -> Result<Nnf<GuardedAtom>> {
        Ok(match self {
            Formula::True => {
                if positive {
                    Nnf::True
                } else {
                    Nnf::False
                }
            }
            Formula::False => {
                if positive {
                    Nnf::False
                } else {
                    Nnf::True
                }
            }
            Formula::Atom(a) => Nnf::Lit(GuardedAtom::Atom(a.clone()), positive),
            Formula::Distinct(ts) => {
                if ts.iter().all(|t| !t.is_var()) {
                    if distinct_constants(ts)? == positive {
                        Nnf::True
                    } else {
                        Nnf::False
                    }
                } else {
                    Nnf::Lit(GuardedAtom::Distinct(ts.clone()), positive)
                }
            }
            Formula::Not(a) => a.nnf_signed(!positive)?,
            Formula::And(v) => {
                let parts = v
                    .iter()
                    .map(|c| c.nnf_signed(positive))
                    .collect::<Result<Vec<_>>>()?;
                if positive {
                    Nnf::and(parts)
                } else {
                    Nnf::or(parts)
                }
            }
            Formula::Or(v) => {
                let parts = v
                    .iter()
                    .map(|c| c.nnf_signed(positive))
                    .collect::<Result<Vec<_>>>()?;
                if positive {
                    Nnf::or(parts)
                } else {
                    Nnf::and(parts)
                }
            }
            Formula::Implies(a, b) => {
                let na = a.nnf_signed(false)?;
                let pb = b.nnf_signed(true)?;
                let imp = Nnf::or(vec![na, pb]);
                if positive {
                    imp
                } else {
                    imp.negate()
                }
            }
            Formula::Iff(a, b) => {
                let pa = a.nnf_signed(true)?;
                let pb = b.nnf_signed(true)?;
                let both = Nnf::and(vec![pa.clone(), pb.clone()]);
                let neither = Nnf::and(vec![pa.negate(), pb.negate()]);
                if positive {
                    Nnf::or(vec![both, neither])
                } else {
                    let ab = Nnf::and(vec![pa.clone(), pb.negate()]);
                    let ba = Nnf::and(vec![pa.negate(), pb]);
                    Nnf::or(vec![ab, ba])
                }
            }
        })
    }
}
