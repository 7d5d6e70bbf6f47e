//! Markov logic networks, penalties and MAP inference.

mod engine;
mod search;

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, Zero};

use crate::error::Result;
use crate::logic::{ground, Atom, Formula, Literal, TypedDomain, Universe};

pub use engine::MapEngine;

/// A soft formula with its weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedFormula {
    pub formula: Formula,
    pub weight: Rational64,
}

impl WeightedFormula {
    pub fn new(formula: Formula, weight: Rational64) -> Self {
        WeightedFormula { formula, weight }
    }
}

/// Hard constraints plus weighted soft formulas over a typed domain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Mln {
    pub soft: Vec<WeightedFormula>,
    pub hard: Vec<Formula>,
    pub domain: TypedDomain,
}

impl Mln {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_soft(mut self, weight: i64, f: Formula) -> Self {
        self.soft
            .push(WeightedFormula::new(f, Rational64::from_integer(weight)));
        self
    }

    pub fn with_hard(mut self, f: Formula) -> Self {
        self.hard.push(f);
        self
    }

    pub fn is_ground(&self) -> bool {
        self.soft.iter().all(|w| w.formula.is_ground()) && self.hard.iter().all(Formula::is_ground)
    }

    /// Flip negative weights onto the negated formula and drop zero weights.
    pub fn normalize(&self) -> Mln {
        let soft = self
            .soft
            .iter()
            .filter(|w| !w.weight.is_zero())
            .map(|w| {
                if w.weight.is_negative() {
                    WeightedFormula::new(w.formula.negated(), -w.weight)
                } else {
                    w.clone()
                }
            })
            .collect();
        Mln {
            soft,
            hard: self.hard.clone(),
            domain: self.domain.clone(),
        }
    }

    /// Ground every formula over the MLN's own domain. Each grounding of a
    /// soft formula carries the formula's weight.
    pub fn ground(&self) -> Result<Mln> {
        self.ground_over(&self.domain)
    }

    pub fn ground_over(&self, domain: &TypedDomain) -> Result<Mln> {
        let mut out = Mln {
            soft: Vec::new(),
            hard: Vec::new(),
            domain: domain.clone(),
        };
        for w in &self.soft {
            for g in ground(&w.formula, domain)? {
                out.soft.push(WeightedFormula::new(g, w.weight));
            }
        }
        for h in &self.hard {
            out.hard.extend(ground(h, domain)?);
        }
        Ok(out)
    }

    /// Ground atoms in order of first occurrence, soft formulas first.
    pub fn universe(&self) -> Universe {
        let mut u = Universe::new();
        for w in &self.soft {
            u.extend_from(&w.formula);
        }
        for h in &self.hard {
            u.extend_from(h);
        }
        u
    }

    pub fn total_weight(&self) -> Rational64 {
        self.soft.iter().map(|w| w.weight).sum()
    }

    /// All constants mentioned in the formulas, in first-occurrence order.
    pub fn constants(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in self.soft.iter().map(|w| &w.formula).chain(&self.hard) {
            for c in f.constants() {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Weight of the violated soft formulas of a best world, relative to the
/// global optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Penalty {
    Finite(Rational64),
    Infinite,
}

impl Penalty {
    pub fn zero() -> Self {
        Penalty::Finite(Rational64::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Penalty::Finite(_))
    }

    pub fn finite(&self) -> Option<Rational64> {
        match self {
            Penalty::Finite(p) => Some(*p),
            Penalty::Infinite => None,
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Finite(p) => write!(f, "{p}"),
            Penalty::Infinite => f.write_str("inf"),
        }
    }
}

/// Ground evidence formulas, usually literals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EvidenceSet {
    pub formulas: Vec<Formula>,
}

impl EvidenceSet {
    pub fn new(formulas: Vec<Formula>) -> Self {
        EvidenceSet { formulas }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_literals<'a>(lits: impl IntoIterator<Item = &'a Literal>) -> Self {
        EvidenceSet {
            formulas: lits.into_iter().map(Literal::to_formula).collect(),
        }
    }

    /// The literals, if every member is one.
    pub fn literals(&self) -> Option<Vec<Literal>> {
        self.formulas.iter().map(Literal::from_formula).collect()
    }

    /// Same evidence plus one formula.
    pub fn with(&self, f: Formula) -> EvidenceSet {
        let mut formulas = self.formulas.clone();
        formulas.push(f);
        EvidenceSet { formulas }
    }

    pub fn conjunction(&self) -> Formula {
        Formula::and(self.formulas.clone())
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn atoms(&self) -> BTreeSet<&Atom> {
        let mut out = BTreeSet::new();
        for f in &self.formulas {
            f.visit_atoms(&mut |a| {
                out.insert(a);
            });
        }
        out
    }
}

impl fmt::Display for EvidenceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.formulas.iter().map(|g| g.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
