//! Typed first-order and propositional syntax.
//!
//! Constants are plain names; their type lives in a [`TypedDomain`]. Variables
//! carry their type tag directly, so a formula is self-describing once it has
//! been variabilized.

mod cnf;
mod eval;
mod ground;
mod iso;
mod nnf;
mod print;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

pub use cnf::{to_cnf, Encoder};
pub use eval::evaluate;
pub use ground::{ground, substitute_constants, variabilize, variabilize_where, Substitution};
pub use iso::{equivalent, fingerprint, isomorphic, CanonicalForm, Fingerprint};
pub use nnf::{GuardedAtom, Nnf};
pub use print::FormulaPrinter;

use crate::error::{Error, Result};

/// A typed logical variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: String,
    pub ty: String,
}

impl Var {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(String),
    Var(Var),
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn var(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Term::Var(Var::new(name, ty))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Var(v) => f.write_str(&v.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    /// A zero-arity atom.
    pub fn prop(name: impl Into<String>) -> Self {
        Atom::new(name, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Formula tree. `Distinct` is a pairwise disequality guard over terms of one
/// type; it renders as `alldiff(...)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Distinct(Vec<Term>),
}

impl Formula {
    pub fn atom(a: Atom) -> Self {
        Formula::Atom(a)
    }

    pub fn prop(name: &str) -> Self {
        Formula::Atom(Atom::prop(name))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Conjunction, collapsing the empty and singleton cases.
    pub fn and(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction, collapsing the empty and singleton cases.
    pub fn or(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn negated(&self) -> Formula {
        match self {
            Formula::Not(inner) => (**inner).clone(),
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            other => Formula::not(other.clone()),
        }
    }

    fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) | Formula::Distinct(_) => vec![],
            Formula::Not(a) => vec![a],
            Formula::And(v) | Formula::Or(v) => v.iter().collect(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => vec![a, b],
        }
    }

    /// Atoms in first-occurrence order, without duplicates.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            if seen.insert(a) {
                out.push(a);
            }
        });
        out
    }

    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            Formula::Atom(a) => f(a),
            _ => {
                for c in self.children() {
                    c.visit_atoms(f);
                }
            }
        }
    }

    pub fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Formula::Atom(a) => a.args.iter().for_each(&mut *f),
            Formula::Distinct(ts) => ts.iter().for_each(&mut *f),
            _ => {
                for c in self.children() {
                    c.visit_terms(f);
                }
            }
        }
    }

    /// Variables in first-occurrence order.
    pub fn vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        self.visit_terms(&mut |t| {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    /// Constants in first-occurrence order.
    pub fn constants(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.visit_terms(&mut |t| {
            if let Term::Const(c) = t {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        });
        out
    }

    pub fn is_ground(&self) -> bool {
        let mut ground = true;
        self.visit_terms(&mut |t| ground &= !t.is_var());
        ground
    }

    /// Rebuild the formula with every term mapped through `f`.
    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => Formula::Atom(Atom {
                predicate: a.predicate.clone(),
                args: a.args.iter().map(&mut *f).collect(),
            }),
            Formula::Distinct(ts) => Formula::Distinct(ts.iter().map(&mut *f).collect()),
            Formula::Not(a) => Formula::not(a.map_terms(f)),
            Formula::And(v) => Formula::And(v.iter().map(|c| c.map_terms(f)).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(|c| c.map_terms(f)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.map_terms(f), b.map_terms(f)),
            Formula::Iff(a, b) => Formula::iff(a.map_terms(f), b.map_terms(f)),
        }
    }

    /// Number of atom occurrences; used as the length of a rule.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit_atoms(&mut |_| n += 1);
        n
    }
}

impl From<Atom> for Formula {
    fn from(a: Atom) -> Self {
        Formula::Atom(a)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&FormulaPrinter::default().formula(self))
    }
}

/// A ground literal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn new(atom: Atom, positive: bool) -> Result<Self> {
        if !atom.is_ground() {
            return Err(Error::NotGround(atom.to_string()));
        }
        Ok(Literal { atom, positive })
    }

    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            atom,
            positive: false,
        }
    }

    pub fn complement(&self) -> Literal {
        Literal {
            atom: self.atom.clone(),
            positive: !self.positive,
        }
    }

    pub fn to_formula(&self) -> Formula {
        let a = Formula::Atom(self.atom.clone());
        if self.positive {
            a
        } else {
            Formula::not(a)
        }
    }

    /// Recognise `p` or `!p` over a ground atom.
    pub fn from_formula(f: &Formula) -> Option<Literal> {
        match f {
            Formula::Atom(a) if a.is_ground() => Some(Literal::pos(a.clone())),
            Formula::Not(inner) => match &**inner {
                Formula::Atom(a) if a.is_ground() => Some(Literal::neg(a.clone())),
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("!")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// Indexed finite universe of ground atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Universe {
    atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
}

impl Universe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut u = Universe::new();
        for a in atoms {
            u.insert(a.clone());
        }
        u
    }

    /// Insert a ground atom, returning its index.
    pub fn insert(&mut self, atom: Atom) -> usize {
        if let Some(&i) = self.index.get(&atom) {
            return i;
        }
        let i = self.atoms.len();
        self.index.insert(atom.clone(), i);
        self.atoms.push(atom);
        i
    }

    pub fn extend_from(&mut self, f: &Formula) {
        f.visit_atoms(&mut |a| {
            self.insert(a.clone());
        });
    }

    pub fn get(&self, atom: &Atom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.index.contains_key(atom)
    }
}

/// A total truth assignment over a universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct World {
    universe: Arc<Universe>,
    values: Vec<bool>,
}

impl World {
    pub fn new(universe: Arc<Universe>, values: Vec<bool>) -> Result<Self> {
        if values.len() != universe.len() {
            return Err(Error::Invalid(format!(
                "world assigns {} atoms but the universe has {}",
                values.len(),
                universe.len()
            )));
        }
        Ok(World { universe, values })
    }

    /// Build from the set of atoms that are true; every other atom is false.
    pub fn from_true_atoms(universe: Arc<Universe>, true_atoms: &[Atom]) -> Result<Self> {
        let mut values = vec![false; universe.len()];
        for a in true_atoms {
            let i = universe.get(a).ok_or_else(|| Error::UnknownAtom(a.to_string()))?;
            values[i] = true;
        }
        Ok(World { universe, values })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn value(&self, atom: &Atom) -> Option<bool> {
        self.universe.get(atom).map(|i| self.values[i])
    }

    pub fn true_atoms(&self) -> Vec<&Atom> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(i, _)| self.universe.atom(i))
            .collect()
    }
}

impl std::hash::Hash for World {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.values.hash(state);
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if !v {
                f.write_str("!")?;
            }
            write!(f, "{}", self.universe.atom(i))?;
        }
        f.write_str("}")
    }
}

/// Ordered constant lists per type tag. Types partition the constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypedDomain {
    types: BTreeMap<String, Vec<String>>,
}

impl TypedDomain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a type (possibly with no constants yet).
    pub fn declare(&mut self, ty: &str) {
        self.types.entry(ty.to_string()).or_default();
    }

    /// Add a constant to a type; errors if it already belongs to another type.
    pub fn add(&mut self, ty: &str, constant: &str) -> Result<()> {
        if let Some(existing) = self.type_of(constant) {
            if existing != ty {
                return Err(Error::TypeConflict(format!(
                    "constant `{constant}` declared as both `{existing}` and `{ty}`"
                )));
            }
            return Ok(());
        }
        self.types
            .entry(ty.to_string())
            .or_default()
            .push(constant.to_string());
        Ok(())
    }

    pub fn type_of(&self, constant: &str) -> Option<&str> {
        self.types
            .iter()
            .find(|(_, cs)| cs.iter().any(|c| c == constant))
            .map(|(t, _)| t.as_str())
    }

    pub fn constants(&self, ty: &str) -> Option<&[String]> {
        self.types.get(ty).map(|v| v.as_slice())
    }

    pub fn has_type(&self, ty: &str) -> bool {
        self.types.contains_key(ty)
    }

    pub fn types(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.types.iter()
    }

    pub fn all_constants(&self) -> Vec<String> {
        self.types.values().flatten().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.types.values().all(|v| v.is_empty())
    }
}
