//! Lifted compilation: interchangeable constants, orbit-wise search over
//! evidence sets and variabilized rules.

use std::collections::{BTreeMap, BTreeSet};

use log::{debug, info};
use num_rational::Rational64;
use rayon::prelude::*;

use crate::error::Result;
use crate::logic::{
    ground, substitute_constants, variabilize_where, CanonicalForm, Formula, Literal, TypedDomain,
};
use crate::map::{MapEngine, Mln, WeightedFormula};
use crate::poss::{DisplayParams, Level, PossEngine, PossFormula, PossTheory};
use crate::transforms::{conjunction, level_below, rule_parts};

/// Formulas (or evidence conjunctions) already seen, bucketed by
/// fingerprint. Entries sharing a bucket are pairwise non-isomorphic.
#[derive(Debug, Default)]
pub struct ClosedSet {
    buckets: BTreeMap<String, Vec<(CanonicalForm, usize)>>,
    len: usize,
}

impl ClosedSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id of a stored entry isomorphic to `cf`.
    pub fn find(&self, cf: &CanonicalForm) -> Option<usize> {
        self.buckets
            .get(cf.fingerprint().as_str())?
            .iter()
            .find(|(other, _)| other.isomorphic(cf))
            .map(|(_, id)| *id)
    }

    /// Store `cf` under `id` unless an isomorphic entry exists; returns the
    /// existing id in that case.
    pub fn insert(&mut self, cf: CanonicalForm, id: usize) -> Option<usize> {
        if let Some(existing) = self.find(&cf) {
            return Some(existing);
        }
        self.buckets
            .entry(cf.fingerprint().as_str().to_string())
            .or_default()
            .push((cf, id));
        self.len += 1;
        None
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

fn key(weight: Option<Rational64>, f: &Formula) -> (Option<Rational64>, CanonicalForm) {
    (weight, CanonicalForm::new(f))
}

fn weighted(m: &Mln) -> Vec<(Option<Rational64>, CanonicalForm)> {
    m.soft
        .iter()
        .map(|w| key(Some(w.weight), &w.formula))
        .chain(m.hard.iter().map(|h| key(None, h)))
        .collect()
}

/// True iff a weight-preserving bijection pairs isomorphic formulas.
pub fn mln_isomorphic(m1: &Mln, m2: &Mln) -> bool {
    if m1.soft.len() != m2.soft.len() || m1.hard.len() != m2.hard.len() {
        return false;
    }
    let mut pool: BTreeMap<(Option<Rational64>, String), Vec<Option<CanonicalForm>>> = BTreeMap::new();
    for (w, cf) in weighted(m2) {
        pool.entry((w, cf.fingerprint().as_str().to_string()))
            .or_default()
            .push(Some(cf));
    }
    // Isomorphism is an equivalence, so greedy matching is exact.
    for (w, cf) in weighted(m1) {
        let Some(bucket) = pool.get_mut(&(w, cf.fingerprint().as_str().to_string())) else {
            return false;
        };
        match bucket
            .iter_mut()
            .find(|slot| slot.as_ref().is_some_and(|o| o.isomorphic(&cf)))
        {
            Some(slot) => *slot = None,
            None => return false,
        }
    }
    true
}

fn swap(m: &Mln, c: &str, d: &str) -> Mln {
    let map: BTreeMap<String, String> =
        [(c.to_string(), d.to_string()), (d.to_string(), c.to_string())].into();
    Mln {
        soft: m
            .soft
            .iter()
            .map(|w| WeightedFormula::new(substitute_constants(&w.formula, &map), w.weight))
            .collect(),
        hard: m.hard.iter().map(|h| substitute_constants(h, &map)).collect(),
        domain: m.domain.clone(),
    }
}

/// Classes of constants whose transposition maps `m` onto an isomorphic
/// MLN, computed within each type of `domain`. A type forming one class
/// keeps its tag; a type that splits yields tags `ty_1`, `ty_2`, ...
pub fn interchangeable_partition(m: &Mln, domain: &TypedDomain) -> TypedDomain {
    let mut out = TypedDomain::new();
    for (ty, constants) in domain.types() {
        let mut classes: Vec<Vec<String>> = Vec::new();
        for c in constants {
            match classes
                .iter_mut()
                .find(|cl| mln_isomorphic(m, &swap(m, &cl[0], c)))
            {
                Some(cl) => cl.push(c.clone()),
                None => classes.push(vec![c.clone()]),
            }
        }
        debug!("type {ty}: {} interchangeability classes", classes.len());
        if classes.len() <= 1 {
            out.declare(ty);
        }
        for (i, cl) in classes.iter().enumerate() {
            let tag = if classes.len() == 1 {
                ty.clone()
            } else {
                format!("{ty}_{}", i + 1)
            };
            for c in cl {
                out.add(&tag, c).expect("classes partition the constants");
            }
        }
    }
    out
}

/// Domain used while compiling: constants named in the formulas, then
/// declared ones, then generated `{type}{i}` constants. Each type gets
/// `size` constants, or its declared ones, or `max(k, 3)` when none are
/// declared. Named constants are never dropped.
pub fn working_domain(m: &Mln, k: usize, size: Option<usize>) -> Result<TypedDomain> {
    let mut types: BTreeSet<String> = m.domain.types().map(|(t, _)| t.clone()).collect();
    for f in m.soft.iter().map(|w| &w.formula).chain(&m.hard) {
        types.extend(f.vars().into_iter().map(|v| v.ty));
    }
    let named: Vec<String> = m.constants();
    let mut out = TypedDomain::new();
    for ty in &types {
        out.declare(ty);
        let declared: Vec<String> = m.domain.constants(ty).map(<[String]>::to_vec).unwrap_or_default();
        let mut cs: Vec<String> = named
            .iter()
            .filter(|c| m.domain.type_of(c) == Some(ty.as_str()))
            .cloned()
            .collect();
        let target = size.unwrap_or(if declared.is_empty() {
            k.max(3)
        } else {
            declared.len()
        });
        for c in declared {
            if cs.len() >= target {
                break;
            }
            if !cs.contains(&c) {
                cs.push(c);
            }
        }
        let mut i = 1;
        while cs.len() < target {
            let c = format!("{ty}{i}");
            i += 1;
            if !cs.contains(&c) && m.domain.type_of(&c).is_none() {
                cs.push(c);
            }
        }
        for c in cs {
            out.add(ty, &c)?;
        }
    }
    Ok(out)
}

/// Blocking-rule variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Blocking {
    /// `¬(⋀E ∧ ⋀X)`.
    #[default]
    Full,
    /// `¬⋀E`.
    Short,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiftedOptions {
    pub blocking: Blocking,
    /// Constants per type in the working domain.
    pub domain_size: Option<usize>,
    pub rational_monotonicity: bool,
    /// Drop formulas entailed by no-longer formulas at the same or higher
    /// levels.
    pub filter_redundant: bool,
}

impl Default for LiftedOptions {
    fn default() -> Self {
        LiftedOptions {
            blocking: Blocking::Full,
            domain_size: None,
            rational_monotonicity: true,
            filter_redundant: false,
        }
    }
}

/// Variabilizes against interchangeability classes. Classes with several
/// constants, and classes of constants the formulas never name, are lifted.
struct Lifter {
    classes: TypedDomain,
    generic: BTreeSet<String>,
}

impl Lifter {
    fn new(m: &Mln, classes: TypedDomain) -> Self {
        let named: BTreeSet<String> = m.constants().into_iter().collect();
        let generic = classes
            .types()
            .filter(|(_, cs)| cs.iter().all(|c| !named.contains(c)))
            .map(|(t, _)| t.clone())
            .collect();
        Lifter { classes, generic }
    }

    fn lift(&self, f: &Formula) -> Formula {
        variabilize_where(f, &self.classes, &|ty| {
            self.generic.contains(ty) || self.classes.constants(ty).is_some_and(|cs| cs.len() >= 2)
        })
    }
}

fn clause(lits: impl IntoIterator<Item = Literal>) -> Formula {
    Formula::or(lits.into_iter().map(|l| l.to_formula()).collect())
}

fn serialized(e: &[Literal]) -> String {
    e.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// One representative per orbit of feasible literal sets of size at most
/// `k`, in canonical order, with penalties.
fn orbit_representatives(
    engine: &MapEngine,
    lifter: &Lifter,
    k: usize,
) -> Result<Vec<(Vec<Literal>, Rational64)>> {
    let atoms = engine.universe().atoms();
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Literal>> = vec![Vec::new()];
    for size in 0..=k {
        let pens: Vec<Option<Rational64>> = layer
            .par_iter()
            .map(|e| Ok(engine.penalty_of_literals(e)?.finite()))
            .collect::<Result<_>>()?;
        let feasible: Vec<(Vec<Literal>, Rational64)> = layer
            .into_iter()
            .zip(pens)
            .filter_map(|(e, p)| p.map(|p| (e, p)))
            .collect();
        debug!("evidence size {size}: {} orbits", feasible.len());
        if size == k {
            out.extend(feasible);
            break;
        }
        let mut candidates: Vec<Vec<Literal>> = Vec::new();
        for (e, _) in &feasible {
            for a in atoms {
                if e.iter().any(|l| &l.atom == a) {
                    continue;
                }
                for positive in [true, false] {
                    let mut f = e.clone();
                    f.push(Literal {
                        atom: a.clone(),
                        positive,
                    });
                    f.sort();
                    candidates.push(f);
                }
            }
        }
        candidates.sort();
        candidates.dedup();
        let mut keyed: Vec<(CanonicalForm, String, Vec<Literal>)> = candidates
            .into_par_iter()
            .map(|e| {
                let cf = CanonicalForm::new(&lifter.lift(&conjunction(&e)));
                (cf, serialized(&e), e)
            })
            .collect();
        keyed.sort_by(|a, b| {
            a.0.fingerprint()
                .cmp(b.0.fingerprint())
                .then_with(|| a.1.cmp(&b.1))
        });
        let mut closed = ClosedSet::new();
        let mut next = Vec::new();
        for (cf, _, e) in keyed {
            if closed.insert(cf, next.len()).is_none() {
                next.push(e);
            }
        }
        out.extend(feasible);
        layer = next;
    }
    Ok(out)
}

/// Hard rules whose variable types survive the partition are kept as they
/// are; the others are grounded and variabilized per class.
fn lifted_hard(m: &Mln, work: &TypedDomain, lifter: &Lifter) -> Result<Vec<Formula>> {
    let mut out = Vec::new();
    let mut closed = ClosedSet::new();
    for h in &m.hard {
        if h.vars().iter().all(|v| lifter.classes.has_type(&v.ty)) {
            out.push(h.clone());
            continue;
        }
        for g in ground(h, work)? {
            let v = lifter.lift(&g);
            if crate::logic::equivalent(&v, &Formula::True) {
                continue;
            }
            if closed.insert(CanonicalForm::new(&v), out.len()).is_none() {
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// First-order theory covering literal evidence of size at most `k`.
pub fn transform_lifted(m: &Mln, k: usize, opts: LiftedOptions) -> Result<PossTheory> {
    let m = m.normalize();
    let work = working_domain(&m, k, opts.domain_size)?;
    let classes = interchangeable_partition(
        &Mln {
            domain: work.clone(),
            ..m.clone()
        },
        &work,
    );
    let lifter = Lifter::new(&m, classes.clone());
    let g = m.ground_over(&work)?;
    let engine = MapEngine::new(&g)?;
    let atoms = engine.universe().atoms().to_vec();
    let reps = orbit_representatives(&engine, &lifter, k)?;
    let levels: BTreeSet<Rational64> = reps.iter().map(|(_, p)| *p).collect();
    info!(
        "lifted search: {} evidence orbits, {} levels",
        reps.len(),
        levels.len()
    );

    let rows: Vec<Vec<(Formula, Level)>> = reps
        .par_iter()
        .map(|(e, pen)| -> Result<Vec<(Formula, Level)>> {
            let Some(parts) = rule_parts(&engine, e, &atoms, opts.rational_monotonicity)? else {
                return Ok(Vec::new());
            };
            let negated: Vec<Literal> = e.iter().map(Literal::complement).collect();
            let mut out: Vec<(Formula, Level)> = parts
                .consequent
                .iter()
                .map(|x| {
                    let mut c = negated.clone();
                    c.push(x.clone());
                    (lifter.lift(&clause(c)), Level::Finite(*pen))
                })
                .collect();
            if *pen > Rational64::from_integer(0) {
                let body: Vec<Literal> = match opts.blocking {
                    Blocking::Full => {
                        let mut b = negated.clone();
                        b.extend(parts.x.iter().filter(|l| !e.contains(l)).map(Literal::complement));
                        b
                    }
                    Blocking::Short => negated.clone(),
                };
                out.push((lifter.lift(&clause(body)), level_below(&levels, *pen)));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut t = PossTheory::new();
    t.domain = classes.clone();
    t.display = DisplayParams::for_total(1, g.total_weight());
    let mut closed = ClosedSet::new();
    for h in lifted_hard(&m, &work, &lifter)? {
        closed.insert(CanonicalForm::new(&h), t.formulas.len());
        t.formulas.push(PossFormula::new(h, Level::Hard));
    }
    for (f, level) in rows.into_iter().flatten() {
        let cf = CanonicalForm::new(&f);
        match closed.insert(cf, t.formulas.len()) {
            Some(i) => t.formulas[i].level = t.formulas[i].level.max(level),
            None => t.formulas.push(PossFormula::new(f, level)),
        }
    }
    info!("lifted transformation (k = {k}): {} formulas", t.len());
    if opts.filter_redundant {
        t = filter_redundant(&t)?;
    }
    Ok(t)
}

/// Replace each formula by its groundings over `domain`.
pub fn ground_theory(t: &PossTheory, domain: &TypedDomain) -> Result<PossTheory> {
    t.ground_over(domain)
}

fn length(f: &Formula) -> usize {
    let mut n = 0;
    f.visit_atoms(&mut |_| n += 1);
    n
}

/// Iteratively drop each formula entailed by the remaining formulas that
/// are no longer and sit at the same or a higher level. Longer formulas
/// are tried first; ties go to the later one. Entailment is checked over
/// the theory's own domain.
pub fn filter_redundant(t: &PossTheory) -> Result<PossTheory> {
    let groundings: Vec<Vec<Formula>> = t
        .formulas
        .par_iter()
        .map(|pf| ground(&pf.formula, &t.domain))
        .collect::<Result<_>>()?;
    let lens: Vec<usize> = t.formulas.iter().map(|pf| length(&pf.formula)).collect();
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| {
        lens[b]
            .cmp(&lens[a])
            .then(t.formulas[a].level.cmp(&t.formulas[b].level))
            .then(b.cmp(&a))
    });
    let mut alive = vec![true; t.len()];
    for i in order {
        let level = t.formulas[i].level;
        let mut premises = PossTheory::new();
        for j in (0..t.len()).filter(|&j| j != i && alive[j]) {
            if t.formulas[j].level >= level && lens[j] <= lens[i] {
                for g in &groundings[j] {
                    premises.push(g.clone(), Level::Hard);
                }
            }
        }
        let goal = Formula::and(groundings[i].clone());
        if PossEngine::new(&premises)?.entails_at(&goal, Level::Hard)? {
            debug!("redundant: {}", t.formulas[i].formula);
            alive[i] = false;
        }
    }
    let mut out = PossTheory {
        formulas: Vec::new(),
        domain: t.domain.clone(),
        display: t.display,
    };
    out.formulas = t
        .formulas
        .iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(pf, _)| pf.clone())
        .collect();
    Ok(out)
}
