//! Compilation of ground MLNs into possibilistic theories.

use std::collections::BTreeSet;

use log::{debug, info};
use num_rational::Rational64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logic::{equivalent, Atom, Formula, Literal};
use crate::map::{EvidenceSet, MapEngine, Mln, Penalty};
use crate::poss::{DisplayParams, Level, PossTheory};

/// Default cap on soft formulas for the exact transformation.
pub const EXACT_CAP: usize = 20;

/// Evidence sets to compile for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvidenceFamily {
    Explicit(Vec<EvidenceSet>),
    /// Every consistent literal set of at most this size over the MLN's atoms.
    LiteralSets(usize),
}

impl EvidenceFamily {
    pub fn members(&self, atoms: &[Atom]) -> Vec<EvidenceSet> {
        match self {
            EvidenceFamily::Explicit(v) => v.clone(),
            EvidenceFamily::LiteralSets(k) => literal_sets(atoms, *k)
                .iter()
                .map(EvidenceSet::from_literals)
                .collect(),
        }
    }
}

/// Consistent literal sets of size at most `k`, ordered by size and then
/// lexicographically by (atom position, positive first).
pub fn literal_sets(atoms: &[Atom], k: usize) -> Vec<Vec<Literal>> {
    let n = atoms.len();
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<(usize, bool)>> = vec![Vec::new()];
    for _ in 0..k.min(n) {
        let mut next = Vec::new();
        for e in &layer {
            let start = e.last().map_or(0, |l| l.0 + 1);
            for i in start..n {
                for positive in [true, false] {
                    let mut f = e.clone();
                    f.push((i, positive));
                    next.push(f);
                }
            }
        }
        out.extend(next.iter().map(|e| {
            e.iter()
                .map(|&(i, s)| Literal {
                    atom: atoms[i].clone(),
                    positive: s,
                })
                .collect()
        }));
        layer = next;
    }
    out
}

pub(crate) fn conjunction(lits: &[Literal]) -> Formula {
    Formula::and(lits.iter().map(Literal::to_formula).collect())
}

fn positive(p: Penalty) -> bool {
    matches!(p, Penalty::Finite(x) if x > Rational64::from_integer(0)) || p == Penalty::Infinite
}

/// One formula per non-empty subset of soft formulas: the disjunction, at
/// the penalty of its negation. Zero-penalty and tautological disjunctions
/// are left out.
pub fn transform_exact(m: &Mln, cap: usize) -> Result<PossTheory> {
    let engine = MapEngine::new(m)?;
    let g = engine.mln();
    let n = g.soft.len();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "soft formula count",
            found: n,
            cap,
        });
    }
    let mut t = PossTheory::new();
    t.domain = g.domain.clone();
    t.display = DisplayParams::for_total(0, g.total_weight());
    for h in &g.hard {
        t.push(h.clone(), Level::Hard);
    }
    let rows: Vec<Option<(Formula, Level)>> = (1u64..1 << n)
        .into_par_iter()
        .map(|mask| -> Result<Option<(Formula, Level)>> {
            let disj = Formula::or(
                (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| g.soft[i].formula.clone())
                    .collect(),
            );
            if equivalent(&disj, &Formula::True) {
                return Ok(None);
            }
            let p = engine.penalty_of(&disj.negated())?;
            Ok(positive(p).then(|| (disj, Level::from_penalty(p))))
        })
        .collect::<Result<_>>()?;
    for (f, l) in rows.into_iter().flatten() {
        t.push(f, l);
    }
    info!("exact transformation: {} formulas", t.len());
    Ok(t)
}

/// All subset-minimal sets meeting every member of `family`, sorted by
/// size and then contents.
pub fn minimal_hitting_sets<T: Ord + Clone>(family: &[BTreeSet<T>]) -> Result<Vec<BTreeSet<T>>> {
    if family.iter().any(BTreeSet::is_empty) {
        return Err(Error::EmptyMember);
    }
    let mut current: Vec<BTreeSet<T>> = vec![BTreeSet::new()];
    for s in family {
        let mut next: Vec<BTreeSet<T>> = Vec::new();
        for h in &current {
            if h.iter().any(|x| s.contains(x)) {
                next.push(h.clone());
            } else {
                for x in s {
                    let mut g = h.clone();
                    g.insert(x.clone());
                    next.push(g);
                }
            }
        }
        next.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        next.dedup();
        let mut minimal: Vec<BTreeSet<T>> = Vec::new();
        for h in next {
            if !minimal.iter().any(|m| m.is_subset(&h)) {
                minimal.push(h);
            }
        }
        current = minimal;
    }
    current.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(current)
}

/// Minimal sets of soft formulas (indices into the engine's ground MLN)
/// whose joint violation raises the penalty of `e`.
pub fn compute_se(engine: &MapEngine, e: &EvidenceSet) -> Result<Vec<BTreeSet<usize>>> {
    let pe = engine.penalty(e)?;
    if pe == Penalty::Infinite {
        return Err(Error::InconsistentEvidence);
    }
    let soft = &engine.mln().soft;
    let mut drowned = BTreeSet::new();
    for (i, w) in soft.iter().enumerate() {
        if engine.penalty_of(&w.formula.negated())? < pe {
            drowned.insert(i);
        }
    }
    let family: Vec<BTreeSet<usize>> = engine
        .cons_sets(e)?
        .into_iter()
        .map(|y| y.intersection(&drowned).copied().collect())
        .collect();
    if family.iter().any(BTreeSet::is_empty) {
        return Ok(Vec::new());
    }
    minimal_hitting_sets(&family)
}

/// Theory tailored to the evidence sets in `family`.
pub fn transform_evidence(m: &Mln, family: &EvidenceFamily) -> Result<PossTheory> {
    let engine = MapEngine::new(m)?;
    let g = engine.mln();
    let mut t = PossTheory::new();
    t.domain = g.domain.clone();
    t.display = DisplayParams::for_total(1, g.total_weight());
    for h in &g.hard {
        t.push_max(h.clone(), Level::Hard);
    }
    for w in &g.soft {
        let p = engine.penalty_of(&w.formula.negated())?;
        t.push_max(w.formula.clone(), Level::from_penalty(p));
    }
    let atoms = engine.universe().atoms().to_vec();
    for e in family.members(&atoms) {
        let pe = engine.penalty(&e)?;
        if pe == Penalty::Infinite {
            if matches!(family, EvidenceFamily::LiteralSets(_)) {
                debug!("skipping infeasible evidence {e}");
                continue;
            }
            return Err(Error::InconsistentEvidence);
        }
        let not_e = e.conjunction().negated();
        for z in compute_se(&engine, &e)? {
            let mut weakened = vec![not_e.clone()];
            weakened.extend(z.iter().map(|&i| g.soft[i].formula.clone()));
            let mut with_z = e.clone();
            for &i in &z {
                with_z = with_z.with(g.soft[i].formula.negated());
            }
            let level = Level::from_penalty(engine.penalty(&with_z)?);
            t.push_max(Formula::or(weakened), level);
        }
        if positive(pe) {
            t.push_max(not_e, Level::from_penalty(pe));
        }
    }
    info!("evidence transformation: {} formulas", t.len());
    Ok(t)
}

/// Switches for the default-rule transformation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DefaultOptions {
    /// Drop consequents already implied by a rational-monotonicity step.
    pub rational_monotonicity: bool,
    /// Skip blocking rules whose level equals that of a one-smaller subset.
    pub omit_redundant_blocking: bool,
}

impl Default for DefaultOptions {
    fn default() -> Self {
        DefaultOptions {
            rational_monotonicity: true,
            omit_redundant_blocking: false,
        }
    }
}

impl DefaultOptions {
    pub fn unpruned() -> Self {
        DefaultOptions {
            rational_monotonicity: false,
            omit_redundant_blocking: false,
        }
    }
}

fn without(e: &[Literal], i: usize) -> Vec<Literal> {
    e.iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, l)| l.clone())
        .collect()
}

/// Whether some `y` in `e` is already a MAP consequence of the rest.
pub(crate) fn cautiously_redundant(engine: &MapEngine, e: &[Literal]) -> Result<bool> {
    for (i, y) in e.iter().enumerate() {
        let rest = EvidenceSet::from_literals(&without(e, i));
        if engine.map_entails(&rest, &y.to_formula())? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The highest level among `levels` strictly below `p`, or `Bottom`.
pub(crate) fn level_below(levels: &BTreeSet<Rational64>, p: Rational64) -> Level {
    levels
        .range(..p)
        .next_back()
        .map_or(Level::Bottom, |&q| Level::Finite(q))
}

/// Penalties of every feasible literal set up to size `k`.
pub(crate) fn feasible_penalties(
    engine: &MapEngine,
    sets: &[Vec<Literal>],
) -> Result<Vec<Option<Rational64>>> {
    sets.par_iter()
        .map(|e| Ok(engine.penalty_of_literals(e)?.finite()))
        .collect()
}

/// MAP consequences of literal evidence `e`.
pub(crate) struct RuleParts {
    /// Every entailed literal over the atoms, including `e` itself.
    pub x: BTreeSet<Literal>,
    /// Entailed literals outside `e` that survive pruning.
    pub consequent: Vec<Literal>,
}

/// `None` when `e` is skipped by cautious monotonicity.
pub(crate) fn rule_parts(
    engine: &MapEngine,
    e: &[Literal],
    atoms: &[Atom],
    rational_monotonicity: bool,
) -> Result<Option<RuleParts>> {
    if cautiously_redundant(engine, e)? {
        return Ok(None);
    }
    let ev = EvidenceSet::from_literals(e);
    let x = engine.entailed_literals(&ev, atoms)?;
    let mut pruned: BTreeSet<&Literal> = BTreeSet::new();
    if rational_monotonicity {
        for i in 0..e.len() {
            let rest = EvidenceSet::from_literals(&without(e, i));
            if engine.map_entails(&rest, &e[i].complement().to_formula())? {
                continue;
            }
            for l in &x {
                if !pruned.contains(l) && engine.map_entails(&rest, &l.to_formula())? {
                    pruned.insert(l);
                }
            }
        }
    }
    let consequent = x
        .iter()
        .filter(|l| !pruned.contains(l) && !e.contains(l))
        .cloned()
        .collect();
    Ok(Some(RuleParts { x, consequent }))
}

/// Default-rule theory covering literal evidence of size at most `k`.
pub fn transform_default(m: &Mln, k: usize, opts: DefaultOptions) -> Result<PossTheory> {
    let engine = MapEngine::new(m)?;
    let g = engine.mln();
    let atoms = engine.universe().atoms().to_vec();
    let sets = literal_sets(&atoms, k);
    let pens = feasible_penalties(&engine, &sets)?;
    let levels: BTreeSet<Rational64> = pens.iter().flatten().copied().collect();

    let rows: Vec<Vec<(Formula, Level)>> = sets
        .par_iter()
        .zip(&pens)
        .map(|(e, pen)| -> Result<Vec<(Formula, Level)>> {
            let Some(pen) = *pen else {
                debug!("skipping infeasible evidence {e:?}");
                return Ok(Vec::new());
            };
            let Some(RuleParts { x, consequent }) =
                rule_parts(&engine, e, &atoms, opts.rational_monotonicity)?
            else {
                return Ok(Vec::new());
            };
            let mut out = vec![(
                Formula::implies(conjunction(e), conjunction(&consequent)),
                Level::Finite(pen),
            )];
            if pen > Rational64::from_integer(0) {
                let below = level_below(&levels, pen);
                let redundant = opts.omit_redundant_blocking
                    && (0..e.len()).any(|i| {
                        let idx = sets.iter().position(|f| *f == without(e, i));
                        idx.and_then(|j| pens[j]).map(Level::Finite) == Some(below)
                    });
                if !redundant {
                    let mut body = e.to_vec();
                    body.extend(x.iter().filter(|l| !e.contains(l)).cloned());
                    out.push((conjunction(&body).negated(), below));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut t = PossTheory::new();
    t.domain = g.domain.clone();
    t.display = DisplayParams::for_total(1, g.total_weight());
    for h in &g.hard {
        t.push_max(h.clone(), Level::Hard);
    }
    for (f, l) in rows.into_iter().flatten() {
        t.push_max(f, l);
    }
    info!("default transformation (k = {k}): {} formulas", t.len());
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&'static str]) -> BTreeSet<&'static str> {
        xs.iter().copied().collect()
    }

    #[test]
    fn hitting_sets_of_two_pairs() {
        let hs = minimal_hitting_sets(&[set(&["a", "b"]), set(&["u", "v"])]).unwrap();
        assert_eq!(
            hs,
            vec![
                set(&["a", "u"]),
                set(&["a", "v"]),
                set(&["b", "u"]),
                set(&["b", "v"])
            ]
        );
    }

    #[test]
    fn hitting_sets_basic() {
        assert_eq!(minimal_hitting_sets(&[set(&["a"])]).unwrap(), vec![set(&["a"])]);
        assert_eq!(
            minimal_hitting_sets(&[set(&["a", "b"]), set(&["a", "c"])]).unwrap(),
            vec![set(&["a"]), set(&["b", "c"])]
        );
        assert_eq!(
            minimal_hitting_sets(&[set(&["a"]), set(&[])]),
            Err(Error::EmptyMember)
        );
    }

    #[test]
    fn literal_set_order() {
        let atoms = [Atom::prop("a"), Atom::prop("b")];
        let sets = literal_sets(&atoms, 2);
        let shown: Vec<String> = sets
            .iter()
            .map(|e| e.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        assert_eq!(shown, ["", "a", "!a", "b", "!b", "a,b", "a,!b", "!a,b", "!a,!b"]);
    }

    #[test]
    fn level_below_falls_back_to_bottom() {
        let levels: BTreeSet<Rational64> = [0, 1, 2].into_iter().map(Rational64::from_integer).collect();
        assert_eq!(
            level_below(&levels, Rational64::from_integer(2)),
            Level::finite(1)
        );
        assert_eq!(level_below(&levels, Rational64::from_integer(0)), Level::Bottom);
    }

    fn p(n: &str) -> Formula {
        Formula::prop(n)
    }

    fn levels(t: &PossTheory) -> Vec<Level> {
        let mut v: Vec<Level> = t.formulas.iter().map(|f| f.level).collect();
        v.sort();
        v
    }

    fn implications() -> Mln {
        Mln::new()
            .with_soft(5, Formula::implies(p("a"), p("x")))
            .with_soft(5, Formula::implies(p("a"), p("y")))
            .with_soft(
                10,
                Formula::implies(Formula::and(vec![p("a"), p("b")]), Formula::not(p("y"))),
            )
    }

    #[test]
    fn exact_levels_of_implications() {
        let t = transform_exact(&implications(), EXACT_CAP).unwrap();
        let want: Vec<Level> = [5, 5, 10, 10, 15].into_iter().map(Level::finite).collect();
        assert_eq!(levels(&t), want);
        assert!(matches!(
            transform_exact(&implications(), 2),
            Err(Error::CapExceeded { found: 3, cap: 2, .. })
        ));
    }

    #[test]
    fn evidence_theory_of_drowning() {
        let rule = Formula::implies(
            Formula::and(vec![
                Formula::or(vec![p("a"), p("b")]),
                Formula::or(vec![p("u"), p("v")]),
            ]),
            Formula::not(p("x")),
        );
        let m = Mln::new()
            .with_soft(3, p("u"))
            .with_soft(2, p("a"))
            .with_soft(10, rule)
            .with_soft(2, p("b"))
            .with_soft(1, p("v"));
        let engine = MapEngine::new(&m).unwrap();
        let e = EvidenceSet::new(vec![p("x")]);
        let se = compute_se(&engine, &e).unwrap();
        let want: Vec<BTreeSet<usize>> = [[1, 0], [1, 4], [3, 0], [3, 4]]
            .iter()
            .map(|z| z.iter().copied().collect())
            .collect();
        let mut got = se.clone();
        got.sort();
        let mut want_sorted = want;
        want_sorted.sort();
        assert_eq!(got, want_sorted);
        let t = transform_evidence(&m, &EvidenceFamily::Explicit(vec![e])).unwrap();
        let want: Vec<Level> = [1, 2, 2, 3, 4, 5, 5, 6, 6, 10]
            .into_iter()
            .map(Level::finite)
            .collect();
        assert_eq!(levels(&t), want);
    }

    #[test]
    fn default_theory_of_defaults() {
        let (a, b) = (p("a"), p("b"));
        let m = Mln::new()
            .with_soft(2, Formula::or(vec![Formula::not(a.clone()), b.clone()]))
            .with_soft(2, Formula::or(vec![a.clone(), b.clone()]))
            .with_soft(1, Formula::or(vec![a, Formula::not(b)]));
        let t = transform_default(&m, 1, DefaultOptions::default()).unwrap();
        let want: Vec<Level> = [0, 0, 1, 1, 2].into_iter().map(Level::finite).collect();
        assert_eq!(levels(&t), want);
    }
}
