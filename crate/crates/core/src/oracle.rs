//! Brute-force oracles and cross-checks between the MAP and possibilistic
//! engines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lifted::{ground_theory, transform_lifted, working_domain, Blocking, LiftedOptions};
use crate::logic::{evaluate, Atom, Formula, Literal, World};
use crate::map::{EvidenceSet, MapEngine, Mln, Penalty};
use crate::poss::{Level, PossEngine, PossTheory};
use crate::transforms::{literal_sets, transform_default, transform_exact, DefaultOptions, EXACT_CAP};

/// Default cap on the atoms enumerated by the brute-force oracle.
pub const BRUTE_CAP: usize = 16;

/// One disagreement between two answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub evidence: String,
    pub query: String,
    pub map: String,
    pub poss: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn merge(&mut self, other: EquivalenceReport) {
        self.checked += other.checked;
        self.mismatches.extend(other.mismatches);
    }

    fn check(&mut self, ok: bool, mismatch: impl FnOnce() -> Mismatch) {
        self.checked += 1;
        if !ok {
            self.mismatches.push(mismatch());
        }
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "pass" } else { "FAIL" };
        writeln!(
            f,
            "{status}: {} checked, {} mismatches",
            self.checked,
            self.mismatches.len()
        )?;
        for m in &self.mismatches {
            writeln!(
                f,
                "  evidence {} query {}: map {} poss {}",
                m.evidence, m.query, m.map, m.poss
            )?;
        }
        Ok(())
    }
}

/// Penalty of every world over the MLN's atoms by direct evaluation,
/// relative to the best world.
pub fn brute_penalties(m: &Mln, cap: usize) -> Result<Vec<(World, Penalty)>> {
    let g = if m.is_ground() {
        m.normalize()
    } else {
        m.normalize().ground()?
    };
    let u = Arc::new(g.universe());
    let n = u.len();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "atom universe",
            found: n,
            cap,
        });
    }
    let mut raw = Vec::with_capacity(1 << n);
    for bits in 0..1u64 << n {
        let w = World::new(u.clone(), (0..n).map(|i| bits >> i & 1 == 1).collect())?;
        let mut cost = Some(Rational64::zero());
        for h in &g.hard {
            if !evaluate(h, &w)? {
                cost = None;
            }
        }
        if let Some(c) = cost.as_mut() {
            for s in &g.soft {
                if !evaluate(&s.formula, &w)? {
                    *c += s.weight;
                }
            }
        }
        raw.push((w, cost));
    }
    let best = raw.iter().filter_map(|(_, c)| *c).min();
    Ok(raw
        .into_iter()
        .map(|(w, c)| {
            let p = match (c, best) {
                (Some(c), Some(b)) => Penalty::Finite(c - b),
                _ => Penalty::Infinite,
            };
            (w, p)
        })
        .collect())
}

fn possibility_by_world(t: &PossTheory, worlds: &[(World, Penalty)]) -> Result<Vec<Rational64>> {
    let lsm = t.least_specific_model(BRUTE_CAP)?;
    let mut by_values: BTreeMap<Vec<bool>, Rational64> = BTreeMap::new();
    let tu = lsm.first().map(|(w, _)| w.universe().clone());
    for (w, pi) in &lsm {
        by_values.insert(w.values().to_vec(), *pi);
    }
    worlds
        .iter()
        .map(|(w, _)| {
            let key: Vec<bool> = match &tu {
                Some(u) => u.atoms().iter().map(|a| w.value(a).unwrap_or(false)).collect(),
                None => Vec::new(),
            };
            Ok(by_values.get(&key).copied().unwrap_or_else(Rational64::one))
        })
        .collect()
}

/// Possibility in the exact theory's least specific model against one
/// minus the displayed penalty, world by world.
pub fn verify_prop1(m: &Mln) -> Result<EquivalenceReport> {
    let worlds = brute_penalties(m, BRUTE_CAP)?;
    let t = transform_exact(m, EXACT_CAP)?;
    let pis = possibility_by_world(&t, &worlds)?;
    let mut r = EquivalenceReport::default();
    for ((w, p), pi) in worlds.iter().zip(pis) {
        let expected = Rational64::one() - t.display.weight(Level::from_penalty(*p));
        r.check(pi == expected, || Mismatch {
            evidence: w.to_string(),
            query: "possibility".into(),
            map: expected.to_string(),
            poss: pi.to_string(),
        });
    }
    Ok(r)
}

/// Penalty order against possibility order over every pair of worlds.
pub fn verify_ranking(m: &Mln) -> Result<EquivalenceReport> {
    let worlds = brute_penalties(m, BRUTE_CAP)?;
    let t = transform_exact(m, EXACT_CAP)?;
    let pis = possibility_by_world(&t, &worlds)?;
    let mut r = EquivalenceReport::default();
    for i in 0..worlds.len() {
        for j in 0..worlds.len() {
            let by_pen = worlds[i].1 < worlds[j].1;
            let by_pi = pis[i] > pis[j];
            r.check(by_pen == by_pi, || Mismatch {
                evidence: format!("{} vs {}", worlds[i].0, worlds[j].0),
                query: "ranking".into(),
                map: format!("{} < {}: {by_pen}", worlds[i].1, worlds[j].1),
                poss: format!("{} > {}: {by_pi}", pis[i], pis[j]),
            });
        }
    }
    Ok(r)
}

/// Evidence and queries to cross-check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySpec {
    pub cases: Vec<(EvidenceSet, Vec<Formula>)>,
}

impl QuerySpec {
    /// Literal evidence `E` with `|E| <= k` and non-trivial literal clauses
    /// `C` with `|E| + |C| <= k + 1`.
    pub fn literal_clauses(atoms: &[Atom], k: usize) -> QuerySpec {
        let cases = literal_sets(atoms, k)
            .into_iter()
            .map(|e| {
                let queries = literal_sets(atoms, k + 1 - e.len())
                    .into_iter()
                    .skip(1)
                    .map(|c| Formula::or(c.iter().map(Literal::to_formula).collect()))
                    .collect();
                (EvidenceSet::from_literals(&e), queries)
            })
            .collect();
        QuerySpec { cases }
    }

    /// Every literal and every pairwise conjunction and disjunction of
    /// literals, under each given evidence set.
    pub fn small_formulas(atoms: &[Atom], evidence: &[EvidenceSet]) -> QuerySpec {
        let lits: Vec<Formula> = literal_sets(atoms, 1)
            .into_iter()
            .skip(1)
            .map(|l| l[0].to_formula())
            .collect();
        let mut queries = lits.clone();
        for (i, a) in lits.iter().enumerate() {
            for b in &lits[i + 1..] {
                queries.push(Formula::and(vec![a.clone(), b.clone()]));
                queries.push(Formula::or(vec![a.clone(), b.clone()]));
            }
        }
        QuerySpec {
            cases: evidence.iter().map(|e| (e.clone(), queries.clone())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cases.iter().map(|(_, q)| q.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `⊢_MAP` on `m` against `⊢_poss` on `t` for every case in `spec`.
pub fn verify_map_poss(m: &Mln, t: &PossTheory, spec: &QuerySpec) -> Result<EquivalenceReport> {
    let map = MapEngine::new(m)?;
    let poss = PossEngine::new(t)?;
    let reports: Vec<EquivalenceReport> = spec
        .cases
        .par_iter()
        .map(|(e, queries)| -> Result<EquivalenceReport> {
            let mut r = EquivalenceReport::default();
            let infeasible = map.penalty(e)? == Penalty::Infinite;
            let mut ctx = match poss.context(e) {
                Ok(ctx) => Some(ctx),
                Err(Error::InconsistentEvidence) => None,
                Err(err) => return Err(err),
            };
            if infeasible || ctx.is_none() {
                r.check(infeasible == ctx.is_none(), || Mismatch {
                    evidence: e.to_string(),
                    query: "consistency".into(),
                    map: format!("feasible: {}", !infeasible),
                    poss: format!("consistent: {}", ctx.is_some()),
                });
                return Ok(r);
            }
            let ctx = ctx.as_mut().expect("checked above");
            for q in queries {
                let a = map.map_entails(e, q)?;
                let b = ctx.entails(q)?;
                r.check(a == b, || Mismatch {
                    evidence: e.to_string(),
                    query: q.to_string(),
                    map: a.to_string(),
                    poss: b.to_string(),
                });
            }
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let mut out = EquivalenceReport::default();
    reports.into_iter().for_each(|r| out.merge(r));
    Ok(out)
}

/// `⊢_poss` on two theories for every case in `spec`.
pub fn verify_poss_poss(t1: &PossTheory, t2: &PossTheory, spec: &QuerySpec) -> Result<EquivalenceReport> {
    let (p1, p2) = (PossEngine::new(t1)?, PossEngine::new(t2)?);
    let reports: Vec<EquivalenceReport> = spec
        .cases
        .par_iter()
        .map(|(e, queries)| -> Result<EquivalenceReport> {
            let mut r = EquivalenceReport::default();
            let ctx = |p: &PossEngine| match p.context(e) {
                Ok(c) => Ok(Some(c)),
                Err(Error::InconsistentEvidence) => Ok(None),
                Err(err) => Err(err),
            };
            match (ctx(&p1)?, ctx(&p2)?) {
                (Some(mut a), Some(mut b)) => {
                    for q in queries {
                        let (x, y) = (a.entails(q)?, b.entails(q)?);
                        r.check(x == y, || Mismatch {
                            evidence: e.to_string(),
                            query: q.to_string(),
                            map: x.to_string(),
                            poss: y.to_string(),
                        });
                    }
                }
                (a, b) => r.check(a.is_none() && b.is_none(), || Mismatch {
                    evidence: e.to_string(),
                    query: "consistency".into(),
                    map: a.is_some().to_string(),
                    poss: b.is_some().to_string(),
                }),
            }
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let mut out = EquivalenceReport::default();
    reports.into_iter().for_each(|r| out.merge(r));
    Ok(out)
}

/// Split `A -> B1 & ... & Bn` into one implication per conjunct and drop
/// tautologies.
pub fn split_consequents(t: &PossTheory) -> PossTheory {
    let mut out = PossTheory {
        formulas: Vec::new(),
        domain: t.domain.clone(),
        display: t.display,
    };
    for pf in &t.formulas {
        let parts = match &pf.formula {
            Formula::Implies(a, b) => match b.as_ref() {
                Formula::And(bs) => bs
                    .iter()
                    .map(|x| Formula::implies((**a).clone(), x.clone()))
                    .collect(),
                _ => vec![pf.formula.clone()],
            },
            f => vec![f.clone()],
        };
        for f in parts {
            if !crate::logic::equivalent(&f, &Formula::True) {
                out.push(f, pf.level);
            }
        }
    }
    out
}

fn level_set(t: &PossTheory) -> BTreeSet<Level> {
    t.formulas.iter().map(|f| f.level).collect()
}

/// Same level set, and every cut of one theory entails the matching cut of
/// the other. Both theories must be ground.
pub fn compare_theories(a: &PossTheory, b: &PossTheory) -> Result<EquivalenceReport> {
    let (a, b) = (split_consequents(a), split_consequents(b));
    let mut r = EquivalenceReport::default();
    let (la, lb) = (level_set(&a), level_set(&b));
    r.check(la == lb, || Mismatch {
        evidence: "-".into(),
        query: "level set".into(),
        map: format!("{la:?}"),
        poss: format!("{lb:?}"),
    });
    let (ea, eb) = (PossEngine::new(&a)?, PossEngine::new(&b)?);
    let levels: BTreeSet<Level> = la.union(&lb).copied().collect();
    let checks: Vec<(bool, Level, &Formula)> = levels
        .iter()
        .flat_map(|&l| {
            let from_b = b.lambda_cut(l).into_iter().map(move |f| (true, l, f));
            let from_a = a.lambda_cut(l).into_iter().map(move |f| (false, l, f));
            from_b.chain(from_a)
        })
        .collect();
    let results: Vec<(bool, Level, String, bool)> = checks
        .par_iter()
        .map(|&(a_entails, l, f)| {
            let engine = if a_entails { &ea } else { &eb };
            Ok((a_entails, l, f.to_string(), engine.entails_at(f, l)?))
        })
        .collect::<Result<_>>()?;
    for (a_entails, l, f, ok) in results {
        r.check(ok, || Mismatch {
            evidence: format!("cut {l}"),
            query: f,
            map: if a_entails { "first misses it" } else { "present" }.into(),
            poss: if a_entails { "present" } else { "second misses it" }.into(),
        });
    }
    Ok(r)
}

/// Grounded lifted theory against the default-rule theory of the grounded
/// MLN, both over the same working domain.
pub fn verify_lifted_matches_ground(
    m: &Mln,
    k: usize,
    domain_size: Option<usize>,
) -> Result<EquivalenceReport> {
    let opts = LiftedOptions {
        domain_size,
        ..LiftedOptions::default()
    };
    let lifted = transform_lifted(m, k, opts)?;
    let g1 = ground_theory(&lifted, &lifted.domain)?;
    let work = working_domain(&m.normalize(), k, domain_size)?;
    let gm = m.normalize().ground_over(&work)?;
    let g2 = transform_default(&gm, k, DefaultOptions::default())?;
    compare_theories(&g1, &g2)
}

/// Full and short blocking agree on every in-contract query.
pub fn verify_short_blocking(m: &Mln, k: usize, domain_size: usize) -> Result<EquivalenceReport> {
    let theory = |blocking| {
        let t = transform_lifted(
            m,
            k,
            LiftedOptions {
                blocking,
                domain_size: Some(domain_size),
                ..LiftedOptions::default()
            },
        )?;
        ground_theory(&t, &t.domain)
    };
    let (full, short) = (theory(Blocking::Full)?, theory(Blocking::Short)?);
    let work = working_domain(&m.normalize(), k, Some(domain_size))?;
    let atoms = m.normalize().ground_over(&work)?.universe().atoms().to_vec();
    verify_poss_poss(&full, &short, &QuerySpec::literal_clauses(&atoms, k))
}

/// Reproducible random ground MLN: up to `max_atoms` propositions and up to
/// `max_formulas` soft clauses of length at most 3 with weights in 1..=10.
pub fn random_mln(seed: u64, max_atoms: usize, max_formulas: usize) -> Mln {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_atoms.max(1));
    let count = rng.gen_range(1..=max_formulas.max(1));
    let mut m = Mln::new();
    for _ in 0..count {
        let len = rng.gen_range(1..=3.min(n));
        let mut chosen: Vec<usize> = Vec::new();
        while chosen.len() < len {
            let a = rng.gen_range(0..n);
            if !chosen.contains(&a) {
                chosen.push(a);
            }
        }
        let lits = chosen
            .into_iter()
            .map(|a| {
                let p = Formula::prop(&format!("p{a}"));
                if rng.gen_bool(0.5) {
                    p
                } else {
                    Formula::not(p)
                }
            })
            .collect();
        m = m.with_soft(rng.gen_range(1..=10), Formula::or(lits));
    }
    m
}

/// The seeded corpus used by the property suites.
pub fn random_corpus(seed: u64, count: usize) -> Vec<Mln> {
    (0..count as u64)
        .map(|i| random_mln(seed.wrapping_add(i), 6, 6))
        .collect()
}

/// Cross-check `⊢_MAP` against the default-rule theory (with and without
/// pruning) and the two theories against each other.
pub fn verify_default(m: &Mln, k: usize) -> Result<EquivalenceReport> {
    let atoms = m.universe().atoms().to_vec();
    let spec = QuerySpec::literal_clauses(&atoms, k);
    let pruned = transform_default(m, k, DefaultOptions::default())?;
    let plain = transform_default(m, k, DefaultOptions::unpruned())?;
    let mut r = verify_map_poss(m, &pruned, &spec)?;
    r.merge(verify_map_poss(m, &plain, &spec)?);
    r.merge(verify_poss_poss(&pruned, &plain, &spec)?);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: &str) -> Formula {
        Formula::prop(n)
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
    fn brute_penalty_of_a_world() {
        let pens = brute_penalties(&implications(), BRUTE_CAP).unwrap();
        let (w, pen) = pens
            .iter()
            .find(|(w, _)| w.to_string() == "{a, x, !y, b}")
            .expect("world present");
        assert_eq!(w.values().len(), 4);
        assert_eq!(*pen, Penalty::Finite(Rational64::from_integer(5)));
        assert_eq!(
            pens.iter().map(|(_, p)| *p).min(),
            Some(Penalty::Finite(Rational64::zero()))
        );
    }

    #[test]
    fn hard_violation_is_infinite() {
        let pens = brute_penalties(&Mln::new().with_hard(p("a")), BRUTE_CAP).unwrap();
        assert!(pens.iter().any(|(_, p)| *p == Penalty::Infinite));
    }

    #[test]
    fn exact_theory_matches_brute_force() {
        assert!(verify_prop1(&implications()).unwrap().passed());
        assert!(verify_ranking(&implications()).unwrap().passed());
        assert!(verify_prop1(&Mln::new()).unwrap().passed());
        for seed in 0..3 {
            let m = random_mln(seed, 4, 4);
            assert!(verify_prop1(&m).unwrap().passed());
        }
    }

    #[test]
    fn hard_rule_worlds_get_zero() {
        let m = Mln::new().with_hard(p("a")).with_soft(1, p("b"));
        assert!(verify_prop1(&m).unwrap().passed());
    }

    #[test]
    fn generator_is_reproducible() {
        assert_eq!(random_mln(7, 6, 6), random_mln(7, 6, 6));
    }

    #[test]
    fn split_drops_tautologies() {
        let mut t = PossTheory::new();
        t.push(
            Formula::implies(p("a"), Formula::and(vec![p("b"), p("c")])),
            Level::finite(0),
        );
        t.push(Formula::implies(p("a"), Formula::True), Level::finite(1));
        assert_eq!(split_consequents(&t).len(), 2);
    }
}
