use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use log::trace;
use num_integer::Integer;
use num_rational::Rational64;

use super::search::{occurrences, run, Constraint, Mode, Outcome, Problem};
use super::{EvidenceSet, Mln, Penalty};
use crate::error::{Error, Result};
use crate::logic::{Atom, Formula, GuardedAtom, Literal, Nnf, Universe, World};

type Assignment = Vec<(u32, bool)>;

/// Exact MAP inference over a grounded, normalized MLN.
///
/// Weights are scaled to integers by the least common denominator. Optimal
/// costs of literal evidence sets are memoized.
#[derive(Debug)]
pub struct MapEngine {
    mln: Mln,
    universe: Arc<Universe>,
    scale: i64,
    cons: Vec<Constraint>,
    occ: Vec<Vec<u32>>,
    memo: Mutex<HashMap<Assignment, Option<i64>>>,
}

/// Evidence and query compiled against the engine's universe. Atoms outside
/// the universe get fresh indices after it.
struct Query {
    assumptions: Vec<(u32, bool)>,
    extra: Vec<Constraint>,
    extra_atoms: Vec<Atom>,
    literal_only: bool,
}

impl MapEngine {
    /// Ground (if needed) and normalize `m`, then index it.
    pub fn new(m: &Mln) -> Result<Self> {
        let g = if m.is_ground() { m.clone() } else { m.ground()? }.normalize();
        let universe = Arc::new(g.universe());
        let scale = g.soft.iter().fold(1i64, |acc, w| acc.lcm(w.weight.denom()));
        let index = |a: &GuardedAtom| -> Result<u32> {
            match a {
                GuardedAtom::Atom(a) => Ok(universe.get(a).expect("universe covers the MLN") as u32),
                GuardedAtom::Distinct(_) => Err(Error::NotGround("alldiff".into())),
            }
        };
        let mut cons = Vec::with_capacity(g.soft.len() + g.hard.len());
        for w in &g.soft {
            let nnf = lower(&w.formula.to_nnf()?, &index)?;
            let scaled = w.weight * scale;
            cons.push(Constraint::new(nnf, Some(*scaled.numer())));
        }
        for h in &g.hard {
            cons.push(Constraint::new(lower(&h.to_nnf()?, &index)?, None));
        }
        let occ = occurrences(&cons, universe.len(), 0);
        Ok(MapEngine {
            mln: g,
            universe,
            scale,
            cons,
            occ,
            memo: Mutex::new(HashMap::new()),
        })
    }

    /// The ground normalized MLN.
    pub fn mln(&self) -> &Mln {
        &self.mln
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    fn query(&self, formulas: &[&Formula]) -> Result<Query> {
        let mut q = Query {
            assumptions: Vec::new(),
            extra: Vec::new(),
            extra_atoms: Vec::new(),
            literal_only: true,
        };
        for f in formulas {
            let nnf = f.to_nnf()?;
            let mut err = None;
            let lowered = nnf.map_atoms(&mut |a| match a {
                GuardedAtom::Atom(a) if a.is_ground() => self.atom_index(a, &mut q.extra_atoms),
                other => {
                    err = Some(Error::NotGround(format!("{other:?}")));
                    0
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            match lowered {
                Nnf::Lit(v, s) => q.assumptions.push((v, s)),
                Nnf::True => {}
                other => {
                    q.literal_only = false;
                    q.extra.push(Constraint::new(Nnf::and(vec![other]), None));
                }
            }
        }
        Ok(q)
    }

    fn atom_index(&self, a: &Atom, extra: &mut Vec<Atom>) -> u32 {
        if let Some(i) = self.universe.get(a) {
            return i as u32;
        }
        let pos = extra.iter().position(|b| b == a).unwrap_or_else(|| {
            extra.push(a.clone());
            extra.len() - 1
        });
        (self.universe.len() + pos) as u32
    }

    fn solve(&self, q: &Query, extra_assumption: Option<(u32, bool)>, mode: Mode) -> Outcome {
        let num_vars = self.universe.len() + q.extra_atoms.len();
        let extra_occ = occurrences(&q.extra, num_vars, self.cons.len());
        let mut assumptions = q.assumptions.clone();
        assumptions.extend(extra_assumption);
        run(
            Problem {
                num_vars,
                base: &self.cons,
                base_occ: &self.occ,
                extra: &q.extra,
                extra_occ: &extra_occ,
            },
            &assumptions,
            mode,
        )
    }

    /// Minimum scaled violated weight under the query, or `None` when no
    /// world satisfies it together with the hard rules.
    fn min_cost(&self, q: &Query) -> Option<i64> {
        let key = q.literal_only.then(|| {
            let mut k = q.assumptions.clone();
            k.sort_unstable();
            k.dedup();
            k
        });
        if let Some(k) = &key {
            if let Some(v) = self.memo.lock().unwrap().get(k) {
                return *v;
            }
        }
        let v = self.solve(q, None, Mode::Optimize).best.map(|b| b.0);
        if let Some(k) = key {
            self.memo.lock().unwrap().insert(k, v);
        }
        v
    }

    fn base_cost(&self) -> Result<i64> {
        let q = self.query(&[])?;
        self.min_cost(&q).ok_or(Error::InconsistentEvidence)
    }

    fn evidence_cost(&self, e: &EvidenceSet) -> Result<(Query, i64)> {
        let refs: Vec<&Formula> = e.formulas.iter().collect();
        let q = self.query(&refs)?;
        let c = self.min_cost(&q).ok_or(Error::InconsistentEvidence)?;
        Ok((q, c))
    }

    fn unscale(&self, c: i64) -> Rational64 {
        Rational64::new(c, self.scale)
    }

    /// Largest total weight of satisfied soft formulas over worlds meeting
    /// the evidence and hard rules; `None` when there is no such world.
    pub fn sat_weight(&self, e: &EvidenceSet) -> Result<Option<Rational64>> {
        let refs: Vec<&Formula> = e.formulas.iter().collect();
        let q = self.query(&refs)?;
        Ok(self
            .min_cost(&q)
            .map(|c| self.mln.total_weight() - self.unscale(c)))
    }

    pub fn penalty(&self, e: &EvidenceSet) -> Result<Penalty> {
        let base = self.base_cost()?;
        let refs: Vec<&Formula> = e.formulas.iter().collect();
        let q = self.query(&refs)?;
        Ok(match self.min_cost(&q) {
            Some(c) => Penalty::Finite(self.unscale(c - base)),
            None => Penalty::Infinite,
        })
    }

    pub fn penalty_of_literals(&self, lits: &[Literal]) -> Result<Penalty> {
        self.penalty(&EvidenceSet::from_literals(lits))
    }

    /// Penalty of a single formula taken as evidence.
    pub fn penalty_of(&self, f: &Formula) -> Result<Penalty> {
        self.penalty(&EvidenceSet::new(vec![f.clone()]))
    }

    /// Whether `q` holds in every most probable world satisfying `e`.
    pub fn map_entails(&self, e: &EvidenceSet, q: &Formula) -> Result<bool> {
        let (_, cost) = self.evidence_cost(e)?;
        let neg = q.negated();
        let mut refs: Vec<&Formula> = e.formulas.iter().collect();
        refs.push(&neg);
        let with_neg = self.query(&refs)?;
        let counter = self.solve(&with_neg, None, Mode::FindWithin(cost));
        trace!(
            "map_entails {e} |- {q}: counterexample {:?}",
            counter.best.is_some()
        );
        Ok(counter.best.is_none())
    }

    fn world_universe(&self, q: &Query) -> Arc<Universe> {
        if q.extra_atoms.is_empty() {
            return self.universe.clone();
        }
        let mut u = (*self.universe).clone();
        for a in &q.extra_atoms {
            u.insert(a.clone());
        }
        Arc::new(u)
    }

    /// Every optimal world over the atoms of the MLN and the evidence, in
    /// lexicographic order.
    pub fn most_probable_worlds(&self, e: &EvidenceSet) -> Result<Vec<World>> {
        let (q, cost) = self.evidence_cost(e)?;
        let mut worlds = self.solve(&q, None, Mode::EnumerateWithin(cost)).worlds;
        worlds.sort();
        let u = self.world_universe(&q);
        worlds.into_iter().map(|w| World::new(u.clone(), w)).collect()
    }

    /// Literals over `atoms` true in every optimal world: a backbone
    /// computation that flips one candidate at a time.
    pub fn entailed_literals(&self, e: &EvidenceSet, atoms: &[Atom]) -> Result<BTreeSet<Literal>> {
        let (mut q, cost) = self.evidence_cost(e)?;
        let idx: Vec<u32> = atoms
            .iter()
            .map(|a| self.atom_index(a, &mut q.extra_atoms))
            .collect();
        let w0 = self
            .solve(&q, None, Mode::FindWithin(cost))
            .best
            .expect("optimum is attainable")
            .1;
        let mut flexible = vec![false; w0.len()];
        for &v in &idx {
            if flexible[v as usize] {
                continue;
            }
            let flipped = (v, !w0[v as usize]);
            if let Some((_, w)) = self.solve(&q, Some(flipped), Mode::FindWithin(cost)).best {
                for (i, f) in flexible.iter_mut().enumerate() {
                    *f |= w[i] != w0[i];
                }
            }
        }
        Ok(atoms
            .iter()
            .zip(&idx)
            .filter(|(_, &v)| !flexible[v as usize])
            .map(|(a, &v)| Literal {
                atom: a.clone(),
                positive: w0[v as usize],
            })
            .collect())
    }

    /// Distinct sets of soft formulas (indices into the ground MLN) satisfied
    /// by the optimal worlds, sorted.
    pub fn cons_sets(&self, e: &EvidenceSet) -> Result<Vec<BTreeSet<usize>>> {
        let (q, cost) = self.evidence_cost(e)?;
        let worlds = self.solve(&q, None, Mode::EnumerateWithin(cost)).worlds;
        let mut out = BTreeSet::new();
        for w in worlds {
            let sat: BTreeSet<usize> = (0..self.mln.soft.len())
                .filter(|&i| self.cons[i].nnf.eval3(&|a: &u32| Some(w[*a as usize])) == Some(true))
                .collect();
            out.insert(sat);
        }
        Ok(out.into_iter().collect())
    }
}

fn lower(n: &Nnf<GuardedAtom>, index: &impl Fn(&GuardedAtom) -> Result<u32>) -> Result<Nnf<u32>> {
    Ok(match n {
        Nnf::True => Nnf::True,
        Nnf::False => Nnf::False,
        Nnf::Lit(a, s) => Nnf::Lit(index(a)?, *s),
        Nnf::And(v) => Nnf::and(v.iter().map(|c| lower(c, index)).collect::<Result<_>>()?),
        Nnf::Or(v) => Nnf::or(v.iter().map(|c| lower(c, index)).collect::<Result<_>>()?),
    })
}
