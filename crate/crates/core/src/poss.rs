//! Possibilistic logic: stratified theories, cuts, consistency level and
//! inconsistency-tolerant entailment.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::logic::{evaluate, ground, to_cnf, Encoder, Formula, TypedDomain, Universe, World};
use crate::map::{EvidenceSet, Penalty};
use crate::sat::{Lit, Solver};

/// Certainty stratum. Finite levels are indexed by penalty; `Bottom` sits
/// strictly below every finite level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Bottom,
    Finite(Rational64),
    Hard,
}

impl Level {
    pub fn finite(p: i64) -> Self {
        Level::Finite(Rational64::from_integer(p))
    }

    pub fn from_penalty(p: Penalty) -> Self {
        match p {
            Penalty::Finite(x) => Level::Finite(x),
            Penalty::Infinite => Level::Hard,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Bottom => f.write_str("lbot"),
            Level::Finite(p) => write!(f, "l{p}"),
            Level::Hard => f.write_str("1"),
        }
    }
}

/// Maps a level to a weight in [0, 1]: `(K + p) / L` for finite `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DisplayParams {
    pub k: Rational64,
    pub l: Rational64,
}

impl Default for DisplayParams {
    fn default() -> Self {
        DisplayParams {
            k: Rational64::one(),
            l: Rational64::from_integer(2),
        }
    }
}

impl DisplayParams {
    pub fn new(k: Rational64, l: Rational64) -> Self {
        DisplayParams { k, l }
    }

    /// `L = K + total + 1`, which keeps every finite weight below 1.
    pub fn for_total(k: i64, total_weight: Rational64) -> Self {
        let k = Rational64::from_integer(k);
        DisplayParams {
            k,
            l: k + total_weight + Rational64::one(),
        }
    }

    pub fn weight(&self, level: Level) -> Rational64 {
        match level {
            Level::Bottom => Rational64::zero(),
            Level::Finite(p) => (self.k + p) / self.l,
            Level::Hard => Rational64::one(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PossFormula {
    pub formula: Formula,
    pub level: Level,
}

impl PossFormula {
    pub fn new(formula: Formula, level: Level) -> Self {
        PossFormula { formula, level }
    }
}

/// A set of weighted formulas, possibly first-order over `domain`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PossTheory {
    pub formulas: Vec<PossFormula>,
    pub domain: TypedDomain,
    pub display: DisplayParams,
}

impl PossTheory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add unless the identical pair is already present.
    pub fn push(&mut self, formula: Formula, level: Level) {
        let pf = PossFormula::new(formula, level);
        if !self.formulas.contains(&pf) {
            self.formulas.push(pf);
        }
    }

    /// Add, keeping only the highest level for syntactically equal formulas.
    pub fn push_max(&mut self, formula: Formula, level: Level) {
        match self.formulas.iter_mut().find(|pf| pf.formula == formula) {
            Some(pf) => pf.level = pf.level.max(level),
            None => self.formulas.push(PossFormula::new(formula, level)),
        }
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    /// Distinct levels in ascending order.
    pub fn levels(&self) -> Vec<Level> {
        let mut ls: Vec<Level> = self.formulas.iter().map(|f| f.level).collect();
        ls.sort();
        ls.dedup();
        ls
    }

    pub fn lambda_cut(&self, level: Level) -> Vec<&Formula> {
        self.formulas
            .iter()
            .filter(|f| f.level >= level)
            .map(|f| &f.formula)
            .collect()
    }

    pub fn is_ground(&self) -> bool {
        self.formulas.iter().all(|f| f.formula.is_ground())
    }

    /// Replace each formula by its groundings over `domain`, keeping levels.
    pub fn ground_over(&self, domain: &TypedDomain) -> Result<PossTheory> {
        let mut out = PossTheory {
            formulas: Vec::new(),
            domain: domain.clone(),
            display: self.display,
        };
        for pf in &self.formulas {
            for g in ground(&pf.formula, domain)? {
                out.push(g, pf.level);
            }
        }
        Ok(out)
    }

    pub fn ground(&self) -> Result<PossTheory> {
        self.ground_over(&self.domain)
    }

    pub fn universe(&self) -> Universe {
        let mut u = Universe::new();
        for pf in &self.formulas {
            u.extend_from(&pf.formula);
        }
        u
    }

    /// Possibility of every world over the theory's atoms: one minus the
    /// largest weight among violated formulas.
    pub fn least_specific_model(&self, cap: usize) -> Result<Vec<(World, Rational64)>> {
        let g = if self.is_ground() {
            self.clone()
        } else {
            self.ground()?
        };
        let u = std::sync::Arc::new(g.universe());
        if u.len() > cap {
            return Err(Error::CapExceeded {
                what: "atom universe",
                found: u.len(),
                cap,
            });
        }
        let n = u.len();
        let mut out = Vec::with_capacity(1 << n);
        for m in 0..1u64 << n {
            let w = World::new(u.clone(), (0..n).map(|i| m >> i & 1 == 1).collect())?;
            let mut worst = Rational64::zero();
            for pf in &g.formulas {
                if !evaluate(&pf.formula, &w)? {
                    worst = worst.max(self.display.weight(pf.level));
                }
            }
            out.push((w, Rational64::one() - worst));
        }
        Ok(out)
    }
}

/// SAT-backed reasoning over a ground theory. Each finite level has a
/// selector variable; a cut is selected by assuming the selectors of every
/// level at or above it.
#[derive(Clone, Debug)]
pub struct PossEngine {
    solver: Solver,
    enc: Encoder,
    levels: Vec<Level>,
    selectors: BTreeMap<Level, Lit>,
    has_hard: bool,
}

impl PossEngine {
    pub fn new(t: &PossTheory) -> Result<Self> {
        let g;
        let t = if t.is_ground() {
            t
        } else {
            g = t.ground()?;
            &g
        };
        let mut enc = Encoder::new();
        let levels = t.levels();
        let mut selectors = BTreeMap::new();
        for &l in &levels {
            if l != Level::Hard {
                selectors.insert(l, enc.fresh().lit(true));
            }
        }
        let mut solver = Solver::new();
        let mut has_hard = false;
        for pf in &t.formulas {
            let sel = selectors.get(&pf.level).copied();
            has_hard |= sel.is_none();
            for mut c in to_cnf(&pf.formula, &mut enc)? {
                c.extend(sel.map(|s| !s));
                solver.add_clause(&c);
            }
        }
        solver.ensure_vars(enc.num_vars());
        Ok(PossEngine {
            solver,
            enc,
            levels,
            selectors,
            has_hard,
        })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    fn cut_assumptions(&self, level: Level) -> Vec<Lit> {
        self.selectors.range(level..).map(|(_, &s)| s).collect()
    }

    /// Whether the cut at `level` entails `alpha`.
    pub fn entails_at(&self, alpha: &Formula, level: Level) -> Result<bool> {
        let mut ctx = PossContext {
            solver: self.solver.clone(),
            enc: self.enc.clone(),
            level,
            assumptions: self.cut_assumptions(level),
        };
        ctx.entails(alpha)
    }

    /// Lowest occurring level whose cut is satisfiable, or `None` when even
    /// the top cut is not.
    pub fn consistency_level(&self) -> Option<Level> {
        self.clone().lowest_consistent(false)
    }

    fn lowest_consistent(&mut self, with_evidence: bool) -> Option<Level> {
        let mut candidates = self.levels.clone();
        if with_evidence && !self.has_hard {
            candidates.push(Level::Hard);
        }
        if candidates.is_empty() {
            return Some(Level::Bottom);
        }
        let sat = |s: &mut Self, l: Level| {
            let a = s.cut_assumptions(l);
            s.solver.solve_assuming(&a).is_sat()
        };
        let top = *candidates.last().unwrap();
        if !sat(self, top) {
            return None;
        }
        let (mut lo, mut hi) = (0, candidates.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if sat(self, candidates[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(candidates[lo])
    }

    /// Add the evidence at the hard level and locate the consistency level.
    pub fn context(&self, e: &EvidenceSet) -> Result<PossContext> {
        let mut me = self.clone();
        for f in &e.formulas {
            for c in to_cnf(f, &mut me.enc)? {
                me.solver.add_clause(&c);
            }
        }
        me.solver.ensure_vars(me.enc.num_vars());
        let level = me
            .lowest_consistent(!e.is_empty())
            .ok_or(Error::InconsistentEvidence)?;
        let assumptions = me.cut_assumptions(level);
        Ok(PossContext {
            solver: me.solver,
            enc: me.enc,
            level,
            assumptions,
        })
    }

    pub fn poss_entails(&self, e: &EvidenceSet, alpha: &Formula) -> Result<bool> {
        self.context(e)?.entails(alpha)
    }
}

/// A theory plus evidence with its consistency level fixed; answers
/// entailment queries against the cut at that level.
#[derive(Clone, Debug)]
pub struct PossContext {
    solver: Solver,
    enc: Encoder,
    level: Level,
    assumptions: Vec<Lit>,
}

impl PossContext {
    pub fn level(&self) -> Level {
        self.level
    }

    pub fn entails(&mut self, alpha: &Formula) -> Result<bool> {
        let z = self.enc.fresh().lit(true);
        let clauses = to_cnf(&Formula::not(alpha.clone()), &mut self.enc)?;
        self.solver.ensure_vars(self.enc.num_vars());
        for mut c in clauses {
            c.push(!z);
            self.solver.add_clause(&c);
        }
        let mut a = self.assumptions.clone();
        a.push(z);
        Ok(!self.solver.solve_assuming(&a).is_sat())
    }

    /// Whether the cut is satisfiable together with `alpha`.
    pub fn consistent_with(&mut self, alpha: &Formula) -> Result<bool> {
        self.entails(&Formula::not(alpha.clone())).map(|b| !b)
    }
}
