//! Complete propositional satisfiability with model enumeration.
//!
//! A DPLL solver with two watched literals and chronological backtracking.
//! Branching always picks the lowest unassigned variable and tries `false`
//! first, so results are reproducible.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit(self.0 * 2 + u32::from(!positive))
    }
}

/// A literal: variable plus sign, packed as `2 * var + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Self {
        var.lit(positive)
    }

    pub fn var(self) -> Var {
        Var(self.0 / 2)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn code(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.is_positive() {
            f.write_str("-")?;
        }
        write!(f, "{}", self.var().0)
    }
}

/// A clause set over indexed variables. Only projectable variables are
/// reported by model enumeration; the rest are auxiliary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfInstance {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
    pub projectable: Vec<bool>,
}

impl CnfInstance {
    pub fn new(num_vars: usize) -> Self {
        CnfInstance {
            num_vars,
            clauses: Vec::new(),
            projectable: vec![true; num_vars],
        }
    }

    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        for l in &clause {
            if l.var().index() >= self.num_vars {
                self.num_vars = l.var().index() + 1;
                self.projectable.resize(self.num_vars, false);
            }
        }
        self.clauses.push(clause);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// A satisfying assignment, indexed by variable.
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// Outcome of bounded model enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Enumeration {
    /// Every projected model was found.
    Complete(Vec<Vec<bool>>),
    /// More models exist than the limit; the ones found are returned.
    LimitExceeded(Vec<Vec<bool>>),
}

impl Enumeration {
    pub fn models(&self) -> &[Vec<bool>] {
        match self {
            Enumeration::Complete(m) | Enumeration::LimitExceeded(m) => m,
        }
    }
}

pub fn solve(c: &CnfInstance) -> SatResult {
    let mut s = Solver::new();
    s.ensure_vars(c.num_vars);
    for cl in &c.clauses {
        s.add_clause(cl);
    }
    s.solve()
}

/// All models projected onto the projectable variables, in lexicographic
/// order (false < true). `limit = None` means unbounded.
pub fn enumerate_models(c: &CnfInstance, limit: Option<usize>) -> Enumeration {
    let mut s = Solver::new();
    s.ensure_vars(c.num_vars);
    for cl in &c.clauses {
        s.add_clause(cl);
    }
    let proj: Vec<usize> = (0..c.num_vars).filter(|&v| c.projectable[v]).collect();
    let mut models = Vec::new();
    let mut exceeded = false;
    while let SatResult::Sat(m) = s.solve() {
        if limit.is_some_and(|l| models.len() >= l) {
            exceeded = true;
            break;
        }
        let projected: Vec<bool> = proj.iter().map(|&v| m[v]).collect();
        let block: Vec<Lit> = proj.iter().map(|&v| Var(v as u32).lit(!m[v])).collect();
        models.push(projected);
        if block.is_empty() {
            break;
        }
        s.add_clause(&block);
    }
    models.sort();
    if exceeded {
        Enumeration::LimitExceeded(models)
    } else {
        Enumeration::Complete(models)
    }
}

#[derive(Clone, Copy, Debug)]
struct Frame {
    trail_len: usize,
    decision: Lit,
    flipped: bool,
}

/// Incremental solver: clauses may be added between calls to [`Solver::solve`].
#[derive(Clone, Debug, Default)]
pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<Option<bool>>,
    trail: Vec<Lit>,
    frames: Vec<Frame>,
    qhead: usize,
    root_units: Vec<Lit>,
    inconsistent: bool,
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.assigns.len() as u32);
        self.ensure_vars(self.assigns.len() + 1);
        v
    }

    pub fn ensure_vars(&mut self, n: usize) {
        if n > self.assigns.len() {
            self.assigns.resize(n, None);
            self.watches.resize(2 * n, Vec::new());
        }
    }

    fn value(&self, l: Lit) -> Option<bool> {
        self.assigns[l.var().index()].map(|v| v == l.is_positive())
    }

    fn assign(&mut self, l: Lit) {
        self.assigns[l.var().index()] = Some(l.is_positive());
        self.trail.push(l);
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let l = self.trail.pop().unwrap();
            self.assigns[l.var().index()] = None;
        }
        self.qhead = self.qhead.min(len);
    }

    fn reset(&mut self) {
        self.frames.clear();
        self.undo_to(0);
        self.qhead = 0;
    }

    /// Add a clause. Duplicate literals are merged and tautologies dropped.
    pub fn add_clause(&mut self, clause: &[Lit]) {
        self.reset();
        let mut c: Vec<Lit> = clause.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0].var() == w[1].var()) {
            return;
        }
        if let Some(max) = c.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        match c.len() {
            0 => self.inconsistent = true,
            1 => self.root_units.push(c[0]),
            _ => {
                let idx = self.clauses.len();
                self.watches[(!c[0]).code()].push(idx);
                self.watches[(!c[1]).code()].push(idx);
                self.clauses.push(c);
            }
        }
    }

    /// Unit propagation; returns false on conflict.
    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            // Clauses watching !p are those whose watched literal just became false.
            let mut ws = std::mem::take(&mut self.watches[p.code()]);
            let mut i = 0;
            let mut conflict = false;
            while i < ws.len() {
                let ci = ws[i];
                let false_lit = !p;
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if self.assigns[first.var().index()].map(|v| v == first.is_positive()) == Some(true) {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    if self.assigns[l.var().index()].map(|v| v == l.is_positive()) != Some(false) {
                        clause.swap(1, k);
                        let nw = (!clause[1]).code();
                        self.watches[nw].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    ws.swap_remove(i);
                    continue;
                }
                match self.value(first) {
                    None => {
                        self.assign(first);
                        i += 1;
                    }
                    Some(false) => {
                        conflict = true;
                        break;
                    }
                    Some(true) => i += 1,
                }
            }
            let rest = std::mem::take(&mut self.watches[p.code()]);
            ws.extend(rest);
            self.watches[p.code()] = ws;
            if conflict {
                return false;
            }
        }
        true
    }

    pub fn solve(&mut self) -> SatResult {
        self.solve_assuming(&[])
    }

    /// Solve with the given literals forced true for this call only.
    pub fn solve_assuming(&mut self, assumptions: &[Lit]) -> SatResult {
        self.reset();
        if self.inconsistent {
            return SatResult::Unsat;
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        let roots: Vec<Lit> = self.root_units.iter().chain(assumptions).copied().collect();
        for l in roots {
            match self.value(l) {
                Some(true) => {}
                Some(false) => return SatResult::Unsat,
                None => self.assign(l),
            }
        }
        if !self.propagate() {
            return SatResult::Unsat;
        }
        let result = self.search();
        self.reset();
        result
    }

    fn search(&mut self) -> SatResult {
        let mut next_var = 0usize;
        loop {
            if !self.propagate() {
                // Chronological backtracking to the latest unflipped decision.
                loop {
                    let Some(frame) = self.frames.pop() else {
                        return SatResult::Unsat;
                    };
                    if !frame.flipped {
                        self.undo_to(frame.trail_len);
                        let flipped = !frame.decision;
                        self.frames.push(Frame {
                            trail_len: frame.trail_len,
                            decision: flipped,
                            flipped: true,
                        });
                        self.assign(flipped);
                        next_var = 0;
                        break;
                    }
                }
                continue;
            }
            while next_var < self.assigns.len() && self.assigns[next_var].is_some() {
                next_var += 1;
            }
            if next_var == self.assigns.len() {
                return SatResult::Sat(self.assigns.iter().map(|v| v.unwrap_or(false)).collect());
            }
            let decision = Var(next_var as u32).lit(false);
            self.frames.push(Frame {
                trail_len: self.trail.len(),
                decision,
                flipped: false,
            });
            self.assign(decision);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lit(v: u32, pos: bool) -> Lit {
        Var(v).lit(pos)
    }

    fn instance(n: usize, clauses: &[&[(u32, bool)]]) -> CnfInstance {
        let mut c = CnfInstance::new(n);
        for cl in clauses {
            c.add_clause(cl.iter().map(|&(v, p)| lit(v, p)).collect());
        }
        c
    }

    #[test]
    fn unit_clause_is_sat() {
        assert_eq!(solve(&instance(1, &[&[(0, true)]])), SatResult::Sat(vec![true]));
    }

    #[test]
    fn contradictory_units_are_unsat() {
        assert_eq!(
            solve(&instance(1, &[&[(0, true)], &[(0, false)]])),
            SatResult::Unsat
        );
    }

    #[test]
    fn empty_clause_is_unsat() {
        assert_eq!(solve(&instance(2, &[&[]])), SatResult::Unsat);
    }

    #[test]
    fn disjunction_has_three_models() {
        let e = enumerate_models(&instance(2, &[&[(0, true), (1, true)]]), None);
        assert_eq!(
            e,
            Enumeration::Complete(vec![vec![false, true], vec![true, false], vec![true, true]])
        );
    }

    #[test]
    fn unsat_enumerates_nothing() {
        let e = enumerate_models(&instance(1, &[&[(0, true)], &[(0, false)]]), None);
        assert_eq!(e, Enumeration::Complete(vec![]));
    }

    #[test]
    fn limit_is_reported() {
        let e = enumerate_models(&instance(3, &[]), Some(5));
        assert!(matches!(e, Enumeration::LimitExceeded(ref m) if m.len() == 5));
        let e = enumerate_models(&instance(3, &[]), Some(8));
        assert!(matches!(e, Enumeration::Complete(ref m) if m.len() == 8));
    }

    #[test]
    fn projection_hides_auxiliary_vars() {
        let mut c = instance(1, &[]);
        // aux var 1 free: two total models per projected one.
        c.add_clause(vec![lit(0, true), lit(1, true), lit(1, false)]);
        c.num_vars = 2;
        c.projectable = vec![true, false];
        let e = enumerate_models(&c, None);
        assert_eq!(e.models(), &[vec![false], vec![true]]);
    }

    #[test]
    fn assumptions_are_temporary() {
        let mut s = Solver::new();
        s.add_clause(&[lit(0, true), lit(1, true)]);
        assert_eq!(
            s.solve_assuming(&[lit(0, false), lit(1, false)]),
            SatResult::Unsat
        );
        assert!(s.solve().is_sat());
        assert_eq!(
            s.solve_assuming(&[lit(0, false)]),
            SatResult::Sat(vec![false, true])
        );
    }

    fn brute_force(n: usize, clauses: &[Vec<Lit>]) -> Vec<Vec<bool>> {
        (0..1u32 << n)
            .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect::<Vec<bool>>())
            .filter(|w| {
                clauses
                    .iter()
                    .all(|c| c.iter().any(|l| w[l.var().index()] == l.is_positive()))
            })
            .collect()
    }

    fn random_cnf() -> impl Strategy<Value = (usize, Vec<Vec<Lit>>)> {
        (1usize..=9).prop_flat_map(|n| {
            let lit = (0..n as u32, any::<bool>()).prop_map(|(v, p)| Var(v).lit(p));
            let clause = prop::collection::vec(lit, 0..=4);
            (Just(n), prop::collection::vec(clause, 0..40))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn agrees_with_truth_table((n, clauses) in random_cnf()) {
            let mut c = CnfInstance::new(n);
            for cl in &clauses {
                c.add_clause(cl.clone());
            }
            let mut expected = brute_force(n, &clauses);
            expected.sort();
            match solve(&c) {
                SatResult::Sat(m) => {
                    prop_assert!(!expected.is_empty());
                    prop_assert!(clauses.iter().all(|cl| cl.iter().any(|l| m[l.var().index()] == l.is_positive())));
                }
                SatResult::Unsat => prop_assert!(expected.is_empty()),
            }
            let e = enumerate_models(&c, None);
            prop_assert_eq!(e, Enumeration::Complete(expected));
        }
    }
}
