//! Branch and bound over truth assignments.
//!
//! Constraints are NNF formulas over variable indices. Each assignment
//! re-evaluates only the constraints mentioning the variable, three-valued.
//! Hard clauses propagate units.

use crate::logic::Nnf;

#[derive(Clone, Debug)]
pub(crate) struct Constraint {
    pub nnf: Nnf<u32>,
    /// `None` for hard constraints.
    pub weight: Option<i64>,
    clause: Option<Vec<(u32, bool)>>,
}

impl Constraint {
    pub fn new(nnf: Nnf<u32>, weight: Option<i64>) -> Self {
        let clause = if weight.is_none() { nnf.as_clause() } else { None };
        Constraint { nnf, weight, clause }
    }

    fn vars(&self) -> Vec<u32> {
        let mut vs = Vec::new();
        self.nnf.visit_lits(&mut |a, _| vs.push(*a));
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

/// Occurrence lists for a constraint list; ids start at `offset`.
pub(crate) fn occurrences(cons: &[Constraint], num_vars: usize, offset: usize) -> Vec<Vec<u32>> {
    let mut occ = vec![Vec::new(); num_vars];
    for (i, c) in cons.iter().enumerate() {
        for v in c.vars() {
            occ[v as usize].push((i + offset) as u32);
        }
    }
    occ
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Minimum cost.
    Optimize,
    /// Stop at the first world with cost at most the bound.
    FindWithin(i64),
    /// Every world with cost at most the bound.
    EnumerateWithin(i64),
}

#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub best: Option<(i64, Vec<bool>)>,
    pub worlds: Vec<Vec<bool>>,
}

pub(crate) struct Problem<'a> {
    pub num_vars: usize,
    pub base: &'a [Constraint],
    pub base_occ: &'a [Vec<u32>],
    pub extra: &'a [Constraint],
    pub extra_occ: &'a [Vec<u32>],
}

struct Search<'a> {
    p: Problem<'a>,
    value: Vec<i8>,
    status: Vec<i8>,
    undecided: usize,
    cost: i64,
    trail: Vec<u32>,
    changed: Vec<u32>,
    mode: Mode,
    out: Outcome,
    phase: Vec<bool>,
    done: bool,
}

type Mark = (usize, usize, i64);

impl<'a> Search<'a> {
    fn con(&self, id: u32) -> &'a Constraint {
        let id = id as usize;
        if id < self.p.base.len() {
            &self.p.base[id]
        } else {
            &self.p.extra[id - self.p.base.len()]
        }
    }

    fn occ(&self, v: usize) -> impl Iterator<Item = &'a u32> {
        let base: &'a [u32] = self.p.base_occ.get(v).map_or(&[], |o| o.as_slice());
        let extra: &'a [u32] = self.p.extra_occ.get(v).map_or(&[], |o| o.as_slice());
        base.iter().chain(extra)
    }

    fn mark(&self) -> Mark {
        (self.trail.len(), self.changed.len(), self.cost)
    }

    fn undo(&mut self, (t, c, cost): Mark) {
        for v in self.trail.drain(t..) {
            self.value[v as usize] = -1;
        }
        for id in self.changed.drain(c..) {
            self.status[id as usize] = -1;
            self.undecided += 1;
        }
        self.cost = cost;
    }

    fn decide(&mut self, id: u32, truth: bool) -> bool {
        self.status[id as usize] = i8::from(truth);
        self.changed.push(id);
        self.undecided -= 1;
        if truth {
            return true;
        }
        match self.con(id).weight {
            None => false,
            Some(w) => {
                self.cost += w;
                true
            }
        }
    }

    /// Assign and propagate; false on a violated hard constraint.
    fn assign(&mut self, v: u32, val: bool) -> bool {
        let mut queue = vec![(v, val)];
        while let Some((v, val)) = queue.pop() {
            match self.value[v as usize] {
                -1 => {}
                x => {
                    if (x == 1) == val {
                        continue;
                    }
                    return false;
                }
            }
            self.value[v as usize] = i8::from(val);
            self.trail.push(v);
            for &id in self.occ(v as usize) {
                if self.status[id as usize] != -1 {
                    continue;
                }
                let c = self.con(id);
                let value = &self.value;
                match c.nnf.eval3(&|a: &u32| match value[*a as usize] {
                    -1 => None,
                    x => Some(x == 1),
                }) {
                    Some(t) => {
                        if !self.decide(id, t) {
                            return false;
                        }
                    }
                    None => {
                        if let Some(cl) = &c.clause {
                            let mut open = cl.iter().filter(|(a, _)| self.value[*a as usize] == -1);
                            if let (Some(&(a, s)), None) = (open.next(), open.next()) {
                                queue.push((a, s));
                            }
                        }
                    }
                }
            }
        }
        true
    }

    fn pruned(&self) -> bool {
        match self.mode {
            Mode::Optimize => self.out.best.as_ref().is_some_and(|(b, _)| self.cost >= *b),
            Mode::FindWithin(b) | Mode::EnumerateWithin(b) => self.cost > b,
        }
    }

    fn leaf(&mut self) {
        let world: Vec<bool> = self.value.iter().map(|&x| x == 1).collect();
        match self.mode {
            Mode::Optimize => {
                self.phase.clone_from(&world);
                self.out.best = Some((self.cost, world));
            }
            Mode::FindWithin(_) => {
                self.out.best = Some((self.cost, world));
                self.done = true;
            }
            Mode::EnumerateWithin(_) => self.out.worlds.push(world),
        }
    }

    fn dfs(&mut self, from: usize) {
        if self.done || self.pruned() {
            return;
        }
        if self.undecided == 0 && !matches!(self.mode, Mode::EnumerateWithin(_)) {
            self.leaf();
            return;
        }
        let Some(v) = (from..self.p.num_vars).find(|&v| self.value[v] == -1) else {
            self.leaf();
            return;
        };
        let first = self.phase[v];
        for val in [first, !first] {
            let m = self.mark();
            if self.assign(v as u32, val) {
                self.dfs(v + 1);
            }
            self.undo(m);
            if self.done {
                return;
            }
        }
    }
}

/// Run the search with `assumptions` forced true at the root.
pub(crate) fn run(p: Problem<'_>, assumptions: &[(u32, bool)], mode: Mode) -> Outcome {
    let total = p.base.len() + p.extra.len();
    let mut s = Search {
        value: vec![-1; p.num_vars],
        status: vec![-1; total],
        undecided: total,
        cost: 0,
        trail: Vec::new(),
        changed: Vec::new(),
        mode,
        out: Outcome::default(),
        phase: vec![false; p.num_vars],
        done: false,
        p,
    };
    let mut units = Vec::new();
    for id in 0..total as u32 {
        let c = s.con(id);
        match c.nnf.eval3(&|_| None) {
            Some(t) => {
                if !s.decide(id, t) {
                    return s.out;
                }
            }
            None => {
                if let Some([(a, sign)]) = c.clause.as_deref() {
                    units.push((*a, *sign));
                }
            }
        }
    }
    for &(v, val) in units.iter().chain(assumptions) {
        if !s.assign(v, val) {
            return s.out;
        }
    }
    s.dfs(0);
    s.out
}
