use std::collections::HashMap;

use super::nnf::{GuardedAtom, Nnf};
use super::{Atom, Formula};
use crate::error::{Error, Result};
use crate::sat::{CnfInstance, Lit, Var};

/// Largest clause count produced by plain distribution before switching to
/// auxiliary definitions.
const DISTRIBUTE_LIMIT: u64 = 64;

/// Assigns solver variables to ground atoms and hands out auxiliary
/// variables. Auxiliary variables are never projectable.
#[derive(Clone, Debug, Default)]
pub struct Encoder {
    index: HashMap<Atom, Var>,
    atoms: Vec<Option<Atom>>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Variable for `atom`, allocating one if needed.
    pub fn var(&mut self, atom: &Atom) -> Var {
        if let Some(&v) = self.index.get(atom) {
            return v;
        }
        let v = Var(self.atoms.len() as u32);
        self.atoms.push(Some(atom.clone()));
        self.index.insert(atom.clone(), v);
        v
    }

    pub fn get(&self, atom: &Atom) -> Option<Var> {
        self.index.get(atom).copied()
    }

    pub fn fresh(&mut self) -> Var {
        let v = Var(self.atoms.len() as u32);
        self.atoms.push(None);
        v
    }

    pub fn num_vars(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, v: Var) -> Option<&Atom> {
        self.atoms.get(v.index()).and_then(|a| a.as_ref())
    }

    pub fn instance(&self, clauses: Vec<Vec<Lit>>) -> CnfInstance {
        CnfInstance {
            num_vars: self.atoms.len(),
            clauses,
            projectable: self.atoms.iter().map(Option::is_some).collect(),
        }
    }
}

/// Equisatisfiable clause set for a ground formula. Small formulas are
/// distributed directly; larger disjunctions get one-sided definitions over
/// fresh auxiliary variables.
pub fn to_cnf(f: &Formula, enc: &mut Encoder) -> Result<Vec<Vec<Lit>>> {
    let nnf = f.to_nnf()?;
    let nnf = lower(&nnf, enc)?;
    let mut out = Vec::new();
    emit(&nnf, enc, &mut out);
    Ok(out)
}

fn lower(n: &Nnf<GuardedAtom>, enc: &mut Encoder) -> Result<Nnf<Var>> {
    Ok(match n {
        Nnf::True => Nnf::True,
        Nnf::False => Nnf::False,
        Nnf::Lit(GuardedAtom::Atom(a), s) => {
            if !a.is_ground() {
                return Err(Error::NotGround(a.to_string()));
            }
            Nnf::Lit(enc.var(a), *s)
        }
        Nnf::Lit(GuardedAtom::Distinct(ts), _) => {
            let names: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
            return Err(Error::NotGround(format!("alldiff({})", names.join(","))));
        }
        Nnf::And(v) => Nnf::and(v.iter().map(|c| lower(c, enc)).collect::<Result<_>>()?),
        Nnf::Or(v) => Nnf::or(v.iter().map(|c| lower(c, enc)).collect::<Result<_>>()?),
    })
}

fn distributed_size(n: &Nnf<Var>) -> u64 {
    match n {
        Nnf::True => 0,
        Nnf::False | Nnf::Lit(..) => 1,
        Nnf::And(v) => v.iter().map(distributed_size).fold(0, u64::saturating_add),
        Nnf::Or(v) => v.iter().map(distributed_size).fold(1, u64::saturating_mul),
    }
}

fn emit(n: &Nnf<Var>, enc: &mut Encoder, out: &mut Vec<Vec<Lit>>) {
    if distributed_size(n) <= DISTRIBUTE_LIMIT {
        for c in n.distribute() {
            out.push(c.into_iter().map(|(v, s)| v.lit(s)).collect());
        }
        return;
    }
    match n {
        Nnf::And(v) => v.iter().for_each(|c| emit(c, enc, out)),
        Nnf::Or(v) => {
            let clause = v.iter().map(|c| define(c, enc, out)).collect();
            out.push(clause);
        }
        _ => unreachable!("constants and literals distribute within the limit"),
    }
}

/// A literal implying `n`, with the defining clauses pushed to `out`.
fn define(n: &Nnf<Var>, enc: &mut Encoder, out: &mut Vec<Vec<Lit>>) -> Lit {
    match n {
        Nnf::Lit(v, s) => v.lit(*s),
        Nnf::And(v) => {
            let z = enc.fresh().lit(true);
            for c in v {
                let l = define(c, enc, out);
                out.push(vec![!z, l]);
            }
            z
        }
        Nnf::Or(v) => {
            let z = enc.fresh().lit(true);
            let mut clause = vec![!z];
            clause.extend(v.iter().map(|c| define(c, enc, out)));
            out.push(clause);
            z
        }
        Nnf::True | Nnf::False => {
            let z = enc.fresh().lit(true);
            if matches!(n, Nnf::False) {
                out.push(vec![!z]);
            }
            z
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{evaluate, Universe, World};
    use crate::sat::{enumerate_models, solve, SatResult};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn p(n: &str) -> Formula {
        Formula::prop(n)
    }

    fn clauses(f: &Formula) -> (Encoder, Vec<Vec<Lit>>) {
        let mut enc = Encoder::new();
        let c = to_cnf(f, &mut enc).unwrap();
        (enc, c)
    }

    #[test]
    fn implication_is_one_clause() {
        let (enc, c) = clauses(&Formula::implies(p("a"), p("x")));
        let a = enc.get(&Atom::prop("a")).unwrap();
        let x = enc.get(&Atom::prop("x")).unwrap();
        assert_eq!(c, vec![vec![a.lit(false), x.lit(true)]]);
    }

    #[test]
    fn bottom_is_empty_clause() {
        assert_eq!(clauses(&Formula::False).1, vec![Vec::<Lit>::new()]);
        assert!(clauses(&Formula::True).1.is_empty());
    }

    #[test]
    fn negated_conjunction() {
        let (enc, c) = clauses(&Formula::not(Formula::and(vec![p("a"), p("b")])));
        let a = enc.get(&Atom::prop("a")).unwrap();
        let b = enc.get(&Atom::prop("b")).unwrap();
        assert_eq!(c, vec![vec![a.lit(false), b.lit(false)]]);
    }

    #[test]
    fn non_ground_is_rejected() {
        let f = Formula::Atom(Atom::new("p", vec![crate::logic::Term::var("X", "t")]));
        assert!(to_cnf(&f, &mut Encoder::new()).is_err());
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            (0usize..5).prop_map(|i| p(["a", "b", "c", "d", "e"][i])),
            Just(Formula::True),
            Just(Formula::False),
        ];
        leaf.prop_recursive(5, 48, 4, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                prop::collection::vec(inner.clone(), 0..4).prop_map(Formula::And),
                prop::collection::vec(inner.clone(), 0..4).prop_map(Formula::Or),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::iff(a, b)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn projected_models_match_truth_table(f in arb_formula()) {
            let names = ["a", "b", "c", "d", "e"];
            let universe = Arc::new(Universe::from_atoms(names.iter().map(|n| Atom::prop(*n)).collect::<Vec<_>>().iter()));
            let mut enc = Encoder::new();
            for n in names {
                enc.var(&Atom::prop(n));
            }
            let c = to_cnf(&f, &mut enc).unwrap();
            let inst = enc.instance(c);
            let models = enumerate_models(&inst, None);
            let mut expected = Vec::new();
            for m in 0..32u32 {
                let vals: Vec<bool> = (0..5).map(|i| m >> i & 1 == 1).collect();
                let w = World::new(universe.clone(), vals.clone()).unwrap();
                if evaluate(&f, &w).unwrap() {
                    expected.push(vals);
                }
            }
            expected.sort();
            prop_assert_eq!(models.models(), expected.as_slice());
            prop_assert_eq!(solve(&inst) != SatResult::Unsat, !expected.is_empty());
        }
    }
}
