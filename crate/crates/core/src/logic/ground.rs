use std::collections::BTreeMap;

use super::eval::distinct_constants;
use super::{Formula, Term, TypedDomain, Var};
use crate::error::{Error, Result};

/// Type-respecting map from variables to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bind `v` to `t`. Variable images must share the variable's type;
    /// constant images are checked against `domain` when it knows them.
    pub fn bind(&mut self, v: Var, t: Term, domain: &TypedDomain) -> Result<()> {
        let ok = match &t {
            Term::Var(w) => w.ty == v.ty,
            Term::Const(c) => domain.type_of(c).is_none_or(|ty| ty == v.ty),
        };
        if !ok {
            return Err(Error::TypeConflict(format!(
                "cannot bind {} of type {} to {t}",
                v.name, v.ty
            )));
        }
        self.map.insert(v, t);
        Ok(())
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn apply(&self, f: &Formula) -> Formula {
        f.map_terms(&mut |t| match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            c => c.clone(),
        })
    }
}

/// All type-respecting groundings of `f`. Variables are enumerated in
/// first-occurrence order with the last varying fastest. Groundings whose
/// guards fail simplify to `true` and are dropped.
pub fn ground(f: &Formula, domain: &TypedDomain) -> Result<Vec<Formula>> {
    let vars = f.vars();
    if vars.is_empty() {
        return Ok(vec![f.clone()]);
    }
    let mut pools = Vec::with_capacity(vars.len());
    for v in &vars {
        let cs = domain
            .constants(&v.ty)
            .ok_or_else(|| Error::UnknownType(v.ty.clone()))?;
        if cs.is_empty() {
            return Err(Error::EmptyDomain(v.ty.clone()));
        }
        pools.push(cs);
    }
    let guarded = has_guard(f);
    let mut out = Vec::new();
    let mut idx = vec![0usize; vars.len()];
    loop {
        let binding: BTreeMap<&Var, &String> = vars
            .iter()
            .zip(&idx)
            .zip(&pools)
            .map(|((v, &i), pool)| (v, &pool[i]))
            .collect();
        let g = f.map_terms(&mut |t| match t {
            Term::Var(v) => Term::Const(binding[v].clone()),
            c => c.clone(),
        });
        if guarded {
            let s = fold_guards(&g)?;
            if s != Formula::True {
                out.push(s);
            }
        } else {
            out.push(g);
        }
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < pools[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn has_guard(f: &Formula) -> bool {
    match f {
        Formula::Distinct(_) => true,
        Formula::Not(a) => has_guard(a),
        Formula::And(v) | Formula::Or(v) => v.iter().any(has_guard),
        Formula::Implies(a, b) | Formula::Iff(a, b) => has_guard(a) || has_guard(b),
        _ => false,
    }
}

/// Decide ground guards and fold the resulting constants.
fn fold_guards(f: &Formula) -> Result<Formula> {
    Ok(match f {
        Formula::Distinct(ts) => {
            if distinct_constants(ts)? {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Not(a) => match fold_guards(a)? {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            g => Formula::not(g),
        },
        Formula::And(v) => {
            let mut parts = Vec::new();
            for c in v {
                match fold_guards(c)? {
                    Formula::True => {}
                    Formula::False => return Ok(Formula::False),
                    g => parts.push(g),
                }
            }
            Formula::and(parts)
        }
        Formula::Or(v) => {
            let mut parts = Vec::new();
            for c in v {
                match fold_guards(c)? {
                    Formula::False => {}
                    Formula::True => return Ok(Formula::True),
                    g => parts.push(g),
                }
            }
            Formula::or(parts)
        }
        Formula::Implies(a, b) => match (fold_guards(a)?, fold_guards(b)?) {
            (Formula::False, _) | (_, Formula::True) => Formula::True,
            (Formula::True, g) => g,
            (g, Formula::False) => g.negated(),
            (g, h) => Formula::implies(g, h),
        },
        Formula::Iff(a, b) => match (fold_guards(a)?, fold_guards(b)?) {
            (Formula::True, g) | (g, Formula::True) => g,
            (Formula::False, g) | (g, Formula::False) => g.negated(),
            (g, h) => Formula::iff(g, h),
        },
        other => other.clone(),
    })
}

/// Rename constants according to `map`; unmapped constants are kept.
pub fn substitute_constants(f: &Formula, map: &BTreeMap<String, String>) -> Formula {
    f.map_terms(&mut |t| match t {
        Term::Const(c) => Term::Const(map.get(c).cloned().unwrap_or_else(|| c.clone())),
        v => v.clone(),
    })
}

fn var_name(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    if i < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", i / 26)
    }
}

/// Replace every constant belonging to a type with at least two constants in
/// `domain` by a fresh variable of that type, named A, B, ... in order of first
/// occurrence. Variables of one type are guarded pairwise distinct by a single
/// `alldiff` antecedent per type. Other constants are left in place.
pub fn variabilize(f: &Formula, domain: &TypedDomain) -> Formula {
    variabilize_where(f, domain, &|ty| {
        domain.constants(ty).is_some_and(|cs| cs.len() >= 2)
    })
}

/// As [`variabilize`], lifting the constants of every type accepted by
/// `liftable`.
pub fn variabilize_where(f: &Formula, domain: &TypedDomain, liftable: &dyn Fn(&str) -> bool) -> Formula {
    let mut assigned: BTreeMap<String, Var> = BTreeMap::new();
    let mut order: Vec<Var> = Vec::new();
    let lifted = f.map_terms(&mut |t| match t {
        Term::Const(c) => {
            if let Some(v) = assigned.get(c) {
                return Term::Var(v.clone());
            }
            match domain.type_of(c) {
                Some(ty) if liftable(ty) => {
                    let v = Var::new(var_name(order.len()), ty);
                    assigned.insert(c.clone(), v.clone());
                    order.push(v.clone());
                    Term::Var(v)
                }
                _ => t.clone(),
            }
        }
        v => v.clone(),
    });
    let mut by_type: BTreeMap<&str, Vec<Term>> = BTreeMap::new();
    for v in &order {
        by_type.entry(&v.ty).or_default().push(Term::Var(v.clone()));
    }
    let guards: Vec<Formula> = by_type
        .into_values()
        .filter(|vs| vs.len() >= 2)
        .map(Formula::Distinct)
        .collect();
    if guards.is_empty() {
        lifted
    } else {
        Formula::implies(Formula::and(guards), lifted)
    }
}
