use super::{Formula, Term, World};
use crate::error::{Error, Result};

/// Classical truth value of a ground formula in a world.
pub fn evaluate(f: &Formula, w: &World) -> Result<bool> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => {
            if !a.is_ground() {
                return Err(Error::NotGround(a.to_string()));
            }
            w.value(a).ok_or_else(|| Error::UnknownAtom(a.to_string()))?
        }
        Formula::Not(a) => !evaluate(a, w)?,
        Formula::And(parts) => {
            let mut v = true;
            for p in parts {
                v &= evaluate(p, w)?;
            }
            v
        }
        Formula::Or(parts) => {
            let mut v = false;
            for p in parts {
                v |= evaluate(p, w)?;
            }
            v
        }
        Formula::Implies(a, b) => !evaluate(a, w)? || evaluate(b, w)?,
        Formula::Iff(a, b) => evaluate(a, w)? == evaluate(b, w)?,
        Formula::Distinct(ts) => distinct_constants(ts)?,
    })
}

/// Truth value of a ground disequality guard.
pub(crate) fn distinct_constants(ts: &[Term]) -> Result<bool> {
    let mut names = Vec::with_capacity(ts.len());
    for t in ts {
        match t {
            Term::Const(c) => names.push(c.as_str()),
            Term::Var(v) => return Err(Error::NotGround(v.name.clone())),
        }
    }
    names.sort_unstable();
    Ok(names.windows(2).all(|w| w[0] != w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Atom, Universe};
    use std::sync::Arc;

    fn world(pairs: &[(&str, bool)]) -> World {
        let u = Universe::from_atoms(
            pairs
                .iter()
                .map(|(n, _)| Atom::prop(*n))
                .collect::<Vec<_>>()
                .iter(),
        );
        World::new(Arc::new(u), pairs.iter().map(|p| p.1).collect()).unwrap()
    }

    #[test]
    fn implication_table() {
        let w = world(&[("a", true), ("x", false)]);
        let f = Formula::implies(Formula::prop("a"), Formula::prop("x"));
        assert!(!evaluate(&f, &w).unwrap());
    }

    #[test]
    fn top_is_true() {
        let w = world(&[("a", false)]);
        assert!(evaluate(&Formula::True, &w).unwrap());
    }

    #[test]
    fn conjunction_implies_negation() {
        let w = world(&[("a", true), ("b", true), ("x", true), ("y", true)]);
        let f = Formula::implies(
            Formula::and(vec![Formula::prop("a"), Formula::prop("b")]),
            Formula::not(Formula::prop("y")),
        );
        assert!(!evaluate(&f, &w).unwrap());
    }

    #[test]
    fn atom_outside_universe() {
        let w = world(&[("a", true)]);
        assert_eq!(
            evaluate(&Formula::prop("zz"), &w),
            Err(Error::UnknownAtom("zz".into()))
        );
    }
}
