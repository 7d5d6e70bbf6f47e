use num_rational::Rational64;
use proptest::prelude::*;

use mapposs::io::{parse_mln, parse_theory, render_mln, render_theory};
use mapposs::logic::{equivalent, Atom, Formula, Term};
use mapposs::map::{EvidenceSet, MapEngine, Mln, WeightedFormula};
use mapposs::oracle::{random_mln, verify_default, verify_prop1, verify_ranking};
use mapposs::poss::{Level, PossEngine, PossTheory};
use mapposs::transforms::transform_exact;

fn leaf() -> impl Strategy<Value = Formula> {
    prop_oneof![
        (0..4usize).prop_map(|i| Formula::prop(&format!("p{i}"))),
        prop::sample::select(vec!["a", "b"])
            .prop_map(|c| Formula::atom(Atom::new("q", vec![Term::constant(c)]))),
        Just(Formula::True),
    ]
}

fn formula() -> impl Strategy<Value = Formula> {
    leaf().prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::iff(a, b)),
        ]
    })
}

fn weight() -> impl Strategy<Value = Rational64> {
    (-20i64..20, 1i64..5).prop_map(|(n, d)| Rational64::new(n, d))
}

fn level() -> impl Strategy<Value = Level> {
    prop_oneof![
        Just(Level::Hard),
        (0i64..30, 1i64..4).prop_map(|(n, d)| Level::Finite(Rational64::new(n, d))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mln_text_round_trips(
        soft in prop::collection::vec((formula(), weight()), 0..5),
        hard in prop::collection::vec(formula(), 0..2),
    ) {
        let mut m = Mln::new();
        m.soft = soft.into_iter().map(|(f, w)| WeightedFormula::new(f, w)).collect();
        m.hard = hard;
        let back = parse_mln(&render_mln(&m)).unwrap();
        prop_assert_eq!(back.soft.len(), m.soft.len());
        prop_assert_eq!(back.hard.len(), m.hard.len());
        for (a, b) in m.soft.iter().zip(&back.soft) {
            prop_assert_eq!(a.weight, b.weight);
            prop_assert!(equivalent(&a.formula, &b.formula), "{} vs {}", a.formula, b.formula);
        }
        for (a, b) in m.hard.iter().zip(&back.hard) {
            prop_assert!(equivalent(a, b));
        }
    }

    #[test]
    fn theory_text_round_trips(rows in prop::collection::vec((formula(), level()), 0..6)) {
        let mut t = PossTheory::new();
        for (f, l) in &rows {
            t.push(f.clone(), *l);
        }
        let back = parse_theory(&render_theory(&t, false)).unwrap();
        prop_assert!(back.len() <= t.len());
        let covered = |from: &PossTheory, to: &PossTheory| {
            from.formulas.iter().all(|pf| {
                to.formulas.iter().any(|g| g.level == pf.level && equivalent(&g.formula, &pf.formula))
            })
        };
        prop_assert!(covered(&t, &back));
        prop_assert!(covered(&back, &t));
    }

    #[test]
    fn exact_theory_ranks_worlds_like_penalties(seed in 0u64..10_000) {
        let m = random_mln(seed, 5, 5);
        prop_assert!(verify_prop1(&m).unwrap().passed());
        prop_assert!(verify_ranking(&m).unwrap().passed());
    }

    #[test]
    fn default_rules_agree_with_map(seed in 0u64..10_000, k in 1usize..3) {
        let m = random_mln(seed, 4, 5);
        let r = verify_default(&m, k).unwrap();
        prop_assert!(r.passed(), "{}", r);
    }

    #[test]
    fn map_entailment_is_closed_under_conjunction(seed in 0u64..10_000, e in 0usize..4) {
        let m = random_mln(seed, 4, 5);
        let engine = MapEngine::new(&m).unwrap();
        let atoms = m.universe().atoms().to_vec();
        let ev = EvidenceSet::new(atoms.iter().take(e).map(|a| Formula::atom(a.clone())).collect());
        let lits: Vec<Formula> = atoms
            .iter()
            .flat_map(|a| [Formula::atom(a.clone()), Formula::not(Formula::atom(a.clone()))])
            .filter(|f| engine.map_entails(&ev, f).unwrap())
            .collect();
        prop_assert!(engine.map_entails(&ev, &Formula::and(lits)).unwrap());
    }

    #[test]
    fn poss_entailment_matches_map_on_exact_theory(seed in 0u64..10_000) {
        let m = random_mln(seed, 4, 4);
        let t = transform_exact(&m, 20).unwrap();
        let (map, poss) = (MapEngine::new(&m).unwrap(), PossEngine::new(&t).unwrap());
        for a in m.universe().atoms() {
            let ev = EvidenceSet::new(vec![Formula::atom(a.clone())]);
            for b in m.universe().atoms() {
                let q = Formula::not(Formula::atom(b.clone()));
                prop_assert_eq!(map.map_entails(&ev, &q).unwrap(), poss.poss_entails(&ev, &q).unwrap());
            }
        }
    }
}
