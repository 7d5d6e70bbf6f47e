//! Acceptance gate: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mapposs::io::{parse_evidence, parse_evidence_family, parse_mln, parse_query, parse_theory};
use mapposs::lifted::{ground_theory, working_domain};
use mapposs::logic::{equivalent, isomorphic, Atom, Formula};
use mapposs::map::{EvidenceSet, MapEngine, Mln};
use mapposs::oracle::{
    compare_theories, random_corpus, verify_default, verify_lifted_matches_ground, verify_prop1,
    verify_ranking, verify_short_blocking, EquivalenceReport,
};
use mapposs::poss::{Level, PossEngine, PossTheory};
use mapposs::transforms::{
    compute_se, transform_default, transform_evidence, DefaultOptions, EvidenceFamily,
};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mapposs"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn fx(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

fn scratch(name: &str, text: &str) -> String {
    let p = std::env::temp_dir().join(format!("mapposs-acceptance-{}-{name}", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> std::result::Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))
}

fn lvl(p: i64) -> Level {
    Level::finite(p)
}

fn q(s: &str) -> Formula {
    parse_query(s).unwrap()
}

/// Bijection between `t` and `expected` pairing formulas at equal levels
/// that satisfy `same`.
fn matches(
    t: &PossTheory,
    expected: &[(Formula, Level)],
    same: &dyn Fn(&Formula, &Formula) -> bool,
) -> Check {
    if t.len() != expected.len() {
        return Err(format!("{} formulas, expected {}", t.len(), expected.len()));
    }
    let mut used = vec![false; t.len()];
    for (f, l) in expected {
        let hit = t
            .formulas
            .iter()
            .enumerate()
            .find(|(i, g)| !used[*i] && g.level == *l && same(&g.formula, f));
        match hit {
            Some((i, _)) => used[i] = true,
            None => return Err(format!("no match for ({f}, {l})")),
        }
    }
    Ok(format!("{} formulas matched", t.len()))
}

fn ground_expected(items: &[(&str, i64)]) -> Vec<(Formula, Level)> {
    items.iter().map(|(s, l)| (q(s), lvl(*l))).collect()
}

fn lifted_expected(text: &str) -> Vec<(Formula, Level)> {
    parse_theory(text)
        .unwrap()
        .formulas
        .into_iter()
        .map(|f| (f.formula, f.level))
        .collect()
}

fn report(r: &EquivalenceReport) -> Check {
    if r.passed() {
        Ok(r.to_string().trim_end().to_string())
    } else {
        Err(r.to_string().trim_end().to_string())
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let (code, text) = cli(&["compile", "--method", "exact", &fx("implications.mln")]);
    ensure(code == 0, || format!("compile exited {code}"))?;
    let t = parse_theory(&text).map_err(|e| e.to_string())?;
    let expected = ground_expected(&[
        ("a -> x", 5),
        ("a -> y", 5),
        ("a & b -> !y", 10),
        ("a -> x | y", 10),
        ("a & b -> x | !y", 15),
    ]);
    let detail = matches(&t, &expected, &equivalent)?;
    let theory = scratch("implications.theory", &text);
    for (ev, query) in [("a.ev", "x & y"), ("ab.ev", "x & !y")] {
        let (m, _) = cli(&[
            "query-map",
            &fx("implications.mln"),
            "--evidence",
            &fx(ev),
            "--query",
            query,
        ]);
        let (p, _) = cli(&["query-poss", &theory, "--evidence", &fx(ev), "--query", query]);
        ensure(m == 0 && p == 0, || {
            format!("{query} under {ev}: map exit {m}, poss exit {p}")
        })?;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("{detail}, queries affirmed, {:.2?}", start.elapsed()))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let m = parse_mln(&read("drowning.mln")).map_err(|e| e.to_string())?;
    let engine = MapEngine::new(&m).map_err(|e| e.to_string())?;
    let x = EvidenceSet::new(vec![q("x")]);
    let name = |i: &usize| m.soft[*i].formula.to_string();
    let named = |sets: Vec<BTreeSet<usize>>| -> BTreeSet<BTreeSet<String>> {
        sets.iter().map(|s| s.iter().map(name).collect()).collect()
    };
    let strs = |groups: &[&[&str]]| -> BTreeSet<BTreeSet<String>> {
        groups
            .iter()
            .map(|g| g.iter().map(|s| s.to_string()).collect())
            .collect()
    };
    let se = named(compute_se(&engine, &x).map_err(|e| e.to_string())?);
    let want = strs(&[&["a", "u"], &["b", "u"], &["a", "v"], &["b", "v"]]);
    ensure(se == want, || format!("S_E = {se:?}"))?;

    let family = parse_evidence_family(&read("drowning.family")).map_err(|e| e.to_string())?;
    let t = transform_evidence(&m, &EvidenceFamily::Explicit(family)).map_err(|e| e.to_string())?;
    let expected = ground_expected(&[
        ("u", 3),
        ("a", 2),
        ("(a | b) & (u | v) -> !x", 10),
        ("b", 2),
        ("v", 1),
        ("a | u | !x", 6),
        ("b | u | !x", 6),
        ("a | v | !x", 5),
        ("b | v | !x", 5),
        ("!x", 4),
    ]);
    let detail = matches(&t, &expected, &equivalent)?;

    let u = q("u");
    let map = engine.map_entails(&x, &u).map_err(|e| e.to_string())?;
    let poss = PossEngine::new(&t)
        .and_then(|p| p.poss_entails(&x, &u))
        .map_err(|e| e.to_string())?;
    ensure(!map && !poss, || format!("u under {{x}}: map {map}, poss {poss}"))?;

    let rule = m.soft[2].formula.to_string();
    let cons = named(engine.cons_sets(&x).map_err(|e| e.to_string())?);
    let want = strs(&[&[&rule, "a", "b"], &[&rule, "u", "v"]]);
    ensure(cons == want, || format!("Cons = {cons:?}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!(
        "S_E, {detail}, u undetermined, Cons = {{Y1, Y2}}, {:.2?}",
        start.elapsed()
    ))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let (code, text) = cli(&["compile", "--method", "default", "-k", "1", &fx("defaults.mln")]);
    ensure(code == 0, || format!("compile exited {code}"))?;
    let t = parse_theory(&text).map_err(|e| e.to_string())?;
    let expected = ground_expected(&[
        ("true -> a & b", 0),
        ("!a -> b", 1),
        ("!b -> true", 2),
        ("b", 1),
        ("a | !b", 0),
    ]);
    let detail = matches(&t, &expected, &equivalent)?;
    let theory = scratch("defaults.theory", &text);
    let ev = fx("not_b.ev");
    let (m, _) = cli(&[
        "query-map",
        &fx("defaults.mln"),
        "--evidence",
        &ev,
        "--query",
        "a",
    ]);
    let (p, _) = cli(&["query-poss", &theory, "--evidence", &ev, "--query", "a"]);
    ensure(m == 1 && p == 1, || {
        format!("a under {{!b}}: map exit {m}, poss exit {p}")
    })?;
    within(start, Duration::from_secs(1))?;
    Ok(format!(
        "{detail}, a not entailed under {{!b}}, {:.2?}",
        start.elapsed()
    ))
}

const BIRDS_LISTING: &str = "\
(!antarctic(X) | !flies(X), l0)
(!bird(X) | flies(X), l0)
(!heavy(X) | !flies(X), l0)
(flies(X) | !hasJetPack(X), l0)
(!bird(X) | flies(X) | hasJetPack(X), l1)
(!heavy(X) | antarctic(X) | !flies(X), l1)
(!bird(X) | !heavy(X), l1)
(!antarctic(X) | !heavy(X) | !flies(X), l10)
(flies(X) | !hasJetPack(X) | bird(X), l11)
(!bird(X) | flies(X) | !hasJetPack(X), l100)
";

fn criterion_4() -> Check {
    let start = Instant::now();
    let args = [
        "compile",
        "--method",
        "lifted",
        "-k",
        "3",
        "--blocking",
        "full",
        "--domain-size",
        "1",
    ];
    let (code, text) = cli(&[&args[..], &[fx("birds.mln").as_str()]].concat());
    ensure(code == 0, || format!("compile exited {code}"))?;
    let t = parse_theory(&text).map_err(|e| e.to_string())?;
    let detail = matches(&t, &lifted_expected(BIRDS_LISTING), &isomorphic)?;
    let levels: BTreeSet<Level> = t.formulas.iter().map(|f| f.level).collect();
    let want: BTreeSet<Level> = [0, 1, 10, 11, 100].into_iter().map(lvl).collect();
    ensure(levels == want, || format!("level set {levels:?}"))?;

    let ev_text = read("bird_heavy.ev");
    let e = parse_evidence(&ev_text).map_err(|e| e.to_string())?;
    let mut d = t.domain.clone();
    d.add("obj", "tweety").map_err(|e| e.to_string())?;
    let g = t.ground_over(&d).map_err(|e| e.to_string())?;
    let ctx = PossEngine::new(&g)
        .and_then(|p| p.context(&e))
        .map_err(|e| e.to_string())?;
    ensure(ctx.level() > lvl(1), || {
        format!("consistency level {}", ctx.level())
    })?;

    let theory = scratch("birds.theory", &text);
    for query in ["flies(tweety)", "!flies(tweety)"] {
        let (m, _) = cli(&[
            "query-map",
            &fx("birds.mln"),
            "--evidence",
            &fx("bird_heavy.ev"),
            "--query",
            query,
        ]);
        let (p, _) = cli(&[
            "query-poss",
            &theory,
            "--evidence",
            &fx("bird_heavy.ev"),
            "--query",
            query,
        ]);
        ensure(m == 1 && p == 1, || {
            format!("{query}: map exit {m}, poss exit {p}")
        })?;
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!(
        "{detail}, levels {{0,1,10,11,100}}, l0/l1 drowned (cut at {}), flies undetermined, {:.2?}",
        ctx.level(),
        start.elapsed()
    ))
}

const SMOKERS_LISTING: &str = "\
@type person:
(s(B) | !f(person:A,person:B) | !s(A) | !alldiff(A,B), l0)
(!s(person:A) | c(A), l0)
(!f(person:C,person:B) | !f(A,B) | s(A) | s(C) | !alldiff(A,B,C) | !s(B), l10)
(!f(person:C,person:B) | !s(A) | !f(A,C) | s(C) | !alldiff(A,B,C) | !s(B), l10)
(!s(person:A) | !f(person:C,A) | s(C) | c(person:B) | !alldiff(A,B,C) | !s(B), l10)
(!s(person:A) | c(A) | c(person:B) | !s(B) | !alldiff(A,B), l10)
(s(person:B) | !f(person:A,B) | !s(A) | c(A) | !alldiff(A,B), l10)
(!f(person:A,person:B) | f(B,A), 1)
(!f(person:A,person:A), 1)
";

fn f_atoms(f: &Formula) -> usize {
    let mut n = 0;
    f.visit_atoms(&mut |a| n += usize::from(a.predicate == "f"));
    n
}

/// Reverse the arguments of the `f` atoms selected by `mask`, in visiting order.
fn flip_f(f: &Formula, mask: u32, seen: &mut u32) -> Formula {
    let rec = |g: &Formula, seen: &mut u32| flip_f(g, mask, seen);
    match f {
        Formula::Atom(a) if a.predicate == "f" => {
            let i = *seen;
            *seen += 1;
            if mask >> i & 1 == 1 {
                let args: Vec<_> = a.args.iter().rev().cloned().collect();
                Formula::Atom(Atom::new(a.predicate.clone(), args))
            } else {
                f.clone()
            }
        }
        Formula::Not(g) => Formula::Not(Box::new(rec(g, seen))),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rec(g, seen)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rec(g, seen)).collect()),
        Formula::Implies(a, b) => {
            let a = rec(a, seen);
            Formula::Implies(Box::new(a), Box::new(rec(b, seen)))
        }
        Formula::Iff(a, b) => {
            let a = rec(a, seen);
            Formula::Iff(Box::new(a), Box::new(rec(b, seen)))
        }
        _ => f.clone(),
    }
}

/// Isomorphic once some `f` atoms are read with swapped arguments; sound
/// because the hard rule makes `f` symmetric.
fn iso_modulo_symmetry(a: &Formula, b: &Formula) -> bool {
    (0..1u32 << f_atoms(b)).any(|mask| isomorphic(a, &flip_f(b, mask, &mut 0)))
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let (code, text) = cli(&["compile", "--method", "lifted", "-k", "4", &fx("smokers.mln")]);
    ensure(code == 0, || format!("compile exited {code}"))?;
    let t = parse_theory(&text).map_err(|e| e.to_string())?;
    let counts = |l: Level| t.formulas.iter().filter(|f| f.level == l).count();
    let (hard, l0, l10) = (counts(Level::Hard), counts(lvl(0)), counts(lvl(10)));
    let detail = matches(&t, &lifted_expected(SMOKERS_LISTING), &iso_modulo_symmetry)?;
    let syntactic = lifted_expected(SMOKERS_LISTING)
        .iter()
        .filter(|(f, l)| {
            t.formulas
                .iter()
                .any(|g| g.level == *l && isomorphic(&g.formula, f))
        })
        .count();
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "{detail} ({hard} hard, {l0} at l0, {l10} at l10; {syntactic}/9 without f-symmetry), {:.2?}",
        start.elapsed()
    ))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let mut r = EquivalenceReport::default();
    for m in random_corpus(0, 50) {
        r.merge(verify_prop1(&m).map_err(|e| e.to_string())?);
        r.merge(verify_ranking(&m).map_err(|e| e.to_string())?);
    }
    let detail = report(&r)?;
    within(start, Duration::from_secs(120))?;
    Ok(format!("{detail}, {:.2?}", start.elapsed()))
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let mut r = EquivalenceReport::default();
    for m in random_corpus(0, 50) {
        r.merge(verify_default(&m, 2).map_err(|e| e.to_string())?);
    }
    let detail = report(&r)?;
    within(start, Duration::from_secs(600))?;
    Ok(format!(
        "{detail} (pruned, unpruned, pruned vs unpruned), {:.2?}",
        start.elapsed()
    ))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let mut r = EquivalenceReport::default();
    for name in ["birds.mln", "smokers.mln"] {
        let m = parse_mln(&read(name)).map_err(|e| e.to_string())?;
        for n in [2, 3] {
            r.merge(verify_lifted_matches_ground(&m, 2, Some(n)).map_err(|e| format!("{name}/{n}: {e}"))?);
            r.merge(verify_short_blocking(&m, 2, n).map_err(|e| format!("{name}/{n}: {e}"))?);
        }
    }
    let detail = report(&r)?;
    within(start, Duration::from_secs(300))?;
    Ok(format!("{detail}, {:.2?}", start.elapsed()))
}

fn criterion_9() -> Check {
    let start = Instant::now();
    let table = parse_mln(&read("cora.mln")).map_err(|e| e.to_string())?;
    let rules = table.soft.len() + table.hard.len();
    let types = table.domain.types().count();
    ensure(rules == 15 && types == 3, || {
        format!("{rules} rules, {types} types")
    })?;
    let negative = |m: &Mln| m.soft.iter().filter(|w| *w.weight.numer() < 0).count();
    let normalized = table.normalize();
    ensure(negative(&table) == 1 && negative(&normalized) == 0, || {
        "negative weight not normalized".into()
    })?;

    let args = ["compile", "--method", "lifted", "-k", "2", "--keep-redundant"];
    let (code, text) = cli(&[&args[..], &[fx("cora_reduced.mln").as_str()]].concat());
    ensure(code == 0, || format!("compile exited {code}"))?;
    let lifted = parse_theory(&text).map_err(|e| e.to_string())?;
    let g1 = ground_theory(&lifted, &lifted.domain).map_err(|e| e.to_string())?;
    let m = parse_mln(&read("cora_reduced.mln"))
        .map_err(|e| e.to_string())?
        .normalize();
    let work = working_domain(&m, 2, None).map_err(|e| e.to_string())?;
    let gm = m.ground_over(&work).map_err(|e| e.to_string())?;
    let g2 = transform_default(&gm, 2, DefaultOptions::default()).map_err(|e| e.to_string())?;
    let detail = report(&compare_theories(&g1, &g2).map_err(|e| e.to_string())?)?;
    Ok(format!(
        "15 rules, 3 types, weight -3 flipped; reduced domain: {} lifted formulas, {} ground atoms, {detail}, {:.2?}",
        lifted.len(),
        gm.universe().len(),
        start.elapsed()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("exact transformation golden output", criterion_1),
        ("evidence-family transformation golden output", criterion_2),
        ("default-rule transformation golden output", criterion_3),
        ("lifted birds theory", criterion_4),
        ("lifted smokers theory", criterion_5),
        ("exact theory vs brute force on random MLNs", criterion_6),
        ("default-rule theory vs MAP on random MLNs", criterion_7),
        ("lifted vs ground default-rule theories", criterion_8),
        ("CORA parse and reduced-domain lifting", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
