//! Text formats: MLN files, evidence files and possibilistic theories.
//!
//! MLN lines are `<weight> :: <formula>` or `inf :: <formula>`, with
//! `@type tag: c1, c2` declaring constants. Theory lines are
//! `(<formula>, <level>)` where the level is `lbot`, `l<penalty>` or `1`;
//! `@display K L` sets the weight mapping. `#` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::logic::{Atom, Formula, FormulaPrinter, Literal, Term, TypedDomain, Var};
use crate::map::{EvidenceSet, Mln, WeightedFormula};
use crate::poss::{DisplayParams, Level, PossTheory};

/// Type given to arguments nothing else constrains.
pub const DEFAULT_TYPE: &str = "obj";

const GUARD: &str = "alldiff";

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Colon,
    Comma,
    LParen,
    RParen,
    Not,
    And,
    Or,
    Implies,
    Iff,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn is_ident(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn lex(text: &str, line: usize, offset: usize) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = offset + i + 1;
        let (tok, len) = match c {
            _ if c.is_whitespace() => {
                i += 1;
                continue;
            }
            ':' => (Tok::Colon, 1),
            ',' => (Tok::Comma, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '!' => (Tok::Not, 1),
            '&' => (Tok::And, 1),
            '|' => (Tok::Or, 1),
            '-' if chars.get(i + 1) == Some(&'>') => (Tok::Implies, 2),
            '<' if chars[i..].starts_with(&['<', '-', '>']) => (Tok::Iff, 3),
            _ if is_ident(c) => {
                let len = chars[i..].iter().take_while(|c| is_ident(**c)).count();
                (Tok::Ident(chars[i..i + len].iter().collect()), len)
            }
            _ => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
        };
        out.push(Spanned { tok, col });
        i += len;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
struct RawArg {
    name: String,
    ty: Option<String>,
}

impl RawArg {
    fn is_var(&self) -> bool {
        self.name.starts_with(|c: char| c.is_uppercase())
    }
}

#[derive(Clone, Debug)]
enum Raw {
    True,
    False,
    Atom(String, Vec<RawArg>, usize),
    Guard(Vec<RawArg>),
    Not(Box<Raw>),
    And(Vec<Raw>),
    Or(Vec<Raw>),
    Implies(Box<Raw>, Box<Raw>),
    Iff(Box<Raw>, Box<Raw>),
}

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |s| s.col)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        syntax(self.line, self.col(), message)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<(String, usize)> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, col))
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn formula(&mut self) -> Result<Raw> {
        let lhs = self.implication()?;
        if self.eat(&Tok::Iff) {
            let rhs = self.implication()?;
            return Ok(Raw::Iff(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Raw> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implication()?;
            return Ok(Raw::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Raw> {
        let mut parts = vec![self.conjunction()?];
        while self.eat(&Tok::Or) {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Raw::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<Raw> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::And) {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Raw::And(parts)
        })
    }

    fn unary(&mut self) -> Result<Raw> {
        if self.eat(&Tok::Not) {
            return Ok(Raw::Not(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(f);
        }
        let (name, col) = self.ident()?;
        if name.starts_with(|c: char| c.is_uppercase()) {
            return Err(syntax(
                self.line,
                col,
                format!("predicate `{name}` must start lowercase"),
            ));
        }
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.arg()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma, "`,` or `)`")?;
            }
        }
        Ok(match (name.as_str(), args.is_empty()) {
            ("true", true) => Raw::True,
            ("false", true) => Raw::False,
            (GUARD, false) => Raw::Guard(args),
            _ => Raw::Atom(name, args, col),
        })
    }

    fn arg(&mut self) -> Result<RawArg> {
        let (first, _) = self.ident()?;
        if self.eat(&Tok::Colon) {
            let (name, _) = self.ident()?;
            return Ok(RawArg {
                name,
                ty: Some(first),
            });
        }
        Ok(RawArg {
            name: first,
            ty: None,
        })
    }
}

fn parse_raw(text: &str, line: usize, offset: usize) -> Result<Raw> {
    let toks = lex(text, line, offset)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        line,
        end_col: offset + text.chars().count() + 1,
    };
    let f = p.formula()?;
    if p.pos < toks.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

fn visit_args<'a>(f: &'a Raw, out: &mut impl FnMut(Option<(&'a str, usize)>, &'a RawArg)) {
    match f {
        Raw::True | Raw::False => {}
        Raw::Atom(p, args, _) => {
            for (i, a) in args.iter().enumerate() {
                out(Some((p, i)), a);
            }
        }
        Raw::Guard(args) => args.iter().for_each(|a| out(None, a)),
        Raw::Not(a) => visit_args(a, out),
        Raw::And(v) | Raw::Or(v) => v.iter().for_each(|a| visit_args(a, out)),
        Raw::Implies(a, b) | Raw::Iff(a, b) => {
            visit_args(a, out);
            visit_args(b, out);
        }
    }
}

fn visit_atoms<'a>(f: &'a Raw, out: &mut impl FnMut(&'a str, usize, usize)) {
    match f {
        Raw::Atom(p, args, col) => out(p, args.len(), *col),
        Raw::True | Raw::False | Raw::Guard(_) => {}
        Raw::Not(a) => visit_atoms(a, out),
        Raw::And(v) | Raw::Or(v) => v.iter().for_each(|a| visit_atoms(a, out)),
        Raw::Implies(a, b) | Raw::Iff(a, b) => {
            visit_atoms(a, out);
            visit_atoms(b, out);
        }
    }
}

/// Predicate arities and argument types.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub arity: BTreeMap<String, usize>,
    pub types: BTreeMap<(String, usize), String>,
}

impl Signature {
    fn check_arity(&mut self, p: &str, n: usize) -> Result<()> {
        match self.arity.get(p) {
            Some(&m) if m != n => Err(Error::ArityConflict {
                predicate: p.to_string(),
                expected: m,
                found: n,
            }),
            _ => {
                self.arity.insert(p.to_string(), n);
                Ok(())
            }
        }
    }

    /// Signature of an MLN's formulas.
    pub fn of_mln(m: &Mln) -> Result<Signature> {
        Self::of(m.soft.iter().map(|w| &w.formula).chain(&m.hard), &m.domain)
    }

    /// Signature implied by typed formulas and a domain.
    pub fn of<'a>(
        formulas: impl IntoIterator<Item = &'a Formula>,
        domain: &TypedDomain,
    ) -> Result<Signature> {
        let mut s = Signature::default();
        for f in formulas {
            let mut atoms = Vec::new();
            f.visit_atoms(&mut |a| atoms.push(a.clone()));
            for a in atoms {
                s.check_arity(&a.predicate, a.arity())?;
                for (i, t) in a.args.iter().enumerate() {
                    let ty = match t {
                        Term::Var(v) => Some(v.ty.clone()),
                        Term::Const(c) => domain.type_of(c).map(str::to_string),
                    };
                    if let Some(ty) = ty {
                        s.types.entry((a.predicate.clone(), i)).or_insert(ty);
                    }
                }
            }
        }
        Ok(s)
    }

    /// Add the constants of `atoms` to `domain`, typed by argument position.
    pub fn extend_domain<'a>(
        &self,
        domain: &mut TypedDomain,
        atoms: impl IntoIterator<Item = &'a Atom>,
    ) -> Result<()> {
        for a in atoms {
            for (i, t) in a.args.iter().enumerate() {
                let Term::Const(c) = t else {
                    return Err(Error::NotGround(a.to_string()));
                };
                if domain.type_of(c).is_none() {
                    let ty = self
                        .types
                        .get(&(a.predicate.clone(), i))
                        .map_or(DEFAULT_TYPE, String::as_str);
                    domain.add(ty, c)?;
                }
            }
        }
        Ok(())
    }
}

/// Resolves argument types across a document by propagating through
/// predicate positions and shared variable names.
struct Typing {
    sig: Signature,
    declared: bool,
    domain: TypedDomain,
    /// Compiled theories may place several partition classes of one type
    /// at the same position; positions then only fill untyped slots.
    mixed_positions: bool,
}

impl Typing {
    fn unify(slot: &mut Option<String>, ty: &str, what: &str) -> Result<bool> {
        match slot {
            Some(t) if t != ty => Err(Error::TypeConflict(format!("{what} is both `{t}` and `{ty}`"))),
            Some(_) => Ok(false),
            None => {
                *slot = Some(ty.to_string());
                Ok(true)
            }
        }
    }

    fn check_tag(&self, ty: &str) -> Result<()> {
        if self.declared && !self.domain.has_type(ty) {
            return Err(Error::UnknownType(ty.to_string()));
        }
        Ok(())
    }

    fn resolve(&mut self, formulas: &[(usize, Raw)]) -> Result<Vec<BTreeMap<String, String>>> {
        let mut vars: Vec<BTreeMap<String, Option<String>>> = vec![BTreeMap::new(); formulas.len()];
        let mut consts: BTreeMap<String, Option<String>> = BTreeMap::new();
        for (line, f) in formulas {
            let mut err = None;
            visit_atoms(f, &mut |p, n, col| {
                if err.is_none() {
                    if let Err(e) = self.sig.check_arity(p, n) {
                        err = Some(match e {
                            Error::ArityConflict { .. } => syntax(*line, col, e.to_string()),
                            e => e,
                        });
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        let mut positions: BTreeMap<(String, usize), Option<String>> = BTreeMap::new();
        loop {
            let mut changed = false;
            for (k, (_, f)) in formulas.iter().enumerate() {
                let mut args = Vec::new();
                visit_args(f, &mut |pos, a| args.push((pos, a)));
                for (pos, a) in args {
                    let slot: &mut Option<String> = if a.is_var() {
                        vars[k].entry(a.name.clone()).or_default()
                    } else {
                        consts
                            .entry(a.name.clone())
                            .or_insert_with(|| self.domain.type_of(&a.name).map(str::to_string))
                    };
                    if let Some(ty) = &a.ty {
                        self.check_tag(ty)?;
                        changed |= Self::unify(slot, ty, &format!("`{}`", a.name))?;
                    }
                    if let Some((p, i)) = pos {
                        let ps = positions.entry((p.to_string(), i)).or_default();
                        let what = format!("argument {} of `{p}`", i + 1);
                        if let Some(ty) = slot.clone() {
                            match Self::unify(ps, &ty, &what) {
                                Err(_) if self.mixed_positions => {}
                                r => changed |= r?,
                            }
                        }
                        if let Some(ty) = ps.clone() {
                            if !(self.mixed_positions && slot.is_some()) {
                                changed |= Self::unify(slot, &ty, &format!("`{}`", a.name))?;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for ((p, i), ty) in positions {
            self.sig
                .types
                .insert((p, i), ty.unwrap_or_else(|| DEFAULT_TYPE.into()));
        }
        for (c, ty) in consts {
            if self.domain.type_of(&c).is_none() {
                self.domain.add(ty.as_deref().unwrap_or(DEFAULT_TYPE), &c)?;
            }
        }
        Ok(vars
            .into_iter()
            .map(|m| {
                m.into_iter()
                    .map(|(v, t)| (v, t.unwrap_or_else(|| DEFAULT_TYPE.into())))
                    .collect()
            })
            .collect())
    }
}

fn build(f: &Raw, vars: &BTreeMap<String, String>) -> Formula {
    let term = |a: &RawArg| {
        if a.is_var() {
            Term::Var(Var::new(&a.name, &vars[&a.name]))
        } else {
            Term::Const(a.name.clone())
        }
    };
    match f {
        Raw::True => Formula::True,
        Raw::False => Formula::False,
        Raw::Atom(p, args, _) => Formula::atom(Atom::new(p, args.iter().map(term).collect())),
        Raw::Guard(args) => Formula::Distinct(args.iter().map(term).collect()),
        Raw::Not(a) => Formula::not(build(a, vars)),
        Raw::And(v) => Formula::And(v.iter().map(|a| build(a, vars)).collect()),
        Raw::Or(v) => Formula::Or(v.iter().map(|a| build(a, vars)).collect()),
        Raw::Implies(a, b) => Formula::implies(build(a, vars), build(b, vars)),
        Raw::Iff(a, b) => Formula::iff(build(a, vars), build(b, vars)),
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

/// `@type tag: c1, c2`; returns false for other lines.
fn directive_type(line: &str, n: usize, domain: &mut TypedDomain) -> Result<bool> {
    let Some(rest) = line.trim().strip_prefix("@type") else {
        return Ok(false);
    };
    let (tag, list) = rest.split_once(':').unwrap_or((rest, ""));
    let tag = tag.trim();
    if tag.is_empty() || !tag.chars().all(is_ident) {
        return Err(syntax(n, 1, "expected `@type tag: c1, c2, ...`"));
    }
    domain.declare(tag);
    for c in list.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        if !c.chars().all(is_ident) || c.starts_with(|ch: char| ch.is_uppercase()) {
            return Err(syntax(n, 1, format!("invalid constant `{c}`")));
        }
        domain.add(tag, c)?;
    }
    Ok(true)
}

fn parse_rational(s: &str) -> Option<Rational64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (i64, i64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (b != 0).then(|| Rational64::new(a, b));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: i64 = if digits.is_empty() {
        0
    } else {
        digits.parse().ok()?
    };
    let den = 10i64.checked_pow(frac.len() as u32)?;
    let r = Rational64::new(num, den);
    Some(if neg { -r } else { r })
}

/// Parse an MLN document. Weights stay as written; call
/// [`Mln::normalize`] to flip negative ones.
pub fn parse_mln(text: &str) -> Result<Mln> {
    let mut domain = TypedDomain::new();
    let mut declared = false;
    let mut rules: Vec<(Option<Rational64>, (usize, Raw))> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let n = i + 1;
        let line = strip_comment(raw_line);
        if line.trim().is_empty() {
            continue;
        }
        if directive_type(line, n, &mut domain)? {
            declared = true;
            continue;
        }
        let Some((w, body)) = line.split_once("::") else {
            return Err(syntax(n, 1, "expected `<weight> :: <formula>`"));
        };
        let weight = if w.trim() == "inf" {
            None
        } else {
            Some(parse_rational(w).ok_or_else(|| {
                let col = w.len() - w.trim_start().len() + 1;
                syntax(n, col, format!("invalid weight `{}`", w.trim()))
            })?)
        };
        let offset = w.chars().count() + 2;
        rules.push((weight, (n, parse_raw(body, n, offset)?)));
    }
    let mut typing = Typing {
        sig: Signature::default(),
        declared,
        domain,
        mixed_positions: false,
    };
    let raws: Vec<(usize, Raw)> = rules.iter().map(|(_, r)| r.clone()).collect();
    let vars = typing.resolve(&raws)?;
    let mut m = Mln::new();
    for ((weight, (_, raw)), vs) in rules.iter().zip(&vars) {
        let f = build(raw, vs);
        match weight {
            Some(w) => m.soft.push(WeightedFormula::new(f, *w)),
            None => m.hard.push(f),
        }
    }
    m.domain = typing.domain;
    Ok(m)
}

fn printer_for(domain: &TypedDomain) -> FormulaPrinter {
    FormulaPrinter {
        show_types: domain.types().any(|(t, _)| t != DEFAULT_TYPE),
    }
}

fn render_domain(domain: &TypedDomain, out: &mut String) {
    for (ty, cs) in domain.types() {
        if cs.is_empty() {
            let _ = writeln!(out, "@type {ty}:");
        } else {
            let _ = writeln!(out, "@type {ty}: {}", cs.join(", "));
        }
    }
}

/// Render an MLN in the input grammar.
pub fn render_mln(m: &Mln) -> String {
    let p = printer_for(&m.domain);
    let mut out = String::new();
    render_domain(&m.domain, &mut out);
    for w in &m.soft {
        let _ = writeln!(out, "{} :: {}", w.weight, p.formula(&w.formula));
    }
    for h in &m.hard {
        let _ = writeln!(out, "inf :: {}", p.formula(h));
    }
    out
}

fn literal_of(f: &Formula, line: usize) -> Result<Literal> {
    if !f.is_ground() {
        return Err(Error::NotGround(f.to_string()));
    }
    let lit = Literal::from_formula(f).ok_or_else(|| syntax(line, 1, "expected a literal"))?;
    if !lit.atom.is_ground() {
        return Err(Error::NotGround(lit.atom.to_string()));
    }
    Ok(lit)
}

fn parse_line_formula(line: &str, n: usize) -> Result<Formula> {
    let raw = parse_raw(line, n, 0)?;
    let mut vars = BTreeMap::new();
    visit_args(&raw, &mut |_, a| {
        if a.is_var() {
            vars.insert(
                a.name.clone(),
                a.ty.clone().unwrap_or_else(|| DEFAULT_TYPE.into()),
            );
        }
    });
    Ok(build(&raw, &vars))
}

/// One ground literal per line.
pub fn parse_evidence(text: &str) -> Result<EvidenceSet> {
    let mut lits = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = strip_comment(line);
        if line.trim().is_empty() {
            continue;
        }
        lits.push(literal_of(&parse_line_formula(line, i + 1)?, i + 1)?);
    }
    Ok(EvidenceSet::from_literals(&lits))
}

/// One evidence set per line, written as a conjunction of ground literals.
pub fn parse_evidence_family(text: &str) -> Result<Vec<EvidenceSet>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = strip_comment(line);
        if line.trim().is_empty() {
            continue;
        }
        let f = parse_line_formula(line, i + 1)?;
        let parts = match f {
            Formula::And(v) => v,
            f => vec![f],
        };
        let lits: Vec<Literal> = parts
            .iter()
            .map(|p| literal_of(p, i + 1))
            .collect::<Result<_>>()?;
        out.push(EvidenceSet::from_literals(&lits));
    }
    Ok(out)
}

/// A ground formula typed against nothing: variables are rejected.
pub fn parse_query(text: &str) -> Result<Formula> {
    let f = parse_line_formula(text, 1)?;
    if !f.is_ground() {
        return Err(Error::NotGround(text.trim().to_string()));
    }
    Ok(f)
}

fn parse_level(s: &str, n: usize, col: usize) -> Result<Level> {
    let s = s.trim();
    match s {
        "1" => Ok(Level::Hard),
        "lbot" => Ok(Level::Bottom),
        _ => s
            .strip_prefix('l')
            .and_then(parse_rational)
            .map(Level::Finite)
            .ok_or_else(|| syntax(n, col, format!("invalid level `{s}`"))),
    }
}

/// Parse a theory written by [`render_theory`].
pub fn parse_theory(text: &str) -> Result<PossTheory> {
    let mut domain = TypedDomain::new();
    let mut declared = false;
    let mut display = DisplayParams::default();
    let mut rows: Vec<((usize, Raw), Level)> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let n = i + 1;
        let line = strip_comment(raw_line);
        if line.trim().is_empty() {
            continue;
        }
        if directive_type(line, n, &mut domain)? {
            declared = true;
            continue;
        }
        if let Some(rest) = line.trim().strip_prefix("@display") {
            let parts: Vec<Option<Rational64>> = rest.split_whitespace().map(parse_rational).collect();
            match parts.as_slice() {
                [Some(k), Some(l)] if !l.is_zero() => display = DisplayParams::new(*k, *l),
                _ => return Err(syntax(n, 1, "expected `@display K L`")),
            }
            continue;
        }
        let trimmed = line.trim_end();
        let start = line.len() - line.trim_start().len();
        let inner = trimmed[start..]
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| syntax(n, start + 1, "expected `(<formula>, <level>)`"))?;
        let comma = inner
            .rfind(',')
            .ok_or_else(|| syntax(n, start + 1, "missing level"))?;
        let level = parse_level(&inner[comma + 1..], n, start + comma + 3)?;
        let body = &inner[..comma];
        rows.push(((n, parse_raw(body, n, start + 1)?), level));
    }
    let mut typing = Typing {
        sig: Signature::default(),
        declared,
        domain,
        mixed_positions: true,
    };
    let raws: Vec<(usize, Raw)> = rows.iter().map(|(r, _)| r.clone()).collect();
    let vars = typing.resolve(&raws)?;
    let mut t = PossTheory::new();
    for (((_, raw), level), vs) in rows.iter().zip(&vars) {
        t.push(build(raw, vs), *level);
    }
    t.domain = typing.domain;
    t.display = display;
    Ok(t)
}

/// Text of a formula as printed in theories: clauses with guards last,
/// anything else in the input grammar.
pub fn formula_text(f: &Formula, p: &FormulaPrinter) -> String {
    match f.to_nnf().ok().and_then(|n| n.as_clause()) {
        Some(mut lits) if !matches!(f, Formula::True) => {
            lits.sort();
            lits.dedup();
            p.clause(&lits)
        }
        _ => p.formula(f),
    }
}

/// Render a theory: directives, then one `(formula, level)` line per
/// formula sorted by level and text. With `weights`, each line carries its
/// numeric weight as a trailing comment.
pub fn render_theory(t: &PossTheory, weights: bool) -> String {
    let p = printer_for(&t.domain);
    let mut out = String::new();
    if t.is_empty() {
        return out;
    }
    render_domain(&t.domain, &mut out);
    let _ = writeln!(out, "@display {} {}", t.display.k, t.display.l);
    let mut lines: Vec<(Level, String)> = t
        .formulas
        .iter()
        .map(|pf| (pf.level, formula_text(&pf.formula, &p)))
        .collect();
    lines.sort();
    for (level, text) in lines {
        if weights {
            let w = t.display.weight(level).to_f64().unwrap_or(f64::NAN);
            let _ = writeln!(out, "({text}, {level})  # {w:.4}");
        } else {
            let _ = writeln!(out, "({text}, {level})");
        }
    }
    out
}

/// Atoms appearing in a set of formulas, in first-occurrence order.
pub fn atoms_of<'a>(fs: impl IntoIterator<Item = &'a Formula>) -> Vec<Atom> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for f in fs {
        f.visit_atoms(&mut |a| {
            if seen.insert(a.clone()) {
                out.push(a.clone());
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_and_hard_rules() {
        let m = parse_mln("10 :: bird(X) -> flies(X)\ninf :: !f(A,A)\n").unwrap();
        assert_eq!(m.soft.len(), 1);
        assert_eq!(m.soft[0].weight, Rational64::from_integer(10));
        assert_eq!(m.soft[0].formula.to_string(), "bird(X) -> flies(X)");
        assert_eq!(m.hard.len(), 1);
        assert_eq!(m.soft[0].formula.vars()[0].ty, DEFAULT_TYPE);
    }

    #[test]
    fn negative_weight_then_normalize() {
        let m = parse_mln("@type cat: net\n@type pap:\n-3 :: category(pap:P, cat:net)\n").unwrap();
        assert_eq!(m.soft[0].weight, Rational64::from_integer(-3));
        let n = m.normalize();
        assert_eq!(n.soft[0].weight, Rational64::from_integer(3));
        assert_eq!(n.soft[0].formula.to_string(), "!category(P,net)");
    }

    #[test]
    fn decimal_weights_are_exact() {
        assert_eq!(parse_rational("0.14"), Some(Rational64::new(7, 50)));
        assert_eq!(parse_rational("-3"), Some(Rational64::from_integer(-3)));
        assert_eq!(parse_rational("1/3"), Some(Rational64::new(1, 3)));
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn types_propagate_through_positions() {
        let m =
            parse_mln("@type per: anna\n@type pap:\n1 :: wrote(per:A, B) -> ref(B, B)\n1 :: wrote(C, p1)\n")
                .unwrap();
        let vars = m.soft[1].formula.vars();
        assert_eq!(vars[0].ty, "per");
        assert_eq!(m.domain.type_of("p1"), Some(DEFAULT_TYPE));
    }

    #[test]
    fn syntax_errors_have_positions() {
        match parse_mln("1 :: a &\n") {
            Err(Error::Syntax { line: 1, column, .. }) => assert_eq!(column, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_mln("1 :: p(a) | p(a,b)\n"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_mln("@type t: a\n1 :: p(u:X)\n"),
            Err(Error::UnknownType(_))
        ));
    }

    #[test]
    fn evidence_literals() {
        let e = parse_evidence("bird(tweety)\n!flies(tweety)\n").unwrap();
        assert_eq!(e.to_string(), "{bird(tweety), !flies(tweety)}");
        assert!(matches!(parse_evidence("flies(X)\n"), Err(Error::NotGround(_))));
    }

    #[test]
    fn theory_round_trip() {
        let text = "(!a | x, l5)\n(a & b -> x, lbot)\n(!f(A,A), 1)\n";
        let t = parse_theory(text).unwrap();
        let again = parse_theory(&render_theory(&t, true)).unwrap();
        assert_eq!(again.len(), 3);
        assert_eq!(render_theory(&t, false), render_theory(&again, false));
        assert_eq!(render_theory(&PossTheory::new(), true), "");
    }
}
