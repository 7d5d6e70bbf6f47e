//! Command-line surface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use crate::error::{Error, Result};
use crate::io::{
    parse_evidence, parse_evidence_family, parse_mln, parse_query, parse_theory, render_theory, Signature,
};
use crate::lifted::{interchangeable_partition, transform_lifted, working_domain, Blocking, LiftedOptions};
use crate::logic::{Atom, Formula};
use crate::map::{EvidenceSet, MapEngine, Mln, Penalty};
use crate::oracle::{
    random_corpus, verify_default, verify_lifted_matches_ground, verify_prop1, verify_ranking,
};
use crate::oracle::{verify_short_blocking, EquivalenceReport};
use crate::poss::PossEngine;
use crate::transforms::{
    transform_default, transform_evidence, transform_exact, DefaultOptions, EvidenceFamily, EXACT_CAP,
};

pub const EXIT_TRUE: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "mapposs",
    version,
    about = "Compile Markov logic networks into possibilistic logic"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Evidence,
    Default,
    Lifted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BlockingArg {
    Full,
    Short,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Prop1,
    Ranking,
    Equivalence,
    Lifted,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compile an MLN into a possibilistic theory.
    Compile {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(short = 'k', default_value_t = 1)]
        k: usize,
        #[arg(long)]
        evidence_family: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "full")]
        blocking: BlockingArg,
        /// Constants per type while compiling lifted theories.
        #[arg(long)]
        domain_size: Option<usize>,
        /// Keep formulas entailed by shorter ones (lifted).
        #[arg(long)]
        keep_redundant: bool,
        /// Disable consequent pruning (default and lifted).
        #[arg(long)]
        no_pruning: bool,
        /// Cap on soft formulas for the exact method.
        #[arg(long, default_value_t = EXACT_CAP)]
        cap: usize,
        /// Append numeric weights as comments.
        #[arg(long)]
        weights: bool,
        mln: PathBuf,
    },
    /// MAP entailment of a formula under evidence.
    QueryMap {
        mln: PathBuf,
        #[arg(long)]
        evidence: Option<PathBuf>,
        #[arg(long)]
        query: String,
    },
    /// Possibilistic entailment of a formula under evidence.
    QueryPoss {
        theory: PathBuf,
        #[arg(long)]
        evidence: Option<PathBuf>,
        #[arg(long)]
        query: String,
    },
    /// Run an equivalence suite on seeded random or built-in MLNs.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
    /// Print the interchangeability classes of an MLN's constants.
    Partition {
        mln: PathBuf,
        #[arg(short = 'k', default_value_t = 1)]
        k: usize,
        #[arg(long)]
        domain_size: Option<usize>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn read_evidence(path: &Option<PathBuf>) -> Result<EvidenceSet> {
    match path {
        Some(p) => parse_evidence(&read(p)?),
        None => Ok(EvidenceSet::empty()),
    }
}

fn atoms_of(e: &EvidenceSet, q: &Formula) -> Vec<Atom> {
    let mut out: Vec<Atom> = e.atoms().into_iter().cloned().collect();
    q.visit_atoms(&mut |a| out.push(a.clone()));
    out
}

const BIRDS: &str = "10 :: bird(X) -> flies(X)\n1 :: antarctic(X) -> !flies(X)\n\
10 :: heavy(X) -> !flies(X)\n100 :: hasJetPack(X) -> flies(X)\n";
const SMOKERS: &str = "inf :: !f(A,B) | f(B,A)\ninf :: !f(A,A)\n\
10 :: !s(A) | !f(A,B) | s(B)\n10 :: !s(A) | c(A)\n";

fn run_command(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    let w = |out: &mut dyn Write, s: &str| {
        out.write_all(s.as_bytes())
            .map_err(|e| Error::Invalid(format!("write failed: {e}")))
    };
    match cmd {
        Command::Compile {
            method,
            k,
            evidence_family,
            blocking,
            domain_size,
            keep_redundant,
            no_pruning,
            cap,
            weights,
            mln,
        } => {
            let m = parse_mln(&read(&mln)?)?.normalize();
            let ground = |m: &Mln| if m.is_ground() { Ok(m.clone()) } else { m.ground() };
            let t = match method {
                Method::Exact => transform_exact(&ground(&m)?, cap)?,
                Method::Evidence => {
                    let path = evidence_family
                        .ok_or_else(|| Error::Invalid("--evidence-family is required".into()))?;
                    let fam = parse_evidence_family(&read(&path)?)?;
                    transform_evidence(&ground(&m)?, &EvidenceFamily::Explicit(fam))?
                }
                Method::Default => {
                    let opts = if no_pruning {
                        DefaultOptions::unpruned()
                    } else {
                        DefaultOptions::default()
                    };
                    transform_default(&ground(&m)?, k, opts)?
                }
                Method::Lifted => {
                    let opts = LiftedOptions {
                        blocking: match blocking {
                            BlockingArg::Full => Blocking::Full,
                            BlockingArg::Short => Blocking::Short,
                        },
                        domain_size,
                        rational_monotonicity: !no_pruning,
                        filter_redundant: !keep_redundant,
                    };
                    transform_lifted(&m, k, opts)?
                }
            };
            info!("{} formulas", t.len());
            w(out, &render_theory(&t, weights))?;
            Ok(EXIT_TRUE)
        }
        Command::QueryMap { mln, evidence, query } => {
            let mut m = parse_mln(&read(&mln)?)?.normalize();
            let e = read_evidence(&evidence)?;
            let q = parse_query(&query)?;
            if !m.is_ground() {
                let sig = Signature::of_mln(&m)?;
                sig.extend_domain(&mut m.domain, &atoms_of(&e, &q))?;
                m = m.ground()?;
            }
            let engine = MapEngine::new(&m)?;
            if engine.penalty(&e)? == Penalty::Infinite {
                return Err(Error::InconsistentEvidence);
            }
            let yes = engine.map_entails(&e, &q)?;
            w(out, if yes { "true\n" } else { "false\n" })?;
            Ok(if yes { EXIT_TRUE } else { EXIT_FALSE })
        }
        Command::QueryPoss {
            theory,
            evidence,
            query,
        } => {
            let mut t = parse_theory(&read(&theory)?)?;
            let e = read_evidence(&evidence)?;
            let q = parse_query(&query)?;
            if !t.is_ground() {
                let sig = Signature::of(t.formulas.iter().map(|f| &f.formula), &t.domain)?;
                let mut d = t.domain.clone();
                sig.extend_domain(&mut d, &atoms_of(&e, &q))?;
                t = t.ground_over(&d)?;
            }
            let yes = PossEngine::new(&t)?.poss_entails(&e, &q)?;
            w(out, if yes { "true\n" } else { "false\n" })?;
            Ok(if yes { EXIT_TRUE } else { EXIT_FALSE })
        }
        Command::Verify { suite, seed, count } => {
            let mut report = EquivalenceReport::default();
            match suite {
                Suite::Prop1 | Suite::Ranking | Suite::Equivalence => {
                    for m in random_corpus(seed, count) {
                        report.merge(match suite {
                            Suite::Prop1 => verify_prop1(&m)?,
                            Suite::Ranking => verify_ranking(&m)?,
                            _ => verify_default(&m, 2)?,
                        });
                    }
                }
                Suite::Lifted => {
                    for text in [BIRDS, SMOKERS] {
                        let m = parse_mln(text)?;
                        for n in [2, 3] {
                            report.merge(verify_lifted_matches_ground(&m, 2, Some(n))?);
                        }
                        report.merge(verify_short_blocking(&m, 2, 2)?);
                    }
                }
            }
            w(out, &report.to_string())?;
            Ok(if report.passed() { EXIT_TRUE } else { EXIT_FALSE })
        }
        Command::Partition { mln, k, domain_size } => {
            let m = parse_mln(&read(&mln)?)?.normalize();
            let work = working_domain(&m, k, domain_size)?;
            let classes = interchangeable_partition(
                &Mln {
                    domain: work.clone(),
                    ..m
                },
                &work,
            );
            for (ty, cs) in classes.types() {
                w(out, &format!("{ty}: {}\n", cs.join(", ")))?;
            }
            Ok(EXIT_TRUE)
        }
    }
}

/// Run with `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_TRUE,
                _ => EXIT_USAGE,
            };
        }
    };
    match run_command(cli.command, out) {
        Ok(code) => code,
        Err(Error::InconsistentEvidence) => {
            let _ = writeln!(err, "error: {}", Error::InconsistentEvidence);
            EXIT_INCONSISTENT
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
