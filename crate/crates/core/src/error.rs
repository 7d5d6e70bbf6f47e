use thiserror::Error;

/// Errors raised by the engines, transformations and parsers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("predicate `{predicate}` used with arity {found}, previously {expected}")]
    ArityConflict {
        predicate: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown type tag `{0}`")]
    UnknownType(String),

    #[error("type conflict: {0}")]
    TypeConflict(String),

    #[error("type `{0}` has an empty domain")]
    EmptyDomain(String),

    #[error("atom `{0}` is outside the declared universe")]
    UnknownAtom(String),

    #[error("expected a ground formula, found variables in `{0}`")]
    NotGround(String),

    #[error("evidence is inconsistent with the hard constraints")]
    InconsistentEvidence,

    #[error("{what} exceeds the configured cap ({found} > {cap})")]
    CapExceeded {
        what: &'static str,
        found: usize,
        cap: usize,
    },

    #[error("set family contains an empty member; no hitting set exists")]
    EmptyMember,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
