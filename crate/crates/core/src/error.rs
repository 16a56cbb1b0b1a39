use thiserror::Error;

/// Oracle families a concept class may expose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleKind {
    Consistency,
    WeakErm,
    RangeConsistency,
    StrongErm,
}

impl std::fmt::Display for OracleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OracleKind::Consistency => "consistency",
            OracleKind::WeakErm => "weak ERM",
            OracleKind::RangeConsistency => "range consistency",
            OracleKind::StrongErm => "strong ERM",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("class `{class}` does not provide a {oracle} oracle")]
    Capability { class: String, oracle: OracleKind },
    #[error("realizability violated: {0}")]
    Realizability(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
