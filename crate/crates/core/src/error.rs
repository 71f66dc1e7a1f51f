use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument lies outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// The scenario itself breaks one of its invariants.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("infeasible assignment: {}", format_violations(.0))]
    Infeasible(Vec<Violation>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("instance too large for enumeration: {size} assignments exceeds cap {cap}")]
    SizeCap { size: f64, cap: u64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid spec: {0}")]
    Spec(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by bad user input rather than by the environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Write { .. } | Error::Csv(_))
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
