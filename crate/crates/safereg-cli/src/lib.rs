//! Library side of the `safereg` command-line tool.

pub mod commands;
pub mod config;

use std::fmt;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Exit 2.
    Config(String),
    /// Exit 3.
    Numeric(String),
    /// Exit 4: the run finished but missed the safety acceptance rule.
    Unsafe(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) | Failure::Io(_) => 3,
            Failure::Unsafe(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Numeric(_) => "numeric",
            Failure::Unsafe(_) => "safety",
            Failure::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) | Failure::Unsafe(m) | Failure::Io(m) => m,
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.message() }).to_string()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for Failure {}

impl From<safereg::Error> for Failure {
    fn from(e: safereg::Error) -> Self {
        use safereg::Error as E;
        match e {
            E::Dimension(_)
            | E::SpectrumOffAxis { .. }
            | E::NotObservable(_)
            | E::Defective { .. }
            | E::BadCompanionForm(_)
            | E::NonpositiveGain(_)
            | E::NonpositiveSpeed { .. }
            | E::InvalidParameter(_)
            | E::CflViolation { .. }
            | E::NotHurwitz { .. }
            | E::OutOfHorizon { .. } => Failure::Config(e.to_string()),
            E::QuadratureFailure { .. }
            | E::KernelDomain(_)
            | E::FixedPointDiverged { .. }
            | E::DomainError { .. }
            | E::ZeroBarrier { .. }
            | E::NonFinite { .. }
            | E::Unresolved { .. } => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
