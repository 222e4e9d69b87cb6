use thiserror::Error;

use crate::arm::Arm;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// One entry per violated constraint.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("arm {arm} has no observations")]
    MissingArm { arm: Arm },

    #[error("arm {arm} has a single observation (leverage 1, HC3 undefined)")]
    UnitLeverage { arm: Arm },

    #[error("bootstrap draw {draw}: {source}")]
    BootstrapDraw {
        draw: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("target {target} outside bracket [{lo}, {hi}]")]
    Bracket { target: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matched set for user {user} is empty")]
    EmptyMatchedSet { user: usize },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    Row { row: u64, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Bracket { .. } => ErrorClass::Config,
            Error::MissingArm { .. }
            | Error::UnitLeverage { .. }
            | Error::MissingColumn(_)
            | Error::Row { .. }
            | Error::Dimension(_)
            | Error::EmptyMatchedSet { .. }
            | Error::Io(_)
            | Error::Csv(_) => ErrorClass::Data,
            Error::Degenerate(_) | Error::Numerical(_) => ErrorClass::Numerical,
            Error::BootstrapDraw { source, .. } => source.class(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// Collects constraint violations so validation can report all of them at once.
#[derive(Debug, Default)]
pub(crate) struct Violations(Vec<String>);

impl Violations {
    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }

    pub fn extend(&mut self, other: Result<()>) {
        match other {
            Ok(()) => {}
            Err(Error::Config(v)) => self.0.extend(v),
            Err(e) => self.0.push(e.to_string()),
        }
    }

    pub fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(self.0))
        }
    }
}
