use thiserror::Error;

use crate::model::Diagnostic;
use crate::modelfmt::SourceSpan;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{span}: {message}")]
    Syntax { span: SourceSpan, message: String },

    #[error("invalid model: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),

    #[error("no value given for parameter {0}")]
    MissingParam(String),

    #[error("unknown parameter {0}")]
    UnknownParam(String),

    #[error("parameter {0} must be non-negative")]
    NegativeParam(String),

    #[error("scaling factor must be positive")]
    ZeroScale,

    #[error("{0} requires a parameter-free system; instantiate it first")]
    NotParameterFree(&'static str),

    #[error("constant with denominator {found} is not an integer multiple of 1/{denom}; scale the system first")]
    Denominator { denom: i64, found: i64 },

    #[error("{0} requires a finite bound")]
    InfiniteBound(&'static str),

    #[error("{what} cap of {cap} exceeded")]
    CapExceeded { what: &'static str, cap: usize },

    #[error("{0}")]
    Precondition(String),
}

impl Error {
    pub fn is_cap(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}
