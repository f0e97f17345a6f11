use thiserror::Error;

use crate::schedule::Kind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} must be finite and non-negative, got {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("step {index} is {value}; steps must be finite and strictly positive")]
    InvalidStep { index: usize, value: f64 },

    #[error("{op} expects a {expected} schedule, got {found:?}")]
    Classification {
        op: &'static str,
        expected: &'static str,
        found: Kind,
    },

    #[error("schedule carries no construction tree")]
    MissingProvenance,

    #[error("certificate identity `{identity}` off by {residual:e} (relative)")]
    CertificateConstruction {
        identity: &'static str,
        residual: f64,
    },

    #[error("internal consistency check failed at n = {n}: {detail}")]
    InternalConsistency { n: usize, detail: String },

    #[error("midpoint split disagrees with full DP at n = {n}: full {full}, midpoint {midpoint}")]
    ConjectureViolation { n: usize, full: f64, midpoint: f64 },

    #[error("table covers n <= {available}, need n <= {needed}")]
    Range { needed: usize, available: usize },

    #[error("non-finite value or gradient at iterate {index}")]
    Divergence { index: usize },

    #[error("oracle does not provide {0}")]
    Capability(&'static str),

    #[error("worst-case gap {rel_gap:e} exceeds tolerance: achieved {achieved}, bound {bound}")]
    Tightness {
        achieved: f64,
        bound: f64,
        rel_gap: f64,
    },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },
}
