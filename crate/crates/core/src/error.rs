use thiserror::Error;

/// Errors surfaced by the library. Every message names the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("{name} must be finite")]
    NonFinite { name: &'static str },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix must be exactly symmetric; entries ({row},{col}) and ({col},{row}) differ")]
    AsymmetricMatrix { row: usize, col: usize },

    #[error(
        "grid cap exceeded: more than {cap} lattice points at radius {radius}, spacing {spacing}, rank {rank}"
    )]
    GridCapExceeded {
        cap: usize,
        radius: f64,
        spacing: f64,
        rank: usize,
    },

    #[error("exact summation cap exceeded: {terms} terms > {cap}")]
    SummationCapExceeded { terms: u128, cap: u128 },

    #[error("score oracle returned a non-finite value at sigma={sigma}, |x|={x_norm}")]
    ScoreNotFinite { sigma: f64, x_norm: f64 },

    #[error("{name} must be nonempty")]
    Empty { name: &'static str },

    #[error("supports cannot be aligned: distinct atoms collide at rounding key {key:?}")]
    AmbiguousSupport { key: Vec<i64> },

    #[error("exact transport cap exceeded: {left} x {right} support points > {cap}")]
    TransportSizeCap {
        left: usize,
        right: usize,
        cap: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
