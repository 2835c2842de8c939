use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("truncation mismatch: {0} vs {1}")]
    TruncationMismatch(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    /// `p^e` exceeds the truncation degree, so the requested quantity is not
    /// determined by jets of order `T`.
    #[error("censored: p^{e} = {power} exceeds truncation {truncation}")]
    Censored {
        e: u32,
        power: u64,
        truncation: usize,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("inconsistent filtration: {0}")]
    Inconsistent(String),

    #[error("purification system singular at entry {entry}: rank {rank} < {unknowns}")]
    PurificationSingular {
        entry: usize,
        rank: usize,
        unknowns: usize,
    },

    #[error("coordinates are not weakly associated to the generator system")]
    NotWeaklyAssociated,

    #[error("not a leading generator system: {0}")]
    NotLgs(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
