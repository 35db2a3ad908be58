use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown series {0:?}")]
    UnknownSeries(String),

    #[error("index {index} lies in a block that cannot be enumerated")]
    NonEnumerableBlock { index: u64 },

    #[error("{what}: scan budget of {budget} exhausted")]
    BudgetExceeded { what: &'static str, budget: u64 },

    #[error("basis vectors are colinear")]
    ColinearBasis,

    #[error("target is not strictly inside the cone")]
    ConeBoundary,

    #[error("directions do not cover the circle well enough: {0}")]
    InsufficientCoverage(String),

    #[error("series {0} has no reduction structure")]
    NotStructured(String),

    #[error("delta {delta} too large for stage {p}: delta*2^(p+1) must be < 1")]
    DeltaTooLarge { delta: f64, p: u32 },

    #[error("initial subsum search failed: best error {best}")]
    SearchFailed { best: f64 },

    #[error("size {size} exceeds the enumeration limit {max}")]
    TooLarge { size: u64, max: u64 },

    #[error("decomposition index sequence not strictly increasing at position {position}")]
    IndexNotIncreasing { position: u64 },

    #[error("toy block {block} violates base dominance")]
    DominanceViolated { block: usize },

    #[error("pool of {pool} candidates exhausted")]
    PoolExhausted { pool: u64 },

    #[error("region has zero area")]
    BadRegion,

    #[error("exponent too large: {0}")]
    ExponentTooLarge(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
