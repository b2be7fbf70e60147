use thiserror::Error;

/// Errors produced by the geometric image library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected d={expected}, found d={found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("tensor spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("invalid permutation: {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("invalid component count: expected {expected}, found {found}")]
    ComponentCount { expected: usize, found: usize },

    #[error("unsupported sidelength {0}: group actions need an odd sidelength")]
    UnsupportedSidelength(usize),

    #[error("filter sidelength {0} must be odd")]
    EvenFilter(usize),

    #[error("pooling factor {factor} does not divide sidelength {sidelength}")]
    PoolFactor { factor: usize, sidelength: usize },

    #[error("invalid parity {0}; expected +1 or -1")]
    InvalidParity(i64),

    #[error("zero filter cannot be normalized")]
    ZeroFilter,

    #[error("non-finite value in input")]
    NonFinite,

    #[error("series has no reciprocal: zero constant term")]
    SeriesNotInvertible,

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid parameter vector: expected {expected} values, found {found}")]
    ParamCount { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
