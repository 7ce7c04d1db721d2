use thiserror::Error;

use crate::linalg::IndexWindow;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("window mismatch: {left} vs {right}")]
    WindowMismatch { left: IndexWindow, right: IndexWindow },

    #[error("weight mismatch between operands")]
    WeightMismatch,

    #[error("invalid index window [{lo}, {hi}]")]
    InvalidWindow { lo: i64, hi: i64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry encountered")]
    NonFinite,

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("operator is not power bounded: norm estimate {norm:e} at power {power}")]
    NotPowerBounded { power: usize, norm: f64 },

    #[error("family is linearly dependent: numerical rank {rank} of {size} (condition {condition:e})")]
    DependentFamily { rank: usize, size: usize, condition: f64 },

    #[error("ladder needs at least {needed} rungs, got {got}")]
    LadderTooShort { needed: usize, got: usize },

    #[error("ladder must be strictly increasing")]
    LadderNotIncreasing,

    #[error("empty subspace basis")]
    EmptyBasis,

    #[error("angles must satisfy 0 < t_(n+1) < t_n <= 2*pi (violated at index {index})")]
    AngleMonotonicity { index: usize },

    #[error("eigenvalues are not pairwise distinct (indices {first} and {second})")]
    EigenvaluesNotDistinct { first: usize, second: usize },

    #[error("not enough eigenvalues: {eigenvalues} for a family of {family}")]
    NotEnoughEigenvalues { eigenvalues: usize, family: usize },

    #[error("parameter {name} out of range: {value}")]
    ParameterOutOfRange { name: &'static str, value: f64 },

    #[error("constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("clark atoms {first} and {second} collide")]
    AtomCollision { first: usize, second: usize },

    #[error("invalid clark measure: {0}")]
    InvalidMeasure(String),

    #[error("inner function invariant failed: {0}")]
    NotInner(String),

    #[error("clark measure does not represent the inner function (residual {residual:e})")]
    MeasureMismatch { residual: f64 },

    #[error("atom supports of the two clark measures differ")]
    UnequalSupports,

    #[error("point {0} is a boundary singularity of the inner function")]
    BoundarySingularity(String),

    #[error("phi0(0) vanishes")]
    ZeroPhi0,

    #[error("unimodular constant is not constant on the circle (variance {variance:e})")]
    NonconstantConstant { variance: f64 },

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("weight domination omega0(n) >= omega(n) fails at n = {n}")]
    WeightDomination { n: i64 },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("weight classification mismatch: {0}")]
    ClassifierMismatch(String),

    #[error("weight violates the eigenvector hypotheses: {0}")]
    WeightHypothesis(String),
}
