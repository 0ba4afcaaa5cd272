use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric positive definite (failed at pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("nuisance design is rank deficient: rank {rank} < q = {q}")]
    RankDeficientNuisance { rank: usize, q: usize },
    #[error("residualized column {column} is degenerate (norm {norm:e})")]
    DegenerateColumn { column: usize, norm: f64 },
    #[error("residual vector is numerically zero; statistic undefined")]
    ZeroResidual,
    #[error("evidence entry {index} is not finite and non-negative")]
    NonFiniteEvidence { index: usize },
    #[error("k = {k} outside 1..={m}")]
    KOutOfRange { k: usize, m: usize },
    #[error("joint order-statistic arguments must be non-increasing")]
    UnorderedArguments,
    #[error("joint order-statistic CDF supports at most 6 arguments, got {k}")]
    KTooLarge { k: usize },
    #[error("p-value {value} at index {index} is outside (0, 1)")]
    PValueOutOfRange { index: usize, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
