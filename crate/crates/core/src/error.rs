use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse {0:?} as a rational (expected p/q or a decimal literal)")]
    ParseRational(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("problem size {cells} cells exceeds guard {cap} (set IOT_MAX_CELLS or raise the limit)")]
    SizeGuardExceeded { cells: usize, cap: usize },
    #[error("vertex enumeration exceeded cap of {cap} vertices")]
    VertexCapExceeded { cap: usize },
    #[error("plan is not a member of the transportation polytope: {0}")]
    PlanNotInPolytope(String),
    #[error("face has no vertices")]
    EmptyVertexSet,
    #[error("invalid observation set: {0}")]
    InvalidObservations(String),
    #[error("potentials are dual-infeasible at cell ({i}, {j})")]
    DualInfeasible { i: usize, j: usize },
    #[error("records {first} and {second} share marginals but disagree on the total cost")]
    ConflictingTotals { first: usize, second: usize },
    #[error("design matrix is rank deficient (kernel dimension {kernel_dim})")]
    RankDeficient { kernel_dim: usize },
    #[error("coordinate descent did not converge within {sweeps} sweeps")]
    NonConvergence { sweeps: usize },
    #[error("empty support set")]
    EmptySupportSet,
    #[error("{0}")]
    Unsupported(String),
}
