use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("an algebra needs at least one basis element")]
    EmptyBasis,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("basis is linearly dependent (smallest Gram eigenvalue {min_eigenvalue:.3e})")]
    LinearlyDependentBasis { min_eigenvalue: f64 },

    #[error(
        "span is not closed under products (residual {residual:.3e} for basis pair ({i}, {j}))"
    )]
    NotClosedUnderProduct { i: usize, j: usize, residual: f64 },

    #[error(
        "span is not closed under adjoints (residual {residual:.3e} for basis element {index})"
    )]
    NotClosedUnderAdjoint { index: usize, residual: f64 },

    #[error("span has no two-sided unit (residual {residual:.3e})")]
    NoUnit { residual: f64 },

    #[error("algebra mismatch: expected `{expected}`, found `{found}`")]
    AlgebraMismatch { expected: String, found: String },

    #[error("`{0}` is not a tensor product algebra")]
    NotATensorAlgebra(String),

    #[error("tensor factor mismatch: {0}")]
    FactorMismatch(String),

    #[error("functional is not a trace: {0}")]
    NotATrace(String),

    #[error("trace `{0}` is not faithful")]
    NotFaithful(String),

    #[error("trace is defined on `{trace}` but the channel targets `{target}`")]
    TraceMismatch { trace: String, target: String },

    #[error("source algebra `{0}` is not a full matrix algebra in the matrix-unit basis")]
    NotMatrixUnitsBasis(String),

    #[error("not a trace channel: {0}")]
    NotTraceChannel(String),

    #[error("invalid spectral triple: {0}")]
    InvalidTriple(String),

    #[error("grading required for the requested parity but the triple over `{0}` is odd")]
    GradingMissing(String),

    #[error("grading present on the triple over `{0}` but an odd triple was requested")]
    GradingUnexpected(String),

    #[error("seminorm has no single commutator representation: {0}")]
    SeminormNotCommutatorForm(String),

    #[error("solver stopped after {iterations} iterations with gap {gap:.3e}")]
    SolverDivergence { iterations: usize, gap: f64 },

    #[error("constraint is infeasible (range residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid cocycle: {0}")]
    InvalidCocycle(String),

    #[error("invalid length function: {0}")]
    InvalidLength(String),

    #[error("function is not positive definite (eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
