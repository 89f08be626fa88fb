use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("operator is not anti-Hermitian (max deviation {deviation:.3e})")]
    NotAntiHermitian { deviation: f64 },
    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("operator dimension {dim} exceeds the dense limit {limit}")]
    DimTooLarge { dim: usize, limit: usize },
    #[error("empty operator list")]
    EmptyList,
    #[error("invalid entries: expected {expected} values, got {got}")]
    BadEntries { expected: usize, got: usize },

    #[error("model too small: n = {n}, need at least {min}")]
    TooSmall { n: usize, min: usize },
    #[error("{n} sites do not form a {d}-dimensional square lattice")]
    NotLattice { n: usize, d: usize },
    #[error("Hamiltonian carries no grouping labels")]
    NoGrouping,
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("duplicate powers in MPF scheme")]
    DuplicatePowers,
    #[error("order-condition system is singular: {0}")]
    SingularSystem(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("expected a positive value for {0}")]
    NonPositive(&'static str),
    #[error("unsupported base order {0}; expected 1 or an even order")]
    BadBaseOrder(usize),

    #[error("not a permutation of 1..={0}")]
    NotPermutation(usize),
    #[error("depth {depth} exceeds the enumeration cap {cap}")]
    DepthCap { depth: usize, cap: usize },
    #[error("depth {0} is even; the symmetric term vanishes identically")]
    EvenDepth(usize),
    #[error("convergence premise violated: {0}")]
    ConvergenceRisk(String),
    #[error("enumeration work {work} exceeds budget {budget}")]
    WorkBudget { work: u128, budget: u128 },

    #[error("alpha_comm depth {depth} exceeds the enumeration budget; capped fallback {fallback:.6e}")]
    BudgetExceeded { depth: usize, fallback: f64 },
    #[error("alpha_comm missing at depth {0}")]
    MissingAlpha(usize),
    #[error("composition enumeration too large (j = {0})")]
    PartitionBlowup(usize),
    #[error("parameters outside the analytic regime: {0}")]
    BadRegime(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("step premise violated: {0}")]
    PremiseViolated(String),
    #[error("no step count below the cap {cap} reaches the target error")]
    Infeasible { cap: u64 },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
