use thiserror::Error;

/// Errors produced by the solvers, assemblers and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bad input: {0}")]
    BadInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("feasible set is empty")]
    Infeasible,

    #[error("feasible set is unbounded along coordinate {0}")]
    Unbounded(usize),

    #[error("vertex enumeration over {n} variables exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("epsilon must be positive, got {0}")]
    EpsilonNonpositive(f64),

    #[error("iteration limit {iterations} reached (best residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("not a probability vector: {0}")]
    NonProbability(String),

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e} below {threshold:e})")]
    NotPsd { eigenvalue: f64, threshold: f64 },

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("bad annealing schedule: {0}")]
    BadSchedule(String),

    #[error("annealing stage {stage} failed: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("certification inconclusive after {halvings} halvings of the probe radius")]
    Inconclusive { halvings: usize },

    #[error("Lambert W0 needs a nonnegative argument, got {0}")]
    NegativeArgument(f64),

    #[error("rate fit needs at least {required} usable records, got {usable}")]
    InsufficientData { usable: usize, required: usize },

    #[error("kernels must be both PSD or both NSD ({0})")]
    KernelSignMismatch(String),

    #[error("assembled quadratic form is not PSD (eigenvalue {0:e})")]
    NotPsdAfterSchur(f64),

    #[error("point cloud {which} is not centered (mean norm {mean_norm:e})")]
    Uncentered { which: usize, mean_norm: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
