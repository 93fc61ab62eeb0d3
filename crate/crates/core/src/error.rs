use thiserror::Error;

/// Errors raised anywhere in the recovery pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("non-finite value in {0}")]
    NotFinite(&'static str),
    #[error("{0} did not converge")]
    ConvergenceFailure(&'static str),
    #[error("requested rank {k} outside 1..={max}")]
    BadRank { k: usize, max: usize },
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate cluster: fewer than {0} distinct points")]
    DegenerateCluster(usize),
    #[error("bad dimensions: {0}")]
    BadDims(String),
    #[error("signature library has {have} columns, need {need}")]
    LibraryTooSmall { have: usize, need: usize },
    #[error("library columns are too similar to draw {0} distinct endmembers")]
    IllConditionedLibrary(usize),
    #[error("infeasible purity: r = {r} must exceed 1/sqrt(N) = {min}")]
    InfeasiblePurity { r: f64, min: f64 },
    #[error("rejection sampling stalled: acceptance rate {0:.2e}")]
    RejectionStall(f64),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("data is rank deficient: sigma_min/sigma_max = {0:.3e}")]
    RankDeficientData(f64),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("polytope has empty interior")]
    EmptyInterior,
    #[error("solver diverged at iteration {0}")]
    Divergence(usize),
    #[error("too few contact points: need {need}, found {found}; try a larger contact tolerance")]
    TooFewContacts { need: usize, found: usize },
    #[error("no contact points: smallest relative facet slack is {0:e}; try a larger contact tolerance")]
    NoContacts(f64),
    #[error("expected {expected} points, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("endmember matrix is rank deficient")]
    RankDeficientA,
    #[error("column {0} is zero")]
    ZeroColumn(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 for I/O, 2 for invalid parameters, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Json(_) | Error::Parse(_) => 1,
            Error::InvalidParameter(_)
            | Error::InfeasiblePurity { .. }
            | Error::BadDims(_)
            | Error::BadRank { .. }
            | Error::LibraryTooSmall { .. }
            | Error::DimMismatch(_)
            | Error::WrongCount { .. } => 2,
            _ => 3,
        }
    }
}
