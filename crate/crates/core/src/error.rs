use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Cartan datum: {0}")]
    InvalidCartan(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("enumeration cap of {cap} elements exceeded")]
    CapExceeded { cap: usize },
    #[error("word {0:?} is not reduced")]
    NotReduced(Vec<usize>),
    #[error("element is not a minimal coset representative")]
    NotMinimal,
    #[error("polynomial division is not exact")]
    InexactDivision,
    #[error("singular system: zero pivot at position {0}")]
    Singular(usize),
    #[error("h = {h:?} is within {margin} of the wall of root {root:?}")]
    NearWall { h: Vec<f64>, root: Vec<i64>, margin: f64 },
    #[error("eigen-solver failed: {0}")]
    EigenFailure(String),
    #[error("resonance: eigenvalues {0} and {1} differ by a positive integer")]
    Resonance(String, String),
    #[error("h is outside the convergence radius guard ({0})")]
    RadiusViolation(String),
    #[error("matrix is not in the required Bruhat cell: {0}")]
    NotInCell(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precision target not reachable: {0}")]
    Precision(String),
}

pub type Result<T> = std::result::Result<T, Error>;
