use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid axis: {0}")]
    InvalidAxis(String),
    #[error("invalid grading: mu = {mu} must lie in (0, 1]")]
    InvalidGrading { mu: f64 },
    #[error("invalid refinement: {0}")]
    InvalidRefinement(String),
    #[error("point ({x}, {y}, {z}) lies outside the grid")]
    OutOfDomain { x: f64, y: f64, z: f64 },
    #[error("invalid radius: {0}")]
    InvalidRadius(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("all nodes are constrained, nothing left to solve")]
    FullyConstrained,
    #[error("PEC group {group} touches electrodes with different values {a} and {b}")]
    PecConflict { group: usize, a: f64, b: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("solve rejected: relative residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("iterative solver did not converge: {0}")]
    NoConvergence(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("undefined error measure: {0}")]
    UndefinedMeasure(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse { line: usize, column: usize, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    ConfigInvalid(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse { .. } | Error::ConfigInvalid(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
