use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier '{name}' at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("non-integer exponent at line {line}, column {column}")]
    NonIntegerExponent { line: usize, column: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("expression for {what} is not 1-periodic in x{axis} (defect {defect:.3e})")]
    NotPeriodic {
        what: String,
        axis: usize,
        defect: f64,
    },
    #[error("system file: {0}")]
    SystemFile(String),
    #[error("ambiguous lift: samples after index {index} jump by {jump:.3} ≥ 0.5")]
    LiftAmbiguity { index: usize, jump: f64 },
    #[error("step size underflow at t = {time:.6e}")]
    StepUnderflow { time: f64, state: Vec<f64> },
    #[error("rest point {0} is not hyperbolic")]
    NonHyperbolic(usize),
    #[error("rest points have indices {from} and {to}; instantons need from = to + 1")]
    NonAdjacent { from: usize, to: usize },
    #[error("ill-conditioned orientation frame (condition {condition:.3e}); transversality failure")]
    IllConditionedFrame { condition: f64 },
    #[error("missing instanton data for rest points {from} -> {to}")]
    MissingPair { from: usize, to: usize },
    #[error("too few series terms: {found} (need at least {needed})")]
    TooFewTerms { found: usize, needed: usize },
    #[error("twisted Betti numbers disagree: closed form {closed:?}, spectral {spectral:?}")]
    BettiMismatch {
        closed: Vec<usize>,
        spectral: Vec<usize>,
    },
    #[error("spectral split rejected: {0}")]
    SplitRejected(String),
    #[error("quadrature tail {tail:.3e} above tolerance; need radius {radius:.3}")]
    QuadratureTail { tail: f64, radius: f64 },
    #[error("singular Laplacian in degree {degree} on the complement of its kernel")]
    SingularLaplacian { degree: usize },
    #[error("vector field has a rest point near {0:?}; R-invariant needs a rest-point-free field")]
    HasRestPoint(Vec<f64>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix not positive definite at pivot {pivot} (value {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("linear algebra: {0}")]
    Linalg(String),
    #[error("δ² has a nonzero coefficient: {0}")]
    DeltaSquared(String),
    #[error("unknown quantity '{name}'; valid names: {valid}")]
    UnknownQuantity { name: String, valid: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
