use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("quadrature did not converge: {0}")]
    Accuracy(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unsupported symbol variant for this operation: {0}")]
    UnsupportedVariant(String),
    #[error("symbol evaluation failed at z = {location}: {message}")]
    Evaluation { location: String, message: String },
    #[error("growth exceeds every polynomial rate up to N = {max_degree} (constant {constant})")]
    GrowthExceedsPolynomial { max_degree: usize, constant: f64 },
    #[error("matrix dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("truncation/cutoff mismatch: {0}")]
    SpecMismatch(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("integrator failed: {0}")]
    Integrator(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("import validation failed: {0}")]
    Import(String),
}

pub type Result<V> = std::result::Result<V, Error>;
