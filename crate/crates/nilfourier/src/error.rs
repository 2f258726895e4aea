use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),
    #[error("integer overflow computing {0}")]
    Overflow(String),
    #[error("supplied basis is linearly dependent in layer {layer} (smallest/largest singular value {ratio:e})")]
    DependentBasis { layer: usize, ratio: f64 },
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("tensor is not in the free Lie layer {layer} (residual {residual:e})")]
    NotInLieImage { layer: usize, residual: f64 },
    #[error("spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("role error: expected {expected}, got {found}")]
    RoleError { expected: &'static str, found: &'static str },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("functional is not in general position")]
    NotGeneric,
    #[error("operation not available for the degenerate spec d=2, N=3: {0}")]
    DegenerateSpec(String),
    #[error("no generic functional found after {0} draws")]
    SamplingExhausted(usize),
    #[error("polarization check failed: {0}")]
    PolarizationCheck(String),
    #[error("chart basis is not a strong Malcev basis: {0}")]
    ChartNotMalcev(String),
    #[error("quadrature box too small: |f| on the boundary is {ratio:e} of its peak")]
    QuadratureUnderflow { ratio: f64 },
    #[error("determinant of a skew matrix came out negative ({0:e})")]
    NegativeDeterminant(f64),
    #[error("quadrature did not converge: {coarse} vs {fine} (tolerance {tol:e})")]
    NonConvergence { coarse: f64, fine: f64, tol: f64 },
    #[error("linear algebra failure: {0}")]
    Numerical(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::Overflow(_) => "Overflow",
            Error::DependentBasis { .. } => "DependentBasis",
            Error::DegreeMismatch(_) => "DegreeMismatch",
            Error::NotInLieImage { .. } => "NotInLieImage",
            Error::SpecMismatch(_) => "SpecMismatch",
            Error::RoleError { .. } => "RoleError",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::IndexOutOfRange(_) => "IndexOutOfRange",
            Error::NotGeneric => "NotGeneric",
            Error::DegenerateSpec(_) => "DegenerateSpec",
            Error::SamplingExhausted(_) => "SamplingExhausted",
            Error::PolarizationCheck(_) => "PolarizationCheck",
            Error::ChartNotMalcev(_) => "ChartNotMalcev",
            Error::QuadratureUnderflow { .. } => "QuadratureUnderflow",
            Error::NegativeDeterminant(_) => "NegativeDeterminant",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::Numerical(_) => "Numerical",
            Error::Input(_) => "Input",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }
}
