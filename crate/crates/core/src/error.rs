use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A node count, polynomial degree or basis size exceeds what the
    /// requested computation can resolve.
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("rank deficiency: pivot {pivot} is {value:e}, below jitter floor {floor:e}")]
    RankDeficient {
        pivot: usize,
        value: f64,
        floor: f64,
    },

    #[error("numerical derivative failed: {0}")]
    NumericalDerivative(String),

    /// The curvature signature has an eigenvalue within tolerance of zero.
    #[error("degenerate curvature signature (eigenvalues {eigenvalues:?}, tol {tol:e})")]
    Degenerate { eigenvalues: Vec<f64>, tol: f64 },

    #[error("unreliable integral: {skipped} of {total} nodes have degenerate curvature")]
    UnreliableIntegral { skipped: usize, total: usize },

    #[error("form is not harmonic: first-order residual {residual:e} exceeds {tolerance:e}")]
    NotHarmonic { residual: f64, tolerance: f64 },

    #[error("degenerate section: {0}")]
    DegenerateSection(String),

    #[error("signature mismatch: expected {expected} negative eigenvalues, found {found}")]
    SignatureMismatch { expected: usize, found: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error record and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Capacity(_) => "capacity",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::NumericalDerivative(_) => "numerical_derivative",
            Error::Degenerate { .. } => "degenerate",
            Error::UnreliableIntegral { .. } => "unreliable_integral",
            Error::NotHarmonic { .. } => "not_harmonic",
            Error::DegenerateSection(_) => "degenerate_section",
            Error::SignatureMismatch { .. } => "signature_mismatch",
            Error::Invariant(_) => "invariant",
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
