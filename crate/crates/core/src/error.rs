use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid value for `{field}`: {reason}")]
    Input { field: String, reason: String },

    #[error("index {n} belongs to the degenerate set (phi_alpha(a z_n) = 0)")]
    DegenerateIndex { n: usize },

    #[error(
        "lambda = {lambda} lies within the exclusion radius of node {k}; use the node formula"
    )]
    NodeCollision { k: usize, lambda: Complex64 },

    #[error("root search for n = {n} did not converge (last iterate rho = {last})")]
    NoConvergence { n: usize, last: Complex64 },

    #[error("indices {i} and {j} converged to the same root")]
    Multiplicity { i: usize, j: usize },

    #[error("root for degenerate index {n} drifted {offset:e} from its node")]
    DegenerateDrift { n: usize, offset: f64 },

    #[error("inverse iteration near target {target} did not converge")]
    OracleNoConvergence { target: Complex64 },

    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("outside supported scope: {0}")]
    OutOfScope(String),

    #[error("a-norm {norm} of the spectral remainders exceeds r = {r}")]
    BallViolation { norm: f64, r: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Input {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::Multiplicity { .. }
                | Error::DegenerateDrift { .. }
                | Error::OracleNoConvergence { .. }
                | Error::NodeCollision { .. }
        )
    }
}
