use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid function has {found} entries, expected {expected}")]
    Shape { expected: usize, found: usize },

    #[error("non-finite value at node {node}, component {component}")]
    NonFinite { node: usize, component: usize },

    #[error("operands live on different grids or have different dimensions")]
    GridMismatch,

    #[error("fractional order {0} outside the admissible range {1}")]
    InvalidOrder(f64, &'static str),

    #[error("evaluation point t = {t} is within {margin} of the grid edge")]
    NearBoundary { t: f64, margin: f64 },

    #[error("input carries tail mass {tail_mass:e} beyond |t| > 0.8T (limit {limit:e})")]
    NotDecaying { tail_mass: f64, limit: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown builtin instance `{0}` (expected one of coercive_A, noncoercive_B, vector_C)")]
    UnknownInstance(String),

    #[error("basis function {index} is numerically dependent (Gram determinant {det:e})")]
    RankDeficient { index: usize, det: f64 },

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
