use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subdivision n={n} for domain {domain}: {reason}")]
    InvalidSubdivision {
        domain: String,
        n: usize,
        reason: String,
    },
    #[error("polynomial degree k={0} is not supported (need 4 <= k <= 8)")]
    UnsupportedDegree(usize),
    #[error("quadrature of exactness degree {0} is not available (supported range 1..=25)")]
    QuadratureDegree(usize),
    #[error("derivative order {0} exceeds the supported maximum of 4")]
    DerivativeOrder(usize),
    #[error("unisolvence failure on triangle {triangle}: DOF matrix condition number {condition:.3e}")]
    Unisolvence { triangle: usize, condition: f64 },
    #[error("invalid {kind} id {id} (have {count})")]
    InvalidId {
        kind: &'static str,
        id: usize,
        count: usize,
    },
    #[error("edge {0} lies on the boundary; edge jump terms are defined on interior edges only")]
    BoundaryEdge(usize),
    #[error("malformed mesh: {0}")]
    Mesh(String),
    #[error("factorization failed ({context}): {reason}")]
    Factorization { context: String, reason: String },
    #[error("eigensolver did not converge after {iterations} iterations (max relative change {change:.3e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
