use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix is zero")]
    ZeroMatrix,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("invalid network configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("{kind} channel {index} is identically zero")]
    ZeroChannel { kind: &'static str, index: usize },
    #[error("shape mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MmseError {
    #[error("virtual uplink iteration did not converge")]
    InnerNotConverged,
    #[error("inner power-minimization problem is infeasible: {0}")]
    InnerInfeasible(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MldError {
    #[error("{what} = {value} exceeds the supported maximum of {cap}")]
    CapExceeded { what: &'static str, value: usize, cap: usize },
    #[error("power minimization is infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UgdError {
    #[error("{what} = {value} exceeds the supported maximum of {cap}")]
    CapExceeded { what: &'static str, value: usize, cap: usize },
    #[error("initial minimum rates are not decodable at receiver {receiver}")]
    NotDecodable { receiver: usize },
    #[error("decoding depth {p} is below the position {position} of the desired user")]
    IndexError { p: usize, position: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("linear program solver failed: {0}")]
    Solver(String),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("invalid scenario: {}", .0.join("; "))]
    Validation(Vec<String>),
}
