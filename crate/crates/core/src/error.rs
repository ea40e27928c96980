use thiserror::Error;

use crate::profile::Model;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("vertex {0} nominates itself")]
    SelfLoop(usize),

    #[error("model violation: {0}")]
    ModelViolation(String),

    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mechanism requires the {expected} model, profile is {found}")]
    ModelMismatch { expected: Model, found: Model },

    #[error("invalid mechanism spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration needs {required} evaluations, cap is {cap}")]
    EnumerationTooLarge { required: u128, cap: u128 },

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
