use thiserror::Error;

/// Errors raised by graph construction, parameter validation and the
/// numerical operators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("self-loop on vertex {0} is not allowed")]
    SelfLoop(usize),

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("graph must have at least one vertex")]
    EmptyGraph,

    #[error("graph is not connected")]
    Disconnected,

    #[error("vertex function has length {got}, graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },

    #[error("function value {value} at vertex {vertex} is not strictly positive")]
    NotPositive { vertex: usize, value: f64 },

    #[error("function value at vertex {vertex} is not finite")]
    NotFinite { vertex: usize },

    #[error("ratio f({to})/f({from}) = {ratio:e} leaves the psi domain window [1e-8, 1e8]")]
    DomainWindow { from: usize, to: usize, ratio: f64 },

    #[error("psi `{0}` is not concave")]
    NotConcave(String),

    #[error("invalid psi selector `{0}` (expected log, sqrt or power:a with 0 < a < 1)")]
    InvalidPsi(String),

    #[error("zero generator would create self-loops")]
    ZeroGenerator,

    #[error("generator {index} has {got} coordinates, group has {expected}")]
    GeneratorArity {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("C_psi = {0} is not positive; CDpsi is degenerate for this psi")]
    DegenerateConstant(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
