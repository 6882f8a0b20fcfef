use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice geometry: {0}")]
    InvalidGeometry(String),

    #[error("slot {slot} does not start an RL pair on surface {pattern}")]
    NotAnRlPair { slot: usize, pattern: String },

    #[error("slots {first} and {second} are not an adjacent pair")]
    NotAdjacent { first: usize, second: usize },

    #[error("unknown vertex {0}")]
    UnknownVertex(usize),

    #[error("vertex set is not closed under causal past: {vertex} is missing predecessor {missing}")]
    NotPastClosed { vertex: usize, missing: usize },

    #[error("not a natural labeling: {0}")]
    NotNaturalLabeling(String),

    #[error("{what} of size {size} exceeds the limit of {limit}")]
    Guardrail {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("impossible outcome: realized value has zero probability ({0})")]
    ImpossibleOutcome(String),

    #[error("conditioning on null event")]
    NullCondition,

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("jump parameter X = {0} outside [0, 1]")]
    InvalidJump(f64),

    #[error("state norm drifted to {0} (squared)")]
    NormDrift(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid record: {0}")]
    Record(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("incompatible history: {0}")]
    IncompatibleHistory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
