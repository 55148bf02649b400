use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    Alphabet(String),
    #[error("action {symbol} at position {position} is outside the action alphabet of size {size}")]
    InvalidAction { symbol: u32, position: usize, size: u32 },
    #[error("perception {value} at position {position} is outside the perception alphabet")]
    InvalidPerception { value: String, position: usize },
    #[error("step budget must be at least 1")]
    ZeroBudget,
    #[error("assembly line {line}: {msg}")]
    Asm { line: usize, msg: String },
    #[error("jump target {target} is outside a program of length {len}")]
    JumpTarget { target: usize, len: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("environment is not consistent with the history: {0}")]
    Consistency(String),
    #[error("the history refutes or leaves unresolved every enumerated program")]
    EmptySupport,
    #[error("utility {utility}: {msg}")]
    Utility { utility: String, msg: String },
    #[error("search exhausted its cap of {cap} cells")]
    Exhausted { cap: u64 },
    #[error("no program with index <= {n} halts within {budget} steps")]
    NoHaltingWitness { n: u64, budget: u64 },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
