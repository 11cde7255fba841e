use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("instruction {index}: {reason}")]
    InvalidInstruction { index: usize, reason: String },

    #[error("segment is not invertible automatically: instruction {index} is a {kind}")]
    NotInvertible { index: usize, kind: &'static str },

    #[error("{what} supports at most {max} qubits, got {got}")]
    TooLarge {
        what: &'static str,
        max: usize,
        got: usize,
    },

    #[error("branch enumeration exceeded {0} live branches")]
    BranchLimit(usize),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("invalid duration table: {0}")]
    InvalidDurations(String),

    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("extrapolation failed: {0}")]
    Extrapolation(String),

    #[error("empty histogram for measurement setting {0}")]
    EmptyHistogram(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
