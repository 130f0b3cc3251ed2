use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} qubits vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },

    #[error("malformed Pauli literal {text:?}: {reason}")]
    ParsePauli { text: String, reason: String },

    #[error("qubit {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit {0} used more than once")]
    DuplicateQubit(usize),

    #[error("operator {0} is not Hermitian")]
    NotHermitian(String),

    #[error("a register needs at least one qubit")]
    EmptyRegister,

    #[error("forcing outcome {forced} of {operator} is impossible: the outcome is deterministically {actual}")]
    ImpossibleOutcome {
        operator: String,
        forced: u8,
        actual: u8,
    },

    #[error("dense simulation is capped at {cap} qubits, {requested} requested")]
    DenseCapExceeded { requested: usize, cap: usize },

    #[error("invalid stabilizer code: {0}")]
    InvalidCode(String),

    #[error("ancilla qubit {0} overlaps the measured operator")]
    AncillaOverlap(usize),

    #[error("invalid merging set: {0}")]
    InvalidMerge(String),

    #[error("brute-force distance is capped at {cap} data qubits, code has {requested}")]
    DistanceCapExceeded { requested: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
