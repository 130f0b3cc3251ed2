//! Stabilizer simulation and lattice surgery between small surface codes.
//!
//! The crate is layered bottom-up:
//!
//! * [`pauli`], [`gate`], [`group`]: signed Pauli algebra and subgroup queries.
//! * [`tableau`]: the stabilizer-state simulator; [`reference`] is a dense
//!   state-vector simulator used to check it.
//! * [`codes`]: the surface codes, encoding and distances.
//! * [`noise`]: Pauli noise and ancilla-based stabilizer extraction.
//! * [`surgery`]: merge/split, joint logical measurements and the
//!   teleportation, CNOT and Hadamard protocols built on them.
//! * [`experiment`]: the seeded Monte-Carlo harness and result output.
//! * [`verify`]: self-check suites used by the command-line tool.

pub mod codes;
pub mod error;
pub mod experiment;
pub mod gate;
pub mod group;
pub mod noise;
pub mod pauli;
pub mod reference;
pub mod surgery;
pub mod tableau;
pub mod verify;

pub use error::{Error, Result};
pub use gate::Gate;
pub use pauli::{PauliKind, PauliString};
pub use tableau::{MeasureMode, MeasurementOutcome, StabilizerTableau};

/// Version string embedded in every emitted document.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
