use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// The Clifford gate set shared by the tableau and the dense oracle.
/// Qubit indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
}

impl Gate {
    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot(..) | Gate::Cz(..))
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => {
                vec![q]
            }
            Gate::Cnot(a, b) | Gate::Cz(a, b) => vec![a, b],
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::DuplicateQubit(qs[0] + 1));
        }
        Ok(())
    }

    /// Conjugates `p` in place: `p ← U p U†`.
    pub fn conjugate(&self, p: &mut PauliString) {
        match *self {
            Gate::H(q) => p.conjugate_h(q),
            Gate::S(q) => p.conjugate_s(q),
            Gate::Sdg(q) => p.conjugate_sdg(q),
            Gate::X(q) => p.conjugate_x(q),
            Gate::Y(q) => p.conjugate_y(q),
            Gate::Z(q) => p.conjugate_z(q),
            Gate::Cnot(c, t) => p.conjugate_cnot(c, t),
            Gate::Cz(a, b) => p.conjugate_cz(a, b),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(q) => write!(f, "H {}", q + 1),
            Gate::S(q) => write!(f, "S {}", q + 1),
            Gate::Sdg(q) => write!(f, "SDG {}", q + 1),
            Gate::X(q) => write!(f, "X {}", q + 1),
            Gate::Y(q) => write!(f, "Y {}", q + 1),
            Gate::Z(q) => write!(f, "Z {}", q + 1),
            Gate::Cnot(c, t) => write!(f, "CNOT {} {}", c + 1, t + 1),
            Gate::Cz(a, b) => write!(f, "CZ {} {}", a + 1, b + 1),
        }
    }
}
