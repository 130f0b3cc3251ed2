//! Stabilizer/destabilizer tableau for pure stabilizer states.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::pauli::{PauliKind, PauliString};

/// How a measurement outcome is chosen when it is not fixed by the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    Random,
    /// Post-select the given bit; deterministic contradictions are errors.
    Forced(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MeasurementOutcome {
    /// Eigenvalue is `(-1)^bit`.
    pub bit: u8,
    /// The operator (up to sign) was already in the stabilizer group.
    pub deterministic: bool,
}

#[derive(Clone, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    stabs: Vec<PauliString>,
    destabs: Vec<PauliString>,
}

impl StabilizerTableau {
    /// `|0…0⟩` on `n` qubits.
    pub fn init_zero(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyRegister);
        }
        let single = |q, k| PauliString::single(n, q, k).expect("index in range");
        Ok(Self {
            n,
            stabs: (0..n).map(|q| single(q, PauliKind::Z)).collect(),
            destabs: (0..n).map(|q| single(q, PauliKind::X)).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn stabilizers(&self) -> &[PauliString] {
        &self.stabs
    }

    pub fn destabilizers(&self) -> &[PauliString] {
        &self.destabs
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n)?;
        for p in self.stabs.iter_mut().chain(self.destabs.iter_mut()) {
            gate.conjugate(p);
        }
        Ok(())
    }

    pub fn apply_gates(&mut self, gates: &[Gate]) -> Result<()> {
        gates.iter().try_for_each(|g| self.apply_gate(g))
    }

    /// Applies a Pauli operator as a unitary. Only generator signs change.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_width(p)?;
        for s in self.stabs.iter_mut().chain(self.destabs.iter_mut()) {
            if !s.commutes_unchecked(p) {
                *s = s.negated();
            }
        }
        Ok(())
    }

    fn check_width(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: p.n_qubits(),
            });
        }
        Ok(())
    }

    fn check_observable(&self, p: &PauliString) -> Result<()> {
        self.check_width(p)?;
        if !p.is_hermitian() {
            return Err(Error::NotHermitian(p.to_string()));
        }
        Ok(())
    }

    /// Sign bit of `p` when `±p` is in the stabilizer group. Uses the
    /// destabilizers as the dual basis: `p` is the product of the stabilizers
    /// whose destabilizer partners anticommute with it.
    fn deterministic_bit(&self, p: &PauliString) -> Option<u8> {
        if self.stabs.iter().any(|s| !s.commutes_unchecked(p)) {
            return None;
        }
        let mut acc = PauliString::identity(self.n);
        for (d, s) in self.destabs.iter().zip(&self.stabs) {
            if !d.commutes_unchecked(p) {
                acc.mul_assign_right(s);
            }
        }
        debug_assert!(acc.same_masks(p), "full-rank tableau must generate {p}");
        Some((acc.phase_exp() + 4 - p.phase_exp()) % 4 / 2)
    }

    /// Measures a Hermitian Pauli observable.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        p: &PauliString,
        mode: MeasureMode,
        rng: &mut R,
    ) -> Result<MeasurementOutcome> {
        self.check_observable(p)?;
        let Some(pivot) = self.stabs.iter().position(|s| !s.commutes_unchecked(p)) else {
            let bit = self
                .deterministic_bit(p)
                .expect("commutes with every stabilizer");
            if let MeasureMode::Forced(f) = mode {
                if f != bit {
                    return Err(Error::ImpossibleOutcome {
                        operator: p.to_string(),
                        forced: f,
                        actual: bit,
                    });
                }
            }
            return Ok(MeasurementOutcome {
                bit,
                deterministic: true,
            });
        };

        let bit = match mode {
            MeasureMode::Random => rng.gen::<bool>() as u8,
            MeasureMode::Forced(f) => f & 1,
        };
        let pivot_stab = self.stabs[pivot].clone();
        for i in 0..self.n {
            if i != pivot && !self.stabs[i].commutes_unchecked(p) {
                self.stabs[i].mul_assign_right(&pivot_stab);
            }
            if i != pivot && !self.destabs[i].commutes_unchecked(p) {
                self.destabs[i].mul_assign_right(&pivot_stab);
            }
        }
        self.destabs[pivot] = pivot_stab;
        self.stabs[pivot] = if bit == 1 { p.negated() } else { p.clone() };
        Ok(MeasurementOutcome {
            bit,
            deterministic: false,
        })
    }

    /// `+1`/`-1` when `±p` stabilizes the state, `0` otherwise.
    pub fn expectation(&self, p: &PauliString) -> Result<i8> {
        self.check_observable(p)?;
        Ok(match self.deterministic_bit(p) {
            Some(0) => 1,
            Some(_) => -1,
            None => 0,
        })
    }

    /// Checks the tableau invariants; returns a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for (i, s) in self.stabs.iter().enumerate() {
            if !s.is_hermitian() {
                return Err(format!("stabilizer {i} = {s} is not Hermitian"));
            }
            for (j, t) in self.stabs.iter().enumerate() {
                if !s.commutes_unchecked(t) {
                    return Err(format!("stabilizers {i} and {j} anticommute"));
                }
            }
            for (j, d) in self.destabs.iter().enumerate() {
                let anti = !s.commutes_unchecked(d);
                if anti != (i == j) {
                    return Err(format!(
                        "stabilizer {i} vs destabilizer {j}: wrong commutation"
                    ));
                }
            }
        }
        for (i, d) in self.destabs.iter().enumerate() {
            for (j, e) in self.destabs.iter().enumerate() {
                if i != j && !d.commutes_unchecked(e) {
                    return Err(format!("destabilizers {i} and {j} anticommute"));
                }
            }
        }
        // The pairing above already forces symplectic independence of all 2n rows.
        Ok(())
    }
}

impl fmt::Debug for StabilizerTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "StabilizerTableau[{}]", self.n)?;
        for (s, d) in self.stabs.iter().zip(&self.destabs) {
            writeln!(f, "  stab {s:<24} destab {d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(text: &str, n: usize) -> PauliString {
        PauliString::parse(text, n).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn zero_state() {
        assert!(matches!(
            StabilizerTableau::init_zero(0),
            Err(Error::EmptyRegister)
        ));
        let t = StabilizerTableau::init_zero(10).unwrap();
        for q in 1..=10 {
            assert_eq!(t.expectation(&p(&format!("+Z{q}"), 10)).unwrap(), 1);
        }
        assert_eq!(t.expectation(&p("+X1", 10)).unwrap(), 0);
        t.validate().unwrap();
    }

    #[test]
    fn hadamard_and_phase() {
        let mut t = StabilizerTableau::init_zero(1).unwrap();
        t.apply_gate(&Gate::H(0)).unwrap();
        assert_eq!(t.stabilizers()[0].to_string(), "+X1");
        t.apply_gate(&Gate::S(0)).unwrap();
        t.apply_gate(&Gate::S(0)).unwrap();
        assert_eq!(t.stabilizers()[0].to_string(), "-X1");
    }

    #[test]
    fn bad_targets() {
        let mut t = StabilizerTableau::init_zero(2).unwrap();
        assert!(t.apply_gate(&Gate::H(2)).is_err());
        assert!(t.apply_gate(&Gate::Cnot(1, 1)).is_err());
    }

    #[test]
    fn deterministic_and_forced_measurements() {
        let mut r = rng();
        let mut t = StabilizerTableau::init_zero(4).unwrap();
        let out = t
            .measure(&p("+Z1", 4), MeasureMode::Random, &mut r)
            .unwrap();
        assert_eq!(
            out,
            MeasurementOutcome {
                bit: 0,
                deterministic: true
            }
        );

        let neg = p("-Z1Z2", 4);
        let out = t.measure(&neg, MeasureMode::Forced(1), &mut r).unwrap();
        assert_eq!(
            out,
            MeasurementOutcome {
                bit: 1,
                deterministic: true
            }
        );
        assert!(matches!(
            t.measure(&neg, MeasureMode::Forced(0), &mut r),
            Err(Error::ImpossibleOutcome {
                forced: 0,
                actual: 1,
                ..
            })
        ));
    }

    #[test]
    fn forced_random_outcome_sticks() {
        let mut r = rng();
        let mut t = StabilizerTableau::init_zero(3).unwrap();
        let xx = p("+X1X2", 3);
        let out = t.measure(&xx, MeasureMode::Forced(1), &mut r).unwrap();
        assert!(!out.deterministic);
        assert_eq!(t.expectation(&xx).unwrap(), -1);
        let again = t.measure(&xx, MeasureMode::Random, &mut r).unwrap();
        assert_eq!(
            again,
            MeasurementOutcome {
                bit: 1,
                deterministic: true
            }
        );
        assert_eq!(t.expectation(&p("+Z1Z2", 3)).unwrap(), 1);
        t.validate().unwrap();
    }

    #[test]
    fn rejects_non_hermitian_observable() {
        let mut t = StabilizerTableau::init_zero(1).unwrap();
        let bad = p("+iZ1", 1);
        assert!(matches!(t.expectation(&bad), Err(Error::NotHermitian(_))));
        assert!(t.measure(&bad, MeasureMode::Random, &mut rng()).is_err());
    }

    #[test]
    fn pauli_application_flips_signs() {
        let mut t = StabilizerTableau::init_zero(2).unwrap();
        t.apply_pauli(&p("+X1", 2)).unwrap();
        assert_eq!(t.expectation(&p("+Z1", 2)).unwrap(), -1);
        assert_eq!(t.expectation(&p("+Z2", 2)).unwrap(), 1);
    }
}
