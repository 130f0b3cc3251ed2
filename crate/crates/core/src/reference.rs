//! Dense state-vector simulator used as ground truth for small registers.
//!
//! Qubit `q` (0-based) is bit `q` of the amplitude index, so the ket label
//! `|0101⟩` (qubit 1 first) is index `0b1010`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::pauli::{PauliKind, PauliString};
use crate::tableau::MeasureMode;

pub const DENSE_CAP: usize = 12;
const ZERO_PROB: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

/// Amplitude index of a ket label written with qubit 1 first.
pub fn basis_index(label: &str) -> usize {
    label
        .chars()
        .enumerate()
        .filter(|(_, c)| *c == '1')
        .map(|(q, _)| 1 << q)
        .sum()
}

impl DenseState {
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyRegister);
        }
        if n > DENSE_CAP {
            return Err(Error::DenseCapExceeded {
                requested: n,
                cap: DENSE_CAP,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n > DENSE_CAP {
            return Err(Error::DenseCapExceeded {
                requested: n,
                cap: DENSE_CAP,
            });
        }
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                left: 1 << n,
                right: amps.len(),
            });
        }
        let mut s = Self { n, amps };
        s.normalize();
        Ok(s)
    }

    /// The unique state stabilized by `generators` (n independent commuting
    /// Hermitian Paulis), found by projecting a generic vector.
    pub fn from_stabilizers(n: usize, generators: &[PauliString]) -> Result<Self> {
        let mut s = Self::zero(n)?;
        // Irrational phases make an accidental zero overlap with a stabilizer state impossible.
        for (b, a) in s.amps.iter_mut().enumerate() {
            let t = b as f64;
            *a = Complex64::new(1.0 + (t * 0.754_877_666).sin(), (t * 1.324_717_957).cos());
        }
        for g in generators {
            s.check(g)?;
            s.project(g, 0)?;
            if s.norm_sqr() < 1e-8 {
                return Err(Error::InvalidCode(
                    "stabilizer generators have no common +1 eigenvector".into(),
                ));
            }
            s.normalize();
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        self.amps.iter_mut().for_each(|a| *a /= norm);
    }

    fn check(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: p.n_qubits(),
            });
        }
        Ok(())
    }

    /// `P|ψ⟩` as a fresh amplitude vector.
    fn pauli_image(&self, p: &PauliString) -> Vec<Complex64> {
        let (mut xmask, mut zmask, mut n_y) = (0usize, 0usize, 0u32);
        for q in 0..self.n {
            match p.kind(q) {
                PauliKind::I => {}
                PauliKind::X => xmask |= 1 << q,
                PauliKind::Z => zmask |= 1 << q,
                PauliKind::Y => {
                    xmask |= 1 << q;
                    zmask |= 1 << q;
                    n_y += 1;
                }
            }
        }
        // Y|b⟩ = i(-1)^b |b⊕1⟩, so P|b⟩ = i^(k + #Y) (-1)^|b∧z| |b⊕x⟩.
        let global = Complex64::i().powu((p.phase_exp() as u32 + n_y) % 4);
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let sign = if (b & zmask).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            out[b ^ xmask] += a * global * sign;
        }
        out
    }

    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check(p)?;
        self.amps = self.pauli_image(p);
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let i = Complex64::i();
        match *gate {
            Gate::H(q) => self.single(q, [[h.into(), h.into()], [h.into(), (-h).into()]]),
            Gate::S(q) => self.single(q, [[1.0.into(), 0.0.into()], [0.0.into(), i]]),
            Gate::Sdg(q) => self.single(q, [[1.0.into(), 0.0.into()], [0.0.into(), -i]]),
            Gate::X(q) => self.single(q, [[0.0.into(), 1.0.into()], [1.0.into(), 0.0.into()]]),
            Gate::Y(q) => self.single(q, [[0.0.into(), -i], [i, 0.0.into()]]),
            Gate::Z(q) => self.single(q, [[1.0.into(), 0.0.into()], [0.0.into(), (-1.0).into()]]),
            Gate::Cnot(c, t) => {
                for b in 0..self.amps.len() {
                    if b >> c & 1 == 1 && b >> t & 1 == 0 {
                        self.amps.swap(b, b | 1 << t);
                    }
                }
            }
            Gate::Cz(a, b2) => {
                for b in 0..self.amps.len() {
                    if b >> a & 1 == 1 && b >> b2 & 1 == 1 {
                        self.amps[b] = -self.amps[b];
                    }
                }
            }
        }
        Ok(())
    }

    fn single(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        for b in 0..self.amps.len() {
            if b >> q & 1 == 0 {
                let (a0, a1) = (self.amps[b], self.amps[b | 1 << q]);
                self.amps[b] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[b | 1 << q] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Applies `(I + (-1)^bit P)/2` without renormalizing.
    fn project(&mut self, p: &PauliString, bit: u8) -> Result<()> {
        let image = self.pauli_image(p);
        let s = if bit == 0 { 1.0 } else { -1.0 };
        for (a, pa) in self.amps.iter_mut().zip(image) {
            *a = (*a + pa * s) * 0.5;
        }
        Ok(())
    }

    /// Born probability of outcome `bit` for the Hermitian observable `p`.
    pub fn probability(&self, p: &PauliString, bit: u8) -> Result<f64> {
        let e = self.expectation(p)?;
        Ok(if bit == 0 {
            (1.0 + e) / 2.0
        } else {
            (1.0 - e) / 2.0
        })
    }

    pub fn measure_pauli<R: Rng + ?Sized>(
        &mut self,
        p: &PauliString,
        mode: MeasureMode,
        rng: &mut R,
    ) -> Result<u8> {
        self.check(p)?;
        if !p.is_hermitian() {
            return Err(Error::NotHermitian(p.to_string()));
        }
        let p0 = self.probability(p, 0)?;
        let bit = match mode {
            MeasureMode::Forced(b) => b & 1,
            MeasureMode::Random => (rng.gen::<f64>() >= p0) as u8,
        };
        let prob = if bit == 0 { p0 } else { 1.0 - p0 };
        if prob < ZERO_PROB {
            return Err(Error::ImpossibleOutcome {
                operator: p.to_string(),
                forced: bit,
                actual: 1 - bit,
            });
        }
        self.project(p, bit)?;
        self.normalize();
        Ok(bit)
    }

    /// `⟨ψ|P|ψ⟩`; real for Hermitian `P`.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        self.check(p)?;
        if !p.is_hermitian() {
            return Err(Error::NotHermitian(p.to_string()));
        }
        let image = self.pauli_image(p);
        let v: Complex64 = self
            .amps
            .iter()
            .zip(&image)
            .map(|(a, b)| a.conj() * b)
            .sum();
        debug_assert!(v.im.abs() < 1e-9);
        Ok(v.re)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let v: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        v.norm_sqr()
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

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = DenseState::zero(1).unwrap();
        s.apply_gate(&Gate::H(0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.amplitudes()[0], h, 0.0) && close(s.amplitudes()[1], h, 0.0));
        assert!((s.expectation(&p("+X1", 1)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cnot_on_plus_zero_gives_bell() {
        let mut s = DenseState::zero(2).unwrap();
        s.apply_gate(&Gate::H(0)).unwrap();
        s.apply_gate(&Gate::Cnot(0, 1)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.amplitudes()[basis_index("00")], h, 0.0));
        assert!(close(s.amplitudes()[basis_index("11")], h, 0.0));
        assert!((s.expectation(&p("-Y1Y2", 2)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logical_x_maps_zero_l_to_one_l() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 16];
        amps[basis_index("0101")] = h.into();
        amps[basis_index("1010")] = h.into();
        let mut s = DenseState::from_amplitudes(4, amps).unwrap();
        s.apply_pauli(&p("+X1X2", 4)).unwrap();
        assert!(close(s.amplitudes()[basis_index("1001")], h, 0.0));
        assert!(close(s.amplitudes()[basis_index("0110")], h, 0.0));
    }

    #[test]
    fn forced_measurement_and_idempotence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = DenseState::zero(2).unwrap();
        let zz = p("-Z1Z2", 2);
        assert!(s
            .measure_pauli(&zz, MeasureMode::Forced(0), &mut rng)
            .is_err());
        assert_eq!(
            s.measure_pauli(&zz, MeasureMode::Forced(1), &mut rng)
                .unwrap(),
            1
        );
        let xx = p("+X1X2", 2);
        s.measure_pauli(&xx, MeasureMode::Forced(1), &mut rng)
            .unwrap();
        let before = s.clone();
        s.measure_pauli(&xx, MeasureMode::Forced(1), &mut rng)
            .unwrap();
        assert!((s.fidelity(&before) - 1.0).abs() < 1e-10);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            DenseState::zero(13),
            Err(Error::DenseCapExceeded {
                requested: 13,
                cap: 12
            })
        ));
    }
}
