//! Pauli noise, ancilla-based stabilizer extraction, and the [`Machine`]
//! that executes protocol steps on a tableau.
//!
//! Noise enters only where a physical operation happens: the gates of an
//! extraction circuit, ancilla preparation and measurement, and the basis
//! changes and measurements of a destructive readout. Encoding is ideal
//! unless [`NoiseModel::noisy_encoding`] is set.
//!
//! A random draw is skipped whenever the corresponding probability is zero,
//! so a zero model consumes exactly the same random numbers as the ideal path.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{self, Basis, LogicalLabel, StabilizerCode};
use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::pauli::{PauliKind, PauliString};
use crate::tableau::{MeasureMode, MeasurementOutcome, StabilizerTableau};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Single-qubit depolarizing probability after each one-qubit gate.
    pub p1: f64,
    /// Two-qubit depolarizing probability after each two-qubit gate.
    pub p2: f64,
    /// Classical flip probability of each measurement bit.
    pub p_meas: f64,
    /// Probability of preparing the ancilla in `|1⟩` instead of `|0⟩`.
    pub p_prep: f64,
    /// Prepare logical inputs with noisy extraction circuits instead of ideally.
    pub noisy_encoding: bool,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p_meas", self.p_meas),
            ("p_prep", self.p_prep),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_meas == 0.0 && self.p_prep == 0.0
    }
}

fn happens<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    p > 0.0 && rng.gen::<f64>() < p
}

const ONE_QUBIT: [PauliKind; 3] = [PauliKind::X, PauliKind::Y, PauliKind::Z];
const ALL_KINDS: [PauliKind; 4] = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];

/// Inserts the depolarizing channel that follows `gate`.
pub fn depolarize<R: Rng + ?Sized>(
    state: &mut StabilizerTableau,
    gate: &Gate,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<()> {
    let n = state.n_qubits();
    let error = match *gate {
        Gate::Cnot(a, b) | Gate::Cz(a, b) => {
            if !happens(model.p2, rng) {
                return Ok(());
            }
            let k = rng.gen_range(1..16);
            PauliString::from_sparse(n, &[(a, ALL_KINDS[k & 3]), (b, ALL_KINDS[k >> 2])])?
        }
        _ => {
            if !happens(model.p1, rng) {
                return Ok(());
            }
            let q = gate.qubits()[0];
            PauliString::single(n, q, ONE_QUBIT[rng.gen_range(0..3)])?
        }
    };
    state.apply_pauli(&error)
}

/// One step of an extraction circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtractionOp {
    PrepareAncilla,
    Gate(Gate),
    MeasureAncilla,
}

/// Gate-level measurement of a Pauli operator through one ancilla.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionCircuit {
    pub ops: Vec<ExtractionOp>,
    pub ancilla: usize,
    /// The operator carried a minus sign; the reported bit is inverted.
    pub negative: bool,
    pub operator: PauliString,
}

/// Gates mapping the Pauli `kind` on `q` to `Z` (`X` via H, `Y` via S† then H).
pub fn to_z_basis(kind: PauliKind, q: usize) -> Vec<Gate> {
    match kind {
        PauliKind::X => vec![Gate::H(q)],
        PauliKind::Y => vec![Gate::Sdg(q), Gate::H(q)],
        PauliKind::I | PauliKind::Z => vec![],
    }
}

fn from_z_basis(kind: PauliKind, q: usize) -> Vec<Gate> {
    match kind {
        PauliKind::X => vec![Gate::H(q)],
        PauliKind::Y => vec![Gate::H(q), Gate::S(q)],
        PauliKind::I | PauliKind::Z => vec![],
    }
}

/// Builds the circuit measuring `p` into `ancilla`: prepare `|0⟩`, and for
/// each support qubit rotate to Z, CNOT into the ancilla, rotate back; then
/// measure the ancilla in Z.
pub fn synthesize_extraction(p: &PauliString, ancilla: usize) -> Result<ExtractionCircuit> {
    if !p.is_hermitian() {
        return Err(Error::NotHermitian(p.to_string()));
    }
    if ancilla < p.n_qubits() && p.kind(ancilla) != PauliKind::I {
        return Err(Error::AncillaOverlap(ancilla + 1));
    }
    let mut ops = vec![ExtractionOp::PrepareAncilla];
    for q in p.support() {
        let kind = p.kind(q);
        ops.extend(to_z_basis(kind, q).into_iter().map(ExtractionOp::Gate));
        ops.push(ExtractionOp::Gate(Gate::Cnot(q, ancilla)));
        ops.extend(from_z_basis(kind, q).into_iter().map(ExtractionOp::Gate));
    }
    ops.push(ExtractionOp::MeasureAncilla);
    Ok(ExtractionCircuit {
        ops,
        ancilla,
        negative: p.is_negative(),
        operator: p.clone(),
    })
}

/// Executes an extraction circuit on `state` (which must contain the
/// ancilla, in `|0⟩`). `Forced` applies to the reported bit. The ancilla is
/// reset to `|0⟩` afterwards.
pub fn run_noisy<R: Rng + ?Sized>(
    circuit: &ExtractionCircuit,
    state: &mut StabilizerTableau,
    model: &NoiseModel,
    mode: MeasureMode,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    let n = state.n_qubits();
    let anc_z = PauliString::single(n, circuit.ancilla, PauliKind::Z)?;
    let anc_x = PauliString::single(n, circuit.ancilla, PauliKind::X)?;
    let mut result = None;
    for op in &circuit.ops {
        match op {
            ExtractionOp::PrepareAncilla => {
                if happens(model.p_prep, rng) {
                    state.apply_pauli(&anc_x)?;
                }
            }
            ExtractionOp::Gate(g) => {
                state.apply_gate(g)?;
                depolarize(state, g, model, rng)?;
            }
            ExtractionOp::MeasureAncilla => {
                let flip = happens(model.p_meas, rng) as u8;
                let offset = flip ^ circuit.negative as u8;
                let raw_mode = match mode {
                    MeasureMode::Random => MeasureMode::Random,
                    MeasureMode::Forced(b) => MeasureMode::Forced(b ^ offset),
                };
                let out = state.measure(&anc_z, raw_mode, rng).map_err(|e| match e {
                    Error::ImpossibleOutcome { forced, actual, .. } => Error::ImpossibleOutcome {
                        operator: circuit.operator.to_string(),
                        forced: forced ^ offset,
                        actual: actual ^ offset,
                    },
                    other => other,
                })?;
                if out.bit == 1 {
                    state.apply_pauli(&anc_x)?;
                }
                result = Some(MeasurementOutcome {
                    bit: out.bit ^ offset,
                    deterministic: out.deterministic,
                });
            }
        }
    }
    result.ok_or_else(|| Error::Config("extraction circuit has no measurement".into()))
}

/// Bits of a destructive readout: `(qubit, basis, bit)` per data qubit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Readout {
    pub bits: Vec<(usize, Basis, u8)>,
}

impl Readout {
    /// Eigenvalue of `op` implied by the bits, if every support qubit was
    /// read in `op`'s letter.
    pub fn value_of(&self, op: &PauliString) -> Option<i8> {
        let mut parity = op.is_negative() as u8;
        for q in op.support() {
            let &(_, basis, bit) = self.bits.iter().find(|(r, _, _)| *r == q)?;
            if basis.kind() != op.kind(q) {
                return None;
            }
            parity ^= bit;
        }
        Some(if parity == 0 { 1 } else { -1 })
    }

    /// Reinterprets the bits as if the Pauli `frame` had been applied before readout.
    pub fn apply_frame(&mut self, frame: &PauliString) {
        for (q, basis, bit) in &mut self.bits {
            let letter = frame.kind(*q);
            if letter != PauliKind::I && letter != basis.kind() {
                *bit ^= 1;
            }
        }
    }

    pub fn extend(&mut self, other: Readout) {
        self.bits.extend(other.bits);
    }
}

/// A tableau plus the noise model, random stream and optional extraction
/// ancilla. Operators passed in act on the data register; the ancilla, when
/// present, is one extra qubit after it.
#[derive(Clone, Debug)]
pub struct Machine<R> {
    state: StabilizerTableau,
    n_data: usize,
    model: NoiseModel,
    extraction: bool,
    rng: R,
}

impl<R: Rng> Machine<R> {
    /// Routes measurements through extraction circuits exactly when the model is non-zero.
    pub fn new(n_data: usize, model: NoiseModel, rng: R) -> Result<Self> {
        Self::build(n_data, model, !model.is_zero(), rng)
    }

    /// Forces measurements through extraction circuits even for a zero model.
    pub fn with_extraction(n_data: usize, model: NoiseModel, rng: R) -> Result<Self> {
        Self::build(n_data, model, true, rng)
    }

    fn build(n_data: usize, model: NoiseModel, extraction: bool, rng: R) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            state: StabilizerTableau::init_zero(n_data + extraction as usize)?,
            n_data,
            model,
            extraction,
            rng,
        })
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn uses_extraction(&self) -> bool {
        self.extraction
    }

    pub fn tableau(&self) -> &StabilizerTableau {
        &self.state
    }

    pub fn rng(&mut self) -> &mut R {
        &mut self.rng
    }

    fn widen(&self, p: &PauliString) -> Result<PauliString> {
        if p.n_qubits() != self.n_data {
            return Err(Error::DimensionMismatch {
                left: self.n_data,
                right: p.n_qubits(),
            });
        }
        if self.extraction {
            p.relabeled(self.state.n_qubits(), |q| q)
        } else {
            Ok(p.clone())
        }
    }

    /// Expectation of a data-register operator in the current state.
    pub fn expectation(&self, p: &PauliString) -> Result<i8> {
        self.state.expectation(&self.widen(p)?)
    }

    /// Applies a Pauli exactly (a correction, not a noisy gate).
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        let wide = self.widen(p)?;
        self.state.apply_pauli(&wide)
    }

    /// Applies a gate followed by its depolarizing channel.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_data)?;
        self.state.apply_gate(gate)?;
        depolarize(&mut self.state, gate, &self.model, &mut self.rng)
    }

    /// Measures a signed Hermitian operator. The direct path measures the
    /// unsigned operator and folds the sign into the bit, matching the
    /// extraction circuit's convention so both paths consume identical randomness.
    pub fn measure(&mut self, p: &PauliString, mode: MeasureMode) -> Result<MeasurementOutcome> {
        if !p.is_hermitian() {
            return Err(Error::NotHermitian(p.to_string()));
        }
        let wide = self.widen(p)?;
        if self.extraction {
            let circuit = synthesize_extraction(&wide, self.n_data)?;
            return run_noisy(&circuit, &mut self.state, &self.model, mode, &mut self.rng);
        }
        let neg = p.is_negative() as u8;
        let raw_mode = match mode {
            MeasureMode::Random => MeasureMode::Random,
            MeasureMode::Forced(b) => MeasureMode::Forced(b ^ neg),
        };
        let out = self
            .state
            .measure(&wide.unsigned(), raw_mode, &mut self.rng)
            .map_err(|e| match e {
                Error::ImpossibleOutcome { forced, actual, .. } => Error::ImpossibleOutcome {
                    operator: p.to_string(),
                    forced: forced ^ neg,
                    actual: actual ^ neg,
                },
                other => other,
            })?;
        Ok(MeasurementOutcome {
            bit: out.bit ^ neg,
            deterministic: out.deterministic,
        })
    }

    /// Prepares `label` in `code`. Ideal unless the model asks for noisy
    /// encoding, in which case each generator and then the logical operator
    /// is measured through the noisy path and repaired on a `-1` outcome.
    pub fn encode(&mut self, code: &StabilizerCode, label: LogicalLabel) -> Result<()> {
        if !(self.model.noisy_encoding && self.extraction) {
            let wide = if self.extraction {
                code.relocated(self.state.n_qubits(), 0)?
            } else {
                code.clone()
            };
            return codes::encode(&mut self.state, &wide, label);
        }
        for (j, g) in code.generators().iter().enumerate() {
            if self.measure(g, MeasureMode::Random)?.bit == 1 {
                self.apply_pauli(code.pure_error(j))?;
            }
        }
        let target = label.stabilizer(code);
        if self.measure(&target, MeasureMode::Random)?.bit == 1 {
            self.apply_pauli(&codes::logical_flip(code, label.basis()))?;
        }
        Ok(())
    }

    /// Destructively reads every data qubit of `code` in the per-qubit bases
    /// for a logical `basis` readout. With `logical` set, the logical
    /// operator is first projected ideally with that mode; this only serves
    /// to enumerate outcome branches in noiseless checks.
    pub fn readout(
        &mut self,
        code: &StabilizerCode,
        basis: Basis,
        logical: Option<MeasureMode>,
    ) -> Result<Readout> {
        if let Some(mode) = logical {
            let op = self.widen(&code.logical(basis))?;
            let rng = &mut self.rng;
            self.state.measure(&op, mode, rng)?;
        }
        let n = self.state.n_qubits();
        let mut bits = Vec::with_capacity(code.data_qubits().len());
        for (q, b) in code.readout_bases(basis) {
            for g in to_z_basis(b.kind(), q) {
                self.state.apply_gate(&g)?;
                depolarize(&mut self.state, &g, &self.model, &mut self.rng)?;
            }
            let z = PauliString::single(n, q, PauliKind::Z)?;
            let out = self.state.measure(&z, MeasureMode::Random, &mut self.rng)?;
            let flip = happens(self.model.p_meas, &mut self.rng) as u8;
            bits.push((q, b, out.bit ^ flip));
        }
        Ok(Readout { bits })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{code_a, code_b};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(text: &str, n: usize) -> PauliString {
        PauliString::parse(text, n).unwrap()
    }

    #[test]
    fn y_rotation_maps_y_to_z() {
        let mut y = p("+Y1", 1);
        for g in to_z_basis(PauliKind::Y, 0) {
            g.conjugate(&mut y);
        }
        assert_eq!(y.to_string(), "+Z1");
        for g in from_z_basis(PauliKind::Y, 0) {
            g.conjugate(&mut y);
        }
        assert_eq!(y.to_string(), "+Y1");
    }

    #[test]
    fn extraction_signs_on_zero_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let zero = NoiseModel::default();
        for (text, expected) in [("+Z1Z2", 0), ("-Z1Z2", 1)] {
            let mut t = StabilizerTableau::init_zero(3).unwrap();
            let c = synthesize_extraction(&p(text, 3), 2).unwrap();
            for _ in 0..3 {
                let out = run_noisy(&c, &mut t, &zero, MeasureMode::Random, &mut rng).unwrap();
                assert_eq!(out.bit, expected);
            }
            for q in 1..=3 {
                assert_eq!(t.expectation(&p(&format!("+Z{q}"), 3)).unwrap(), 1);
            }
        }
        assert!(matches!(
            synthesize_extraction(&p("+Z1Z3", 3), 2),
            Err(Error::AncillaOverlap(3))
        ));
    }

    #[test]
    fn measurement_flip_with_certainty() {
        let model = NoiseModel {
            p_meas: 1.0,
            ..Default::default()
        };
        let mut m = Machine::new(2, model, ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(
            m.measure(&p("+Z1Z2", 2), MeasureMode::Random).unwrap().bit,
            1
        );
    }

    #[test]
    fn model_validation() {
        let bad = NoiseModel {
            p2: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(NoiseModel::default().is_zero());
    }

    #[test]
    fn readout_of_encoded_zero() {
        let mut m = Machine::new(8, NoiseModel::default(), ChaCha8Rng::seed_from_u64(2)).unwrap();
        m.encode(&code_a(), LogicalLabel::Zero).unwrap();
        m.encode(&code_b(), LogicalLabel::One).unwrap();
        let ra = m.readout(&code_a(), Basis::Z, None).unwrap();
        let rb = m.readout(&code_b(), Basis::Z, None).unwrap();
        assert_eq!(ra.value_of(code_a().logical_z()), Some(1));
        assert_eq!(rb.value_of(code_b().logical_z()), Some(-1));
        for g in code_a().generators().iter().take(2) {
            assert_eq!(ra.value_of(g), Some(1));
        }
        assert_eq!(ra.value_of(&code_a().generators()[2]), None);
    }
}
