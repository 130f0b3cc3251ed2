//! Lattice surgery: merge, split, and the protocols built from joint
//! logical measurements.
//!
//! A [`JointMeasurement`] measures `P_A ⊗ P_B` between two codes by
//! measuring a set of merging generators whose product equals the joint
//! logical up to code stabilizers, then splitting by re-measuring enough of
//! the disturbed original generators. Split outcomes are never corrected
//! physically: the correcting Pauli (a product of merging generators) goes
//! into a [`PauliFrame`] and is applied to readout bits classically.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{self, Basis, StabilizerCode};
use crate::error::{Error, Result};
use crate::group::{solve_gf2, PauliGroup};
use crate::noise::{Machine, Readout};
use crate::pauli::PauliString;
use crate::tableau::MeasureMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Rough,
    Smooth,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rough" => Ok(Boundary::Rough),
            "smooth" => Ok(Boundary::Smooth),
            other => Err(Error::Config(format!("unknown boundary {other:?}"))),
        }
    }
}

/// Outcome bookkeeping of one merge/split round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SurgeryRecord {
    pub label: String,
    pub merge_bits: Vec<u8>,
    pub split_bits: Vec<u8>,
    /// Eigenvalue of the joint logical is `(-1)^m1`.
    pub m1: u8,
}

/// Pending Pauli corrections, kept as one physical Pauli string (phases dropped).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliFrame {
    pauli: PauliString,
}

impl PauliFrame {
    pub fn identity(n: usize) -> Self {
        Self {
            pauli: PauliString::identity(n),
        }
    }

    pub fn pauli(&self) -> &PauliString {
        &self.pauli
    }

    pub fn is_identity(&self) -> bool {
        self.pauli.is_trivial()
    }

    pub fn apply(&mut self, p: &PauliString) -> Result<()> {
        self.pauli = self.pauli.multiply(p)?.with_phase(0);
        Ok(())
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.apply(&other.pauli)?;
        Ok(out)
    }

    /// Logical content on `code` as exponents `(x, z)` of `X_L^x Z_L^z`.
    pub fn logical_exponents(&self, code: &StabilizerCode) -> (u8, u8) {
        let x = !self.pauli.commutes_unchecked(code.logical_z()) as u8;
        let z = !self.pauli.commutes_unchecked(code.logical_x()) as u8;
        (x, z)
    }

    /// Whether the frame flips the value of `op` read out later.
    pub fn flips(&self, op: &PauliString) -> bool {
        !self.pauli.commutes_unchecked(op)
    }
}

impl fmt::Debug for PauliFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliFrame({})", self.pauli)
    }
}

impl Serialize for PauliFrame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(&self.pauli)
    }
}

/// Measurement of `P_A ⊗ P_B` by merging and splitting two codes.
#[derive(Clone, Debug)]
pub struct JointMeasurement {
    label: String,
    code_a: StabilizerCode,
    code_b: StabilizerCode,
    joint: PauliString,
    merging: Vec<PauliString>,
    /// `∏ merging = (-1)^sign_bit · P_A P_B · s` with `s` a code stabilizer.
    sign_bit: u8,
    split: Vec<PauliString>,
    /// `split_fix[j]` anticommutes with split operator `j` and no other.
    split_fix: Vec<Option<PauliString>>,
}

impl JointMeasurement {
    pub fn new(
        label: impl Into<String>,
        code_a: &StabilizerCode,
        basis_a: Basis,
        code_b: &StabilizerCode,
        basis_b: Basis,
        merging: Vec<PauliString>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidMerge(m));
        let n = code_a.n_qubits();
        if code_b.n_qubits() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: code_b.n_qubits(),
            });
        }
        if merging.is_empty() {
            return bad("no merging generators".into());
        }
        for (i, m) in merging.iter().enumerate() {
            if m.n_qubits() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: m.n_qubits(),
                });
            }
            if !m.is_hermitian() {
                return Err(Error::NotHermitian(m.to_string()));
            }
            if let Some(other) = merging[i + 1..].iter().find(|o| !m.commutes_unchecked(o)) {
                return bad(format!("merging generators {m} and {other} anticommute"));
            }
        }
        let joint = code_a.logical(basis_a).multiply(&code_b.logical(basis_b))?;
        let originals: Vec<PauliString> = code_a
            .generators()
            .iter()
            .chain(code_b.generators())
            .cloned()
            .collect();
        let group = PauliGroup::new(n, &originals)?;
        let mut product = PauliString::identity(n);
        for m in &merging {
            product = product.multiply(m)?;
        }
        let residual = product.multiply(&joint)?;
        let Some(sign) = group.sign_of(&residual) else {
            return bad(format!(
                "product of merging generators {product} is not {joint} up to code stabilizers"
            ));
        };
        // The residual stabilizer must survive the merge, or the joint value is not fixed.
        if let Some(m) = merging.iter().find(|m| !m.commutes_unchecked(&residual)) {
            return bad(format!(
                "merging generator {m} disturbs the stabilizer relating it to {joint}"
            ));
        }
        let mut jm = Self {
            label: label.into(),
            code_a: code_a.clone(),
            code_b: code_b.clone(),
            joint,
            merging,
            sign_bit: (sign < 0) as u8,
            split: Vec::new(),
            split_fix: Vec::new(),
        };
        let split = jm.default_split(&originals)?;
        jm.set_split(split)?;
        Ok(jm)
    }

    /// Minimal set of disturbed original generators whose measurement
    /// restores the original stabilizer group.
    fn default_split(&self, originals: &[PauliString]) -> Result<Vec<PauliString>> {
        let n = self.joint.n_qubits();
        let disturbs = |g: &PauliString| self.merging.iter().any(|m| !m.commutes_unchecked(g));
        let (disturbed, kept): (Vec<_>, Vec<_>) =
            originals.iter().cloned().partition(|g| disturbs(g));
        let mut span = PauliGroup::new(n, &kept)?;
        // Products of disturbed generators that commute with every merging generator.
        for mask in 1u32..1 << disturbed.len() {
            let mut prod = PauliString::identity(n);
            for (i, g) in disturbed.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    prod = prod.multiply(g)?;
                }
            }
            if !disturbs(&prod) {
                span.insert(&prod)?;
            }
        }
        let mut split = Vec::new();
        for g in disturbed {
            if !span.contains_up_to_phase(&g) {
                span.insert(&g)?;
                split.push(g);
            }
        }
        Ok(split)
    }

    /// Replaces the split operators (e.g. to measure a generator that the
    /// merge did not disturb, as a consistency check).
    pub fn with_split(mut self, split: Vec<PauliString>) -> Result<Self> {
        self.set_split(split)?;
        Ok(self)
    }

    fn set_split(&mut self, split: Vec<PauliString>) -> Result<()> {
        for s in &split {
            if !s.is_hermitian() {
                return Err(Error::NotHermitian(s.to_string()));
            }
            if !s.commutes(&self.joint)? {
                return Err(Error::InvalidMerge(format!(
                    "split operator {s} would disturb the joint logical {}",
                    self.joint
                )));
            }
        }
        // Column i: anticommutation pattern of merging generator i with the split operators.
        let rows: Vec<Vec<bool>> = split
            .iter()
            .map(|s| {
                self.merging
                    .iter()
                    .map(|m| !m.commutes_unchecked(s))
                    .collect()
            })
            .collect();
        let n = self.joint.n_qubits();
        self.split_fix = (0..split.len())
            .map(|j| {
                let rhs: Vec<bool> = (0..split.len()).map(|i| i == j).collect();
                solve_gf2(&rows, &rhs).map(|x| {
                    let mut fix = PauliString::identity(n);
                    for (m, used) in self.merging.iter().zip(x) {
                        if used {
                            fix = fix.multiply(m).expect("same register").with_phase(0);
                        }
                    }
                    fix
                })
            })
            .collect();
        self.split = split;
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn code_a(&self) -> &StabilizerCode {
        &self.code_a
    }

    pub fn code_b(&self) -> &StabilizerCode {
        &self.code_b
    }

    /// `P_A ⊗ P_B`.
    pub fn joint_logical(&self) -> &PauliString {
        &self.joint
    }

    pub fn merging_generators(&self) -> &[PauliString] {
        &self.merging
    }

    pub fn split_operators(&self) -> &[PauliString] {
        &self.split
    }

    /// Sign relating the merging product to the joint logical.
    pub fn sign_bit(&self) -> u8 {
        self.sign_bit
    }

    /// `m1` implied by the merge outcomes.
    pub fn joint_bit(&self, merge_bits: &[u8]) -> u8 {
        merge_bits.iter().fold(self.sign_bit, |acc, b| acc ^ b)
    }

    /// Frame correction that maps split outcome `bits` onto the all-zero branch.
    pub fn split_correction(&self, bits: &[u8]) -> PauliString {
        let mut fix = PauliString::identity(self.joint.n_qubits());
        for (b, f) in bits.iter().zip(&self.split_fix) {
            if let (1, Some(f)) = (b, f) {
                fix = fix.multiply(f).expect("same register").with_phase(0);
            }
        }
        fix
    }

    /// The merged code with outcome-dependent merging-generator signs.
    pub fn merged_stabilizers(&self, merge_bits: &[u8]) -> Vec<PauliString> {
        let originals = self
            .code_a
            .generators()
            .iter()
            .chain(self.code_b.generators());
        let disturbs = |g: &PauliString| self.merging.iter().any(|m| !m.commutes_unchecked(g));
        let mut out: Vec<PauliString> = originals.filter(|g| !disturbs(g)).cloned().collect();
        for (m, &b) in self.merging.iter().zip(merge_bits) {
            out.push(if b == 1 { m.negated() } else { m.clone() });
        }
        out
    }

    pub fn merge<R: Rng>(
        &self,
        machine: &mut Machine<R>,
        modes: &[MeasureMode],
    ) -> Result<Vec<u8>> {
        measure_all(machine, &self.merging, modes)
    }

    pub fn split<R: Rng>(
        &self,
        machine: &mut Machine<R>,
        modes: &[MeasureMode],
    ) -> Result<Vec<u8>> {
        measure_all(machine, &self.split, modes)
    }

    /// Merge then split; the split correction is added to `frame`.
    pub fn run<R: Rng>(
        &self,
        machine: &mut Machine<R>,
        merge_modes: &[MeasureMode],
        split_modes: &[MeasureMode],
        frame: &mut PauliFrame,
    ) -> Result<SurgeryRecord> {
        let merge_bits = self.merge(machine, merge_modes)?;
        let split_bits = self.split(machine, split_modes)?;
        frame.apply(&self.split_correction(&split_bits))?;
        Ok(SurgeryRecord {
            label: self.label.clone(),
            m1: self.joint_bit(&merge_bits),
            merge_bits,
            split_bits,
        })
    }
}

fn measure_all<R: Rng>(
    machine: &mut Machine<R>,
    ops: &[PauliString],
    modes: &[MeasureMode],
) -> Result<Vec<u8>> {
    ops.iter()
        .enumerate()
        .map(|(i, op)| {
            let mode = modes.get(i).copied().unwrap_or(MeasureMode::Random);
            Ok(machine.measure(op, mode)?.bit)
        })
        .collect()
}

fn p(text: &str, n: usize) -> PauliString {
    PauliString::parse(text, n).expect("static literal")
}

/// Rough lattice surgery between codes A and B: measures `X_L^A X_L^B`
/// through `+X3X5`, `+X4X6`, split by `S2^A = -Z3Z4`.
pub fn rough() -> JointMeasurement {
    static CELL: OnceLock<JointMeasurement> = OnceLock::new();
    CELL.get_or_init(|| {
        JointMeasurement::new(
            "rough",
            &codes::code_a(),
            Basis::X,
            &codes::code_b(),
            Basis::X,
            vec![p("+X3X5", 8), p("+X4X6", 8)],
        )
        .expect("static merge")
    })
    .clone()
}

/// Smooth lattice surgery: measures `Z_L^A Z_L^B` through `+Z2Z4Z5Z7`.
/// The merge disturbs no generator, so the split re-measures `S3^A`, which
/// is deterministic.
pub fn smooth() -> JointMeasurement {
    static CELL: OnceLock<JointMeasurement> = OnceLock::new();
    CELL.get_or_init(|| {
        let a = codes::code_a();
        let s3 = a.generators()[2].clone();
        JointMeasurement::new(
            "smooth",
            &a,
            Basis::Z,
            &codes::code_b(),
            Basis::Z,
            vec![p("+Z2Z4Z5Z7", 8)],
        )
        .and_then(|jm| jm.with_split(vec![s3]))
        .expect("static merge")
    })
    .clone()
}

pub fn lattice_surgery(boundary: Boundary) -> JointMeasurement {
    match boundary {
        Boundary::Rough => rough(),
        Boundary::Smooth => smooth(),
    }
}

/// `Z_L^A X_L^B` through `Z2X5`, `Z4X6`.
pub fn zx_measurement() -> JointMeasurement {
    static CELL: OnceLock<JointMeasurement> = OnceLock::new();
    CELL.get_or_init(|| {
        JointMeasurement::new(
            "zx",
            &codes::code_a(),
            Basis::Z,
            &codes::code_b(),
            Basis::X,
            vec![p("+Z2X5", 8), p("+Z4X6", 8)],
        )
        .expect("static merge")
    })
    .clone()
}

/// The three 4-qubit codes of the CNOT protocol on a 12-qubit register:
/// control (1–4), ancilla (5–8), target (9–12).
pub fn cnot_codes() -> [StabilizerCode; 3] {
    static CELL: OnceLock<[StabilizerCode; 3]> = OnceLock::new();
    CELL.get_or_init(|| {
        ["C", "anc", "T"].map(|label| {
            let offset = match label {
                "C" => 0,
                "anc" => 4,
                _ => 8,
            };
            codes::four_qubit_code(label, 12, offset).expect("static code")
        })
    })
    .clone()
}

/// `Z_C Z_anc` (smooth) and `X_anc X_T` (rough) for the CNOT protocol.
pub fn cnot_measurements() -> [JointMeasurement; 2] {
    static CELL: OnceLock<[JointMeasurement; 2]> = OnceLock::new();
    CELL.get_or_init(|| {
        let [c, anc, t] = cnot_codes();
        let zz =
            JointMeasurement::new("zz", &c, Basis::Z, &anc, Basis::Z, vec![p("+Z2Z4Z5Z7", 12)])
                .and_then(|jm| jm.with_split(vec![c.generators()[2].clone()]))
                .expect("static merge");
        let xx = JointMeasurement::new(
            "xx",
            &anc,
            Basis::X,
            &t,
            Basis::X,
            vec![p("+X7X9", 12), p("+X8X10", 12)],
        )
        .expect("static merge");
        [zz, xx]
    })
    .clone()
}

/// Logical correction for one outcome branch, as exponents of `X_L^x Z_L^z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LogicalCorrection {
    pub x: u8,
    pub z: u8,
}

/// Hadamard-by-surgery corrections on B, indexed by `[m1][m2]`.
/// Derived with the dense simulator; `verify::derive_hadamard_corrections` regenerates it.
pub const HADAMARD_CORRECTIONS: [[LogicalCorrection; 2]; 2] = [
    [
        LogicalCorrection { x: 0, z: 0 },
        LogicalCorrection { x: 1, z: 0 },
    ],
    [
        LogicalCorrection { x: 0, z: 1 },
        LogicalCorrection { x: 1, z: 1 },
    ],
];

/// CNOT-by-surgery corrections `(control, target)`, indexed by `[a][b][c]`
/// with `a` the `Z_C Z_anc` bit, `b` the `X_anc X_T` bit and `c` the
/// ancilla's Z readout. Derived with the dense simulator;
/// `verify::derive_cnot_corrections` regenerates it.
pub const CNOT_CORRECTIONS: [[[[LogicalCorrection; 2]; 2]; 2]; 2] = {
    const fn c(x: u8, z: u8) -> LogicalCorrection {
        LogicalCorrection { x, z }
    }
    [
        [
            [[c(0, 0), c(0, 0)], [c(0, 0), c(1, 0)]],
            [[c(0, 1), c(0, 0)], [c(0, 1), c(1, 0)]],
        ],
        [
            [[c(0, 0), c(1, 0)], [c(0, 0), c(0, 0)]],
            [[c(0, 1), c(1, 0)], [c(0, 1), c(0, 0)]],
        ],
    ]
};

fn logical_pauli(code: &StabilizerCode, c: LogicalCorrection) -> PauliString {
    let mut out = PauliString::identity(code.n_qubits());
    if c.x == 1 {
        out = out.multiply(code.logical_x()).expect("same register");
    }
    if c.z == 1 {
        out = out.multiply(code.logical_z()).expect("same register");
    }
    out.with_phase(0)
}

/// A protocol that ends with logical outputs in one or two codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    BellRough,
    BellSmooth,
    Teleport,
    Cnot,
    Hadamard,
}

/// Whether an ancilla bit comes from a merge or a split measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitRole {
    Merge,
    Split,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::BellRough,
        Protocol::BellSmooth,
        Protocol::Teleport,
        Protocol::Cnot,
        Protocol::Hadamard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::BellRough => "bell_rough",
            Protocol::BellSmooth => "bell_smooth",
            Protocol::Teleport => "teleport",
            Protocol::Cnot => "cnot",
            Protocol::Hadamard => "hadamard",
        }
    }

    pub fn is_bell(self) -> bool {
        matches!(self, Protocol::BellRough | Protocol::BellSmooth)
    }

    pub fn n_data(self) -> usize {
        if self == Protocol::Cnot {
            12
        } else {
            8
        }
    }

    /// Codes receiving the user-supplied input labels.
    pub fn input_codes(self) -> Vec<StabilizerCode> {
        match self {
            Protocol::BellRough | Protocol::BellSmooth => vec![codes::code_a(), codes::code_b()],
            Protocol::Teleport | Protocol::Hadamard => vec![codes::code_a()],
            Protocol::Cnot => {
                let [c, _, t] = cnot_codes();
                vec![c, t]
            }
        }
    }

    /// Codes prepared by the protocol itself.
    pub fn fixed_preparations(self) -> Vec<(StabilizerCode, codes::LogicalLabel)> {
        use codes::LogicalLabel::{Plus, Zero};
        match self {
            Protocol::BellRough | Protocol::BellSmooth => vec![],
            Protocol::Teleport | Protocol::Hadamard => vec![(codes::code_b(), Zero)],
            Protocol::Cnot => vec![(cnot_codes()[1].clone(), Plus)],
        }
    }

    /// Codes holding the logical output, in logical-qubit order.
    pub fn output_codes(self) -> Vec<StabilizerCode> {
        match self {
            Protocol::BellRough | Protocol::BellSmooth => vec![codes::code_a(), codes::code_b()],
            Protocol::Teleport | Protocol::Hadamard => vec![codes::code_b()],
            Protocol::Cnot => {
                let [c, _, t] = cnot_codes();
                vec![c, t]
            }
        }
    }

    /// Codes read out destructively inside the protocol, with their basis.
    pub fn consumed_codes(self) -> Vec<(StabilizerCode, Basis)> {
        match self {
            Protocol::BellRough | Protocol::BellSmooth => vec![],
            Protocol::Teleport => vec![(codes::code_a(), Basis::Z)],
            Protocol::Hadamard => vec![(codes::code_a(), Basis::X)],
            Protocol::Cnot => vec![(cnot_codes()[1].clone(), Basis::Z)],
        }
    }

    /// The joint measurements performed, in order.
    pub fn surgeries(self) -> Vec<JointMeasurement> {
        match self {
            Protocol::BellRough | Protocol::Teleport => vec![rough()],
            Protocol::BellSmooth => vec![smooth()],
            Protocol::Hadamard => vec![zx_measurement()],
            Protocol::Cnot => cnot_measurements().into(),
        }
    }

    /// Names and roles of the ancilla outcome bits, in execution order.
    pub fn ancilla_bits(self) -> Vec<(&'static str, BitRole)> {
        use BitRole::{Merge, Split};
        match self {
            Protocol::BellRough | Protocol::Teleport | Protocol::Hadamard => {
                vec![("m", Merge), ("m'", Merge), ("m''", Split)]
            }
            Protocol::BellSmooth => vec![("m", Merge), ("m''", Split)],
            Protocol::Cnot => vec![
                ("a", Merge),
                ("a_split", Split),
                ("b", Merge),
                ("b'", Merge),
                ("b_split", Split),
            ],
        }
    }

    /// The joint logical measured by the Bell protocols, on the output codes.
    pub fn bell_joint(self) -> Option<(Basis, Basis)> {
        match self {
            Protocol::BellRough => Some((Basis::X, Basis::X)),
            Protocol::BellSmooth => Some((Basis::Z, Basis::Z)),
            _ => None,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown protocol {s:?}")))
    }
}

/// Readout of a code consumed inside a protocol, frame-corrected.
#[derive(Clone, Debug)]
pub struct ConsumedReadout {
    pub code: StabilizerCode,
    pub basis: Basis,
    pub readout: Readout,
}

/// Everything a protocol execution produced.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub records: Vec<SurgeryRecord>,
    /// Ancilla bits in [`Protocol::ancilla_bits`] order.
    pub ancilla_bits: Vec<u8>,
    /// Logical bits of consumed readouts (`m2` or `c`).
    pub readout_bits: Vec<u8>,
    pub frame: PauliFrame,
    pub consumed: Vec<ConsumedReadout>,
}

/// Encodes the inputs and the protocol's own preparations.
pub fn prepare<R: Rng>(
    machine: &mut Machine<R>,
    protocol: Protocol,
    inputs: &[codes::LogicalLabel],
) -> Result<()> {
    let codes = protocol.input_codes();
    if inputs.len() != codes.len() {
        return Err(Error::Config(format!(
            "{protocol} takes {} input labels, got {}",
            codes.len(),
            inputs.len()
        )));
    }
    for (code, &label) in codes.iter().zip(inputs) {
        machine.encode(code, label)?;
    }
    for (code, label) in protocol.fixed_preparations() {
        machine.encode(&code, label)?;
    }
    Ok(())
}

/// Runs the surgery steps and internal readouts of `protocol` on a prepared
/// machine. `ancilla_modes` follows [`Protocol::ancilla_bits`] (missing
/// entries are random); `readout_modes` optionally forces the logical bit of
/// each consumed readout (noiseless branch enumeration only). The returned
/// frame carries every correction, including the protocol's logical ones.
pub fn execute<R: Rng>(
    machine: &mut Machine<R>,
    protocol: Protocol,
    ancilla_modes: &[MeasureMode],
    readout_modes: &[Option<MeasureMode>],
) -> Result<ProtocolRun> {
    let mut frame = PauliFrame::identity(protocol.n_data());
    let mut records = Vec::new();
    let mut modes = ancilla_modes.iter().copied();
    for jm in protocol.surgeries() {
        let merge: Vec<_> = jm
            .merging_generators()
            .iter()
            .map(|_| modes.next().unwrap_or(MeasureMode::Random))
            .collect();
        let split: Vec<_> = jm
            .split_operators()
            .iter()
            .map(|_| modes.next().unwrap_or(MeasureMode::Random))
            .collect();
        records.push(jm.run(machine, &merge, &split, &mut frame)?);
    }
    let ancilla_bits: Vec<u8> = records
        .iter()
        .flat_map(|r| r.merge_bits.iter().chain(&r.split_bits).copied())
        .collect();

    let mut consumed = Vec::new();
    let mut readout_bits = Vec::new();
    for (i, (code, basis)) in protocol.consumed_codes().into_iter().enumerate() {
        let logical = code.logical(basis);
        let flip = frame.flips(&logical) as u8;
        let mode = readout_modes.get(i).copied().flatten().map(|m| match m {
            MeasureMode::Forced(b) => MeasureMode::Forced(b ^ flip ^ logical.is_negative() as u8),
            MeasureMode::Random => MeasureMode::Random,
        });
        let mut readout = machine.readout(&code, basis, mode)?;
        readout.apply_frame(frame.pauli());
        let value = readout
            .value_of(&logical)
            .expect("readout bases match the logical");
        readout_bits.push((value < 0) as u8);
        consumed.push(ConsumedReadout {
            code,
            basis,
            readout,
        });
    }

    let outputs = protocol.output_codes();
    match protocol {
        Protocol::BellRough | Protocol::BellSmooth => {}
        Protocol::Teleport => {
            let (m1, m2) = (records[0].m1, readout_bits[0]);
            frame.apply(&logical_pauli(
                &outputs[0],
                LogicalCorrection { x: m2, z: m1 },
            ))?;
        }
        Protocol::Hadamard => {
            let fix = HADAMARD_CORRECTIONS[records[0].m1 as usize][readout_bits[0] as usize];
            frame.apply(&logical_pauli(&outputs[0], fix))?;
        }
        Protocol::Cnot => {
            let (a, b, c) = (records[0].m1, records[1].m1, readout_bits[0]);
            let fixes = CNOT_CORRECTIONS[a as usize][b as usize][c as usize];
            for (code, fix) in outputs.iter().zip(fixes) {
                frame.apply(&logical_pauli(code, fix))?;
            }
        }
    }
    Ok(ProtocolRun {
        records,
        ancilla_bits,
        readout_bits,
        frame,
        consumed,
    })
}
