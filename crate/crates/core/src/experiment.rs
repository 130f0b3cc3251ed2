//! Seeded Monte-Carlo runs of a protocol, with post-selection, estimators
//! and JSON/CSV output.
//!
//! Each run uses a list of *settings*: one readout basis per logical output.
//! Every setting gets `shots` shots. A shot prepares the inputs, executes the
//! protocol, applies the ancilla policy, reads all output data qubits in the
//! setting's bases and evaluates, from the frame-corrected bits, every
//! observable the setting can see. Shot `s` of setting `k` draws from
//! `ChaCha8(seed)` on stream `k << 32 | s`, so results do not depend on
//! thread scheduling.
//!
//! Estimators: an observable's expectation is the mean of its `±1` values
//! over kept shots, with Wald error `sqrt((1 - mean²) / n)`. The target
//! fidelity is `2^-k Σ_g sign(g) ⟨g⟩` over the expected state's stabilizer
//! group; for one logical qubit this is `(1 + s⟨P⟩) / 2`.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{self, Basis, LogicalLabel, StabilizerCode};
use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::group::PauliGroup;
use crate::noise::{Machine, NoiseModel, Readout};
use crate::pauli::{PauliKind, PauliString};
use crate::surgery::{self, BitRole, PauliFrame, Protocol, SurgeryRecord};
use crate::tableau::{MeasureMode, StabilizerTableau};

/// Per-bit pattern such as `00x`: `0`/`1` pin a bit, `x` leaves it free.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitPattern(pub Vec<Option<u8>>);

impl BitPattern {
    pub fn matches(&self, bits: &[u8]) -> bool {
        self.0
            .iter()
            .zip(bits)
            .all(|(p, b)| p.is_none_or(|p| p == *b))
    }
}

impl std::str::FromStr for BitPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| match c {
                '0' => Ok(Some(0)),
                '1' => Ok(Some(1)),
                'x' | 'X' => Ok(None),
                other => Err(Error::Config(format!("bad bit {other:?} in pattern {s:?}"))),
            })
            .collect::<Result<_>>()
            .map(BitPattern)
    }
}

impl fmt::Display for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(match b {
                Some(0) => "0",
                Some(_) => "1",
                None => "x",
            })?;
        }
        Ok(())
    }
}

impl Serialize for BitPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Treatment of the protocol's ancilla outcomes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncillaPolicy {
    #[default]
    KeepAll,
    /// Project pinned bits onto the given outcome.
    Force(BitPattern),
    /// Sample freely and discard shots whose pinned bits differ.
    Postselect(BitPattern),
}

impl AncillaPolicy {
    fn pattern(&self) -> Option<&BitPattern> {
        match self {
            AncillaPolicy::KeepAll => None,
            AncillaPolicy::Force(p) | AncillaPolicy::Postselect(p) => Some(p),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionPolicy {
    None,
    /// Discard shots where a stabilizer checkable in the readout basis is `-1`.
    #[default]
    BasisStabilizerChecks,
}

fn default_shots() -> u64 {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    #[serde(rename = "input_labels", alias = "inputs")]
    pub inputs: Vec<LogicalLabel>,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Shots per readout setting.
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ancilla_policy: AncillaPolicy,
    #[serde(default)]
    pub detection_policy: DetectionPolicy,
}

impl ExperimentConfig {
    pub fn new(protocol: Protocol, inputs: Vec<LogicalLabel>) -> Self {
        Self {
            protocol,
            inputs,
            noise: NoiseModel::default(),
            shots: default_shots(),
            seed: 0,
            ancilla_policy: AncillaPolicy::default(),
            detection_policy: DetectionPolicy::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if self.shots > u32::MAX as u64 {
            return Err(Error::Config("shots must fit in 32 bits".into()));
        }
        let expected = self.protocol.input_codes().len();
        if self.inputs.len() != expected {
            return Err(Error::Config(format!(
                "{} takes {expected} input labels, got {}",
                self.protocol,
                self.inputs.len()
            )));
        }
        if let Some(p) = self.ancilla_policy.pattern() {
            let n = self.protocol.ancilla_bits().len();
            if p.0.len() != n {
                let names: Vec<_> = self
                    .protocol
                    .ancilla_bits()
                    .iter()
                    .map(|(n, _)| *n)
                    .collect();
                return Err(Error::Config(format!(
                    "{} has {n} ancilla bits ({}), pattern {p} has {}",
                    self.protocol,
                    names.join(", "),
                    p.0.len()
                )));
            }
        }
        Ok(())
    }
}

/// Mean of `±1` values with its Wald standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: Option<f64>,
    pub se: Option<f64>,
    pub kept: u64,
}

impl Estimate {
    fn from_tally(sum: i64, n: u64) -> Self {
        if n == 0 {
            return Self {
                value: None,
                se: None,
                kept: 0,
            };
        }
        let mean = sum as f64 / n as f64;
        Self {
            value: Some(mean),
            se: Some(((1.0 - mean * mean).max(0.0) / n as f64).sqrt()),
            kept: n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observable {
    pub name: String,
    pub operator: String,
    pub raw: Estimate,
    pub postselected: Estimate,
    /// Shots in settings where the observable is readable.
    pub total: u64,
}

/// A linear combination of expectations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fidelity {
    pub name: String,
    pub raw: Option<f64>,
    pub se_raw: Option<f64>,
    pub postselected: Option<f64>,
    pub se_postselected: Option<f64>,
    /// The estimate fell outside `[0, 1]`; it is reported unclamped.
    pub out_of_range: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SettingCounts {
    pub bases: String,
    pub total: u64,
    pub merge_kept: u64,
    pub ancilla_kept: u64,
    pub detection_kept: u64,
}

/// Survival probabilities: merge = merge-bit pass / total, split = all-bit
/// pass / merge pass, ancilla = all-bit pass / total, detection = detection
/// pass / ancilla pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Survival {
    pub merge: Option<f64>,
    pub split: Option<f64>,
    pub ancilla: Option<f64>,
    pub detection: Option<f64>,
}

impl Survival {
    fn of(c: &SettingCounts) -> Self {
        let ratio = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
        Self {
            merge: ratio(c.merge_kept, c.total),
            split: ratio(c.ancilla_kept, c.merge_kept),
            ancilla: ratio(c.ancilla_kept, c.total),
            detection: ratio(c.detection_kept, c.ancilla_kept),
        }
    }

    fn mean(all: &[Survival]) -> Self {
        let avg = |f: fn(&Survival) -> Option<f64>| {
            let vals: Vec<f64> = all.iter().filter_map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        Self {
            merge: avg(|s| s.merge),
            split: avg(|s| s.split),
            ancilla: avg(|s| s.ancilla),
            detection: avg(|s| s.detection),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetElement {
    /// Element of the expected logical stabilizer group (logical qubit labels).
    pub element: String,
    pub operator: String,
    pub raw: Estimate,
    pub postselected: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub protocol: Protocol,
    pub inputs: Vec<LogicalLabel>,
    /// Joint-measurement bit the Bell target assumes.
    pub target_m1: Option<u8>,
    pub settings: Vec<SettingCounts>,
    pub survival: Vec<Survival>,
    pub mean_survival: Survival,
    pub stabilizers: Vec<Observable>,
    pub mean_stabilizer: Fidelity,
    pub logicals: Vec<Observable>,
    pub target: Vec<TargetElement>,
    pub fidelities: Vec<Fidelity>,
}

impl ExperimentResult {
    pub fn fidelity(&self, name: &str) -> Option<&Fidelity> {
        self.fidelities.iter().find(|f| f.name == name)
    }

    pub fn observable(&self, name: &str) -> Option<&Observable> {
        self.stabilizers
            .iter()
            .chain(&self.logicals)
            .find(|o| o.name == name)
    }
}

/// Bell-state targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BellState::PhiPlus => "F_phi+",
            BellState::PhiMinus => "F_phi-",
            BellState::PsiPlus => "F_psi+",
            BellState::PsiMinus => "F_psi-",
        }
    }

    /// Eigenvalues of `(ZZ, XX, YY)`.
    pub fn signature(self) -> [f64; 3] {
        match self {
            BellState::PhiPlus => [1.0, 1.0, -1.0],
            BellState::PhiMinus => [1.0, -1.0, 1.0],
            BellState::PsiPlus => [-1.0, 1.0, 1.0],
            BellState::PsiMinus => [-1.0, -1.0, -1.0],
        }
    }
}

/// `F = ¼(1 + s_zz⟨ZZ⟩ + s_xx⟨XX⟩ + s_yy⟨YY⟩)` with SE `¼·sqrt(Σ SE²)`.
pub fn bell_fidelity(expectations: [f64; 3], errors: [f64; 3], target: BellState) -> (f64, f64) {
    let s = target.signature();
    let f = 0.25 * (1.0 + (0..3).map(|i| s[i] * expectations[i]).sum::<f64>());
    let se = 0.25 * errors.iter().map(|e| e * e).sum::<f64>().sqrt();
    (f, se)
}

/// Readout checks for `code` in `basis`; see [`codes::basis_checks`].
pub fn basis_checks(basis: Basis, code: &StabilizerCode) -> Vec<PauliString> {
    codes::basis_checks(basis, code)
}

fn label_gates(label: LogicalLabel, q: usize) -> Vec<Gate> {
    match label {
        LogicalLabel::Zero => vec![],
        LogicalLabel::One => vec![Gate::X(q)],
        LogicalLabel::Plus => vec![Gate::H(q)],
        LogicalLabel::Minus => vec![Gate::X(q), Gate::H(q)],
        LogicalLabel::PlusI => vec![Gate::H(q), Gate::S(q)],
        LogicalLabel::MinusI => vec![Gate::X(q), Gate::H(q), Gate::S(q)],
    }
}

/// The expected logical output as a tableau on the output logical qubits.
/// For Bell protocols the joint measurement is post-selected on `m1`,
/// falling back to its deterministic value when `m1` is impossible.
pub fn expected_logical(
    protocol: Protocol,
    inputs: &[LogicalLabel],
    m1: u8,
) -> Result<StabilizerTableau> {
    let mut t = StabilizerTableau::init_zero(inputs.len())?;
    for (q, &label) in inputs.iter().enumerate() {
        t.apply_gates(&label_gates(label, q))?;
    }
    let mut no_rng = rand::rngs::mock::StepRng::new(0, 0);
    match protocol {
        Protocol::BellRough | Protocol::BellSmooth => {
            let (a, b) = protocol.bell_joint().expect("bell protocol");
            let joint = PauliString::from_sparse(2, &[(0, a.kind()), (1, b.kind())])?;
            if t.measure(&joint, MeasureMode::Forced(m1), &mut no_rng)
                .is_err()
            {
                t.measure(&joint, MeasureMode::Random, &mut no_rng)?;
            }
        }
        Protocol::Teleport => {}
        Protocol::Hadamard => t.apply_gate(&Gate::H(0))?,
        Protocol::Cnot => t.apply_gate(&Gate::Cnot(0, 1))?,
    }
    Ok(t)
}

/// All non-identity elements of the group generated by `gens`.
fn group_elements(gens: &[PauliString]) -> Vec<PauliString> {
    let n = gens[0].n_qubits();
    (1u32..1 << gens.len())
        .map(|mask| {
            gens.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .fold(PauliString::identity(n), |acc, (_, g)| {
                    acc.multiply(g).expect("same width")
                })
        })
        .collect()
}

/// A logical Pauli mapping the `from` state onto the `to` state, if any.
fn logical_fix(from: &StabilizerTableau, to: &StabilizerTableau) -> Option<PauliString> {
    let k = from.n_qubits();
    let target = PauliGroup::new(k, to.stabilizers()).ok()?;
    (0..1usize << (2 * k)).find_map(|code| {
        let mut q = PauliString::identity(k);
        for i in 0..k {
            q.set(
                i,
                [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z][code >> (2 * i) & 3],
            );
        }
        from.stabilizers()
            .iter()
            .all(|g| {
                let image = if g.commutes_unchecked(&q) {
                    g.clone()
                } else {
                    g.negated()
                };
                target.contains(&image)
            })
            .then_some(q)
    })
}

fn bases_name(bases: &[Basis]) -> String {
    bases.iter().map(|b| b.letter()).collect()
}

/// A measured operator and the settings in which it is readable.
#[derive(Clone, Debug)]
struct Probe {
    physical: PauliString,
    settings: Vec<bool>,
}

fn readable(logical: &PauliString, bases: &[Basis]) -> bool {
    (0..logical.n_qubits()).all(|k| {
        let kind = logical.kind(k);
        kind == PauliKind::I || kind == bases[k].kind()
    })
}

/// Everything fixed before the shots run.
struct Plan {
    config: ExperimentConfig,
    outputs: Vec<StabilizerCode>,
    settings: Vec<Vec<Basis>>,
    probes: Vec<Probe>,
    stabilizer_names: Vec<String>,
    logical_names: Vec<String>,
    target: Vec<(PauliString, usize)>,
    target_m1: Option<u8>,
    /// Bell protocols with free merge bits: frame fix applied when `m1 != target_m1`.
    bell_fix: Option<PauliString>,
    modes: Vec<MeasureMode>,
}

impl Plan {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let protocol = config.protocol;
        let outputs = protocol.output_codes();
        let k = outputs.len();
        let pattern = config.ancilla_policy.pattern();
        let roles = protocol.ancilla_bits();

        let (target_m1, bell_fix) = if protocol.is_bell() {
            let merge_pins: Vec<Option<u8>> = roles
                .iter()
                .enumerate()
                .filter(|(_, (_, role))| *role == BitRole::Merge)
                .map(|(i, _)| pattern.and_then(|p| p.0[i]))
                .collect();
            if merge_pins.iter().all(Option::is_some) {
                let m1 = merge_pins.iter().fold(0, |acc, b| acc ^ b.unwrap());
                (Some(m1), None)
            } else {
                let zero = expected_logical(protocol, &config.inputs, 0)?;
                let one = expected_logical(protocol, &config.inputs, 1)?;
                let fix = logical_fix(&one, &zero)
                    .map(|q| codes::logical_to_physical(&q, &outputs))
                    .transpose()?;
                (Some(0), fix)
            }
        } else {
            (None, None)
        };
        let expected = expected_logical(protocol, &config.inputs, target_m1.unwrap_or(0))?;
        let elements = group_elements(expected.stabilizers());

        let mut settings: Vec<Vec<Basis>> = Basis::ALL.iter().map(|&b| vec![b; k]).collect();
        for e in &elements {
            if !settings.iter().any(|s| readable(e, s)) {
                settings.push(
                    (0..k)
                        .map(|q| match e.kind(q) {
                            PauliKind::X => Basis::X,
                            PauliKind::Y => Basis::Y,
                            _ => Basis::Z,
                        })
                        .collect(),
                );
            }
        }

        let mut probes = Vec::new();
        let mut stabilizer_names = Vec::new();
        for code in &outputs {
            for (j, g) in code.generators().iter().enumerate() {
                let settings_ok = settings
                    .iter()
                    .map(|s| {
                        let pos = outputs
                            .iter()
                            .position(|c| c.label() == code.label())
                            .unwrap();
                        let rb = code.readout_bases(s[pos]);
                        g.support()
                            .iter()
                            .all(|q| rb.iter().any(|(r, b)| r == q && b.kind() == g.kind(*q)))
                    })
                    .collect();
                stabilizer_names.push(format!("{}.S{}", code.label(), j + 1));
                probes.push(Probe {
                    physical: g.clone(),
                    settings: settings_ok,
                });
            }
        }
        let mut logical_names = Vec::new();
        for b in Basis::ALL {
            let logical = PauliString::uniform(k, b.kind(), &(0..k).collect::<Vec<_>>())?;
            logical_names.push(b.letter().to_string().repeat(k));
            probes.push(Probe {
                physical: codes::logical_to_physical(&logical, &outputs)?,
                settings: settings.iter().map(|s| readable(&logical, s)).collect(),
            });
        }
        let mut target = Vec::new();
        for e in elements {
            target.push((e.clone(), probes.len()));
            probes.push(Probe {
                physical: codes::logical_to_physical(&e, &outputs)?,
                settings: settings.iter().map(|s| readable(&e, s)).collect(),
            });
        }

        let modes = (0..roles.len())
            .map(|i| match &config.ancilla_policy {
                AncillaPolicy::Force(p) => p.0[i].map_or(MeasureMode::Random, MeasureMode::Forced),
                _ => MeasureMode::Random,
            })
            .collect();

        Ok(Self {
            config: config.clone(),
            outputs,
            settings,
            probes,
            stabilizer_names,
            logical_names,
            target,
            target_m1,
            bell_fix,
            modes,
        })
    }
}

/// One shot's outcome, also written out as a per-shot record.
#[derive(Clone, Debug, Serialize)]
pub struct ShotRecord {
    pub setting: String,
    pub shot: u64,
    /// A forced outcome was impossible under noise; the shot was discarded.
    pub aborted: bool,
    pub ancilla_bits: Vec<u8>,
    pub readout_bits: Vec<u8>,
    pub surgery: Vec<SurgeryRecord>,
    pub frame: Option<PauliFrame>,
    pub merge_pass: bool,
    pub ancilla_pass: bool,
    pub detection_pass: bool,
    #[serde(skip)]
    values: Vec<Option<i8>>,
}

fn run_shot(plan: &Plan, setting: usize, shot: u64) -> Result<ShotRecord> {
    let cfg = &plan.config;
    let protocol = cfg.protocol;
    let bases = &plan.settings[setting];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((setting as u64) << 32) | shot);
    let mut record = ShotRecord {
        setting: bases_name(bases),
        shot,
        aborted: false,
        ancilla_bits: vec![],
        readout_bits: vec![],
        surgery: vec![],
        frame: None,
        merge_pass: false,
        ancilla_pass: false,
        detection_pass: false,
        values: vec![],
    };
    let mut machine = Machine::new(protocol.n_data(), cfg.noise, rng)?;
    surgery::prepare(&mut machine, protocol, &cfg.inputs)?;
    let run = match surgery::execute(&mut machine, protocol, &plan.modes, &[]) {
        Ok(run) => run,
        Err(Error::ImpossibleOutcome { .. }) if !cfg.noise.is_zero() => {
            record.aborted = true;
            return Ok(record);
        }
        Err(e) => return Err(e),
    };
    let mut frame = run.frame.clone();
    if let (Some(fix), Some(target)) = (&plan.bell_fix, plan.target_m1) {
        if run.records[0].m1 != target {
            frame.apply(fix)?;
        }
    }

    let roles = protocol.ancilla_bits();
    let (merge_pass, ancilla_pass) = match &cfg.ancilla_policy {
        AncillaPolicy::Postselect(p) => {
            let merge_ok =
                roles
                    .iter()
                    .zip(&p.0)
                    .zip(&run.ancilla_bits)
                    .all(|(((_, role), pin), bit)| {
                        *role != BitRole::Merge || pin.is_none_or(|v| v == *bit)
                    });
            (merge_ok, p.matches(&run.ancilla_bits))
        }
        _ => (true, true),
    };

    let mut readout = Readout::default();
    for (code, &b) in plan.outputs.iter().zip(bases) {
        readout.extend(machine.readout(code, b, None)?);
    }
    readout.apply_frame(frame.pauli());

    let mut detection_pass = true;
    if cfg.detection_policy == DetectionPolicy::BasisStabilizerChecks {
        let mut checks: Vec<(PauliString, &Readout)> = Vec::new();
        for (code, &b) in plan.outputs.iter().zip(bases) {
            checks.extend(
                codes::basis_checks(b, code)
                    .into_iter()
                    .map(|c| (c, &readout)),
            );
        }
        for consumed in &run.consumed {
            checks.extend(
                codes::basis_checks(consumed.basis, &consumed.code)
                    .into_iter()
                    .map(|c| (c, &consumed.readout)),
            );
        }
        detection_pass = checks.iter().all(|(c, r)| r.value_of(c) == Some(1));
    }

    record.values = plan
        .probes
        .iter()
        .map(|p| {
            if p.settings[setting] {
                readout.value_of(&p.physical)
            } else {
                None
            }
        })
        .collect();
    record.ancilla_bits = run.ancilla_bits;
    record.readout_bits = run.readout_bits;
    record.surgery = run.records;
    record.frame = Some(frame);
    record.merge_pass = merge_pass;
    record.ancilla_pass = merge_pass && ancilla_pass;
    record.detection_pass = detection_pass;
    Ok(record)
}

#[derive(Clone, Default)]
struct Tally {
    raw: Vec<(i64, u64)>,
    ps: Vec<(i64, u64)>,
    total: Vec<u64>,
}

fn finish(plan: &Plan, shots: &[Vec<ShotRecord>]) -> ExperimentResult {
    let n_probes = plan.probes.len();
    let mut tally = Tally {
        raw: vec![(0, 0); n_probes],
        ps: vec![(0, 0); n_probes],
        total: vec![0; n_probes],
    };
    let mut settings = Vec::new();
    for (k, records) in shots.iter().enumerate() {
        let mut counts = SettingCounts {
            bases: bases_name(&plan.settings[k]),
            total: records.len() as u64,
            merge_kept: 0,
            ancilla_kept: 0,
            detection_kept: 0,
        };
        for (i, p) in plan.probes.iter().enumerate() {
            if p.settings[k] {
                tally.total[i] += records.len() as u64;
            }
        }
        for r in records {
            counts.merge_kept += r.merge_pass as u64;
            if !r.ancilla_pass {
                continue;
            }
            counts.ancilla_kept += 1;
            counts.detection_kept += r.detection_pass as u64;
            for (i, v) in r.values.iter().enumerate() {
                if let Some(v) = v {
                    tally.raw[i].0 += *v as i64;
                    tally.raw[i].1 += 1;
                    if r.detection_pass {
                        tally.ps[i].0 += *v as i64;
                        tally.ps[i].1 += 1;
                    }
                }
            }
        }
        settings.push(counts);
    }
    let est = |i: usize| {
        (
            Estimate::from_tally(tally.raw[i].0, tally.raw[i].1),
            Estimate::from_tally(tally.ps[i].0, tally.ps[i].1),
        )
    };
    let observable = |i: usize, name: &str| {
        let (raw, postselected) = est(i);
        Observable {
            name: name.to_string(),
            operator: plan.probes[i].physical.to_string(),
            raw,
            postselected,
            total: tally.total[i],
        }
    };
    let n_stab = plan.stabilizer_names.len();
    let stabilizers: Vec<Observable> = plan
        .stabilizer_names
        .iter()
        .enumerate()
        .map(|(i, n)| observable(i, n))
        .collect();
    let logicals: Vec<Observable> = plan
        .logical_names
        .iter()
        .enumerate()
        .map(|(j, n)| observable(n_stab + j, n))
        .collect();
    let target: Vec<TargetElement> = plan
        .target
        .iter()
        .map(|(e, i)| {
            let (raw, postselected) = est(*i);
            TargetElement {
                element: e.to_string(),
                operator: plan.probes[*i].physical.to_string(),
                raw,
                postselected,
            }
        })
        .collect();

    // Linear combination c0 + Σ w_i ⟨o_i⟩ with SE = sqrt(Σ (w_i SE_i)²).
    let combine = |c0: f64, terms: &[(f64, Estimate)]| -> (Option<f64>, Option<f64>) {
        let mut value = c0;
        let mut var = 0.0;
        for (w, e) in terms {
            let (Some(v), Some(se)) = (e.value, e.se) else {
                return (None, None);
            };
            value += w * v;
            var += (w * se).powi(2);
        }
        (Some(value), Some(var.sqrt()))
    };
    let fidelity = |name: &str, c0: f64, raw: Vec<(f64, Estimate)>, ps: Vec<(f64, Estimate)>| {
        let (r, sr) = combine(c0, &raw);
        let (p, sp) = combine(c0, &ps);
        let outside = |v: Option<f64>| v.is_some_and(|v| !(0.0..=1.0).contains(&v));
        Fidelity {
            name: name.to_string(),
            raw: r,
            se_raw: sr,
            postselected: p,
            se_postselected: sp,
            out_of_range: outside(r) || outside(p),
        }
    };

    let scale = 1.0 / (1u64 << plan.outputs.len()) as f64;
    // Target operators carry their sign, so every term has weight +2^-k.
    let target_terms = |ps: bool| -> Vec<(f64, Estimate)> {
        target
            .iter()
            .map(|t| (scale, if ps { t.postselected } else { t.raw }))
            .collect()
    };
    let mut fidelities = vec![fidelity(
        "F_target",
        scale,
        target_terms(false),
        target_terms(true),
    )];
    if plan.config.protocol.is_bell() {
        for bell in BellState::ALL {
            let s = bell.signature();
            let terms = |ps: bool| -> Vec<(f64, Estimate)> {
                logicals
                    .iter()
                    .zip(s)
                    .map(|(o, s)| (0.25 * s, if ps { o.postselected } else { o.raw }))
                    .collect()
            };
            fidelities.push(fidelity(bell.name(), 0.25, terms(false), terms(true)));
        }
    }
    let n = stabilizers.len() as f64;
    let mean_stabilizer = fidelity(
        "mean_stabilizer",
        0.0,
        stabilizers.iter().map(|o| (1.0 / n, o.raw)).collect(),
        stabilizers
            .iter()
            .map(|o| (1.0 / n, o.postselected))
            .collect(),
    );

    let survival: Vec<Survival> = settings.iter().map(Survival::of).collect();
    ExperimentResult {
        protocol: plan.config.protocol,
        inputs: plan.config.inputs.clone(),
        target_m1: plan.target_m1,
        mean_survival: Survival::mean(&survival),
        survival,
        settings,
        stabilizers,
        mean_stabilizer: Fidelity {
            out_of_range: false,
            ..mean_stabilizer
        },
        logicals,
        target,
        fidelities,
    }
}

fn simulate(config: &ExperimentConfig) -> Result<(Plan, Vec<Vec<ShotRecord>>)> {
    let plan = Plan::new(config)?;
    let shots = (0..plan.settings.len())
        .map(|k| {
            (0..config.shots)
                .into_par_iter()
                .map(|s| run_shot(&plan, k, s))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((plan, shots))
}

/// Runs every setting of `config`. Deterministic in `config` (including the seed).
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let (plan, shots) = simulate(config)?;
    Ok(finish(&plan, &shots))
}

/// [`run`] plus the per-shot records, ordered by setting then shot.
pub fn run_with_records(config: &ExperimentConfig) -> Result<(ExperimentResult, Vec<ShotRecord>)> {
    let (plan, shots) = simulate(config)?;
    let result = finish(&plan, &shots);
    Ok((result, shots.into_iter().flatten().collect()))
}

/// The emitted JSON document.
#[derive(Clone, Debug, Serialize)]
pub struct Report<'a> {
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a ExperimentConfig,
    pub result: &'a ExperimentResult,
}

impl<'a> Report<'a> {
    pub fn new(config: &'a ExperimentConfig, result: &'a ExperimentResult) -> Self {
        Self {
            version: crate::VERSION,
            seed: config.seed,
            config,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    /// CSV rows: one per stabilizer, logical observable and fidelity.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
        w.write_record([
            "name", "value", "se", "kept", "total", "value_ps", "se_ps", "kept_ps",
        ])
        .map_err(csv_err)?;
        let num = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
        for o in self.result.stabilizers.iter().chain(&self.result.logicals) {
            w.write_record([
                o.name.clone(),
                num(o.raw.value),
                num(o.raw.se),
                o.raw.kept.to_string(),
                o.total.to_string(),
                num(o.postselected.value),
                num(o.postselected.se),
                o.postselected.kept.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let kept: u64 = self.result.settings.iter().map(|s| s.ancilla_kept).sum();
        let kept_ps: u64 = self.result.settings.iter().map(|s| s.detection_kept).sum();
        let total: u64 = self.result.settings.iter().map(|s| s.total).sum();
        for f in &self.result.fidelities {
            w.write_record([
                f.name.clone(),
                num(f.raw),
                num(f.se_raw),
                kept.to_string(),
                total.to_string(),
                num(f.postselected),
                num(f.se_postselected),
                kept_ps.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes the JSON document and, optionally, the CSV table.
pub fn emit(report: &Report<'_>, json: &Path, csv: Option<&Path>) -> Result<()> {
    write(json, &report.to_json())?;
    if let Some(path) = csv {
        write(path, &report.to_csv()?)?;
    }
    Ok(())
}

/// Writes per-shot records as JSON lines.
pub fn emit_records(records: &[ShotRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("plain data serializes"));
        out.push('\n');
    }
    write(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use LogicalLabel::*;

    #[test]
    fn bell_fidelity_formulas() {
        let ideal = [1.0, 1.0, -1.0];
        assert_eq!(bell_fidelity(ideal, [0.0; 3], BellState::PhiPlus).0, 1.0);
        let phi_minus = [1.0, -1.0, 1.0];
        assert_eq!(
            bell_fidelity(phi_minus, [0.0; 3], BellState::PhiMinus).0,
            1.0
        );
        assert_eq!(
            bell_fidelity(phi_minus, [0.0; 3], BellState::PhiPlus).0,
            0.0
        );
        for b in BellState::ALL {
            assert_eq!(bell_fidelity([0.0; 3], [0.0; 3], b).0, 0.25);
        }
        let (_, se) = bell_fidelity(ideal, [0.04, 0.04, 0.04], BellState::PsiPlus);
        assert!((se - 0.25 * (3.0f64 * 0.0016).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn patterns_and_policies() {
        let p: BitPattern = "0x1".parse().unwrap();
        assert!(p.matches(&[0, 1, 1]));
        assert!(!p.matches(&[1, 1, 1]));
        assert_eq!(p.to_string(), "0x1");
        assert!("012".parse::<BitPattern>().is_err());
        let cfg = ExperimentConfig::from_json(
            r#"{"protocol":"bell_rough","inputs":["0","0"],"ancilla_policy":{"force":"000"}}"#,
        )
        .unwrap();
        assert_eq!(
            cfg.ancilla_policy,
            AncillaPolicy::Force("000".parse().unwrap())
        );
        assert!(ExperimentConfig::from_json(
            r#"{"protocol":"bell_rough","inputs":["0","0"],"ancilla_policy":{"force":"00"}}"#
        )
        .is_err());
        assert!(
            ExperimentConfig::from_json(r#"{"protocol":"bell_rough","inputs":["0"]}"#).is_err()
        );
        assert!(ExperimentConfig::from_json(r#"{"protocol":"nope","inputs":[]}"#).is_err());
    }

    #[test]
    fn expected_states() {
        let t = expected_logical(Protocol::BellSmooth, &[Plus, Plus], 1).unwrap();
        let g = PauliGroup::new(2, t.stabilizers()).unwrap();
        assert!(g.contains(&PauliString::parse("-Z1Z2", 2).unwrap()));
        assert!(g.contains(&PauliString::parse("+X1X2", 2).unwrap()));
        let t = expected_logical(Protocol::BellRough, &[Plus, Plus], 1).unwrap();
        assert_eq!(
            t.expectation(&PauliString::parse("+X1X2", 2).unwrap())
                .unwrap(),
            1
        );
        let t = expected_logical(Protocol::Cnot, &[Plus, Zero], 0).unwrap();
        assert_eq!(
            t.expectation(&PauliString::parse("-Y1Y2", 2).unwrap())
                .unwrap(),
            1
        );
    }

    #[test]
    fn basis_checks_for_code_b() {
        let checks = basis_checks(Basis::X, &codes::code_b());
        assert_eq!(checks.len(), 1);
        assert_eq!(checks[0].to_string(), "+X5X6X7X8");
    }

    #[test]
    fn noiseless_forced_rough_bell() {
        let mut cfg = ExperimentConfig::new(Protocol::BellRough, vec![Zero, Zero]);
        cfg.shots = 50;
        cfg.ancilla_policy = AncillaPolicy::Force("000".parse().unwrap());
        let r = run(&cfg).unwrap();
        let f = r.fidelity("F_phi+").unwrap();
        assert_eq!(f.raw, Some(1.0));
        assert_eq!(f.postselected, Some(1.0));
        assert_eq!(r.fidelity("F_target").unwrap().raw, Some(1.0));
    }
}
