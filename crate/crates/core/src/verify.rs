//! Self-checks: the tableau against the dense simulator on random circuits,
//! and every protocol branch against a dense replay.

use std::collections::BTreeMap;
use std::fmt;

use rand::rngs::mock::StepRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codes::{self, LogicalLabel, StabilizerCode};
use crate::error::{Error, Result};
use crate::experiment::{self, BellState};
use crate::gate::Gate;
use crate::noise::{Machine, NoiseModel};
use crate::pauli::{PauliKind, PauliString};
use crate::reference::DenseState;
use crate::surgery::{self, LogicalCorrection, PauliFrame, Protocol, ProtocolRun};
use crate::tableau::{MeasureMode, StabilizerTableau};

const TOL: f64 = 1e-9;

/// Outcome of one suite.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub name: String,
    pub checks: u64,
    /// Branches whose forced outcomes were impossible.
    pub skipped: u64,
    pub failures: Vec<String>,
}

impl Report {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "ok" } else { "FAILED" };
        write!(
            f,
            "{}: {status} ({} checks, {} skipped)",
            self.name, self.checks, self.skipped
        )?;
        for msg in &self.failures {
            write!(f, "\n  {msg}")?;
        }
        Ok(())
    }
}

/// All `4^n` Paulis on `n` qubits, identity included.
pub fn all_paulis(n: usize) -> impl Iterator<Item = PauliString> {
    const KINDS: [PauliKind; 4] = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];
    (0..1usize << (2 * n)).map(move |code| {
        let mut p = PauliString::identity(n);
        for q in 0..n {
            p.set(q, KINDS[code >> (2 * q) & 3]);
        }
        p
    })
}

fn random_pauli<R: Rng>(n: usize, rng: &mut R) -> PauliString {
    loop {
        let mut p = PauliString::identity(n);
        for q in 0..n {
            p.set(
                q,
                [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z][rng.gen_range(0..4)],
            );
        }
        if !p.is_trivial() {
            return if rng.gen() { p.negated() } else { p };
        }
    }
}

fn random_gate<R: Rng>(n: usize, rng: &mut R) -> Gate {
    let q = rng.gen_range(0..n);
    let kind = rng.gen_range(0..if n > 1 { 8 } else { 6 });
    let other = if n > 1 {
        (q + rng.gen_range(1..n)) % n
    } else {
        q
    };
    match kind {
        0 => Gate::H(q),
        1 => Gate::S(q),
        2 => Gate::Sdg(q),
        3 => Gate::X(q),
        4 => Gate::Y(q),
        5 => Gate::Z(q),
        6 => Gate::Cnot(q, other),
        _ => Gate::Cz(q, other),
    }
}

/// Compares the tableau to the dense state on every Pauli.
fn compare_states(t: &StabilizerTableau, d: &DenseState) -> Option<String> {
    for p in all_paulis(t.n_qubits()) {
        let et = t.expectation(&p).expect("same width") as f64;
        let ed = d.expectation(&p).expect("same width");
        if (et - ed).abs() > TOL {
            return Some(format!("{p}: tableau {et}, dense {ed:.6}"));
        }
    }
    None
}

/// Random Clifford circuits with interleaved forced measurements, compared
/// against the dense simulator on all `4^n` Paulis after each circuit.
pub fn oracle_suite(circuits: usize, max_qubits: usize, seed: u64) -> Report {
    let mut report = Report::new("oracle");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut no_rng = StepRng::new(0, 0);
    for c in 0..circuits {
        let n = rng.gen_range(1..=max_qubits);
        let depth = rng.gen_range(1..=40);
        let mut t = StabilizerTableau::init_zero(n).expect("n >= 1");
        let mut d = DenseState::zero(n).expect("n within cap");
        let mut log = Vec::new();
        for _ in 0..depth {
            if rng.gen_bool(0.15) {
                let p = random_pauli(n, &mut rng);
                let want: u8 = rng.gen_range(0..2);
                let bit = match t.measure(&p, MeasureMode::Forced(want), &mut no_rng) {
                    Ok(o) => o.bit,
                    Err(Error::ImpossibleOutcome { actual, .. }) => {
                        if d.probability(&p, want).unwrap() > TOL {
                            report.fail(format!("circuit {c}: {p}={want} possible in dense only"));
                        }
                        t.measure(&p, MeasureMode::Forced(actual), &mut no_rng)
                            .unwrap();
                        actual
                    }
                    Err(e) => panic!("unexpected measurement error: {e}"),
                };
                if let Err(e) = d.measure_pauli(&p, MeasureMode::Forced(bit), &mut no_rng) {
                    report.fail(format!("circuit {c}: dense rejected {p}={bit}: {e}"));
                    break;
                }
                log.push(format!("M{p}={bit}"));
            } else {
                let g = random_gate(n, &mut rng);
                t.apply_gate(&g).unwrap();
                d.apply_gate(&g).unwrap();
                log.push(format!("{g:?}"));
            }
        }
        report.checks += 1;
        if let Some(msg) = compare_states(&t, &d) {
            report.fail(format!("circuit {c} (n={n}, {}): {msg}", log.join(" ")));
        }
    }
    report
}

/// Every product of cardinal labels for `k` logical qubits.
pub fn cardinal_inputs(k: usize) -> Vec<Vec<LogicalLabel>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| {
                LogicalLabel::CARDINAL.iter().map(move |&l| {
                    let mut w = v.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
    }
    out
}

/// Number of branch bits: ancilla outcomes then consumed readouts.
pub fn branch_width(protocol: Protocol) -> usize {
    protocol.ancilla_bits().len() + protocol.consumed_codes().len()
}

/// A noiseless run with every outcome forced, or `None` if the branch is impossible.
pub fn run_branch(
    protocol: Protocol,
    inputs: &[LogicalLabel],
    bits: &[u8],
) -> Result<Option<(Machine<StepRng>, ProtocolRun)>> {
    let n_anc = protocol.ancilla_bits().len();
    let ancilla: Vec<_> = bits[..n_anc]
        .iter()
        .map(|&b| MeasureMode::Forced(b))
        .collect();
    let readout: Vec<_> = bits[n_anc..]
        .iter()
        .map(|&b| Some(MeasureMode::Forced(b)))
        .collect();
    let mut m = Machine::new(protocol.n_data(), NoiseModel::default(), StepRng::new(0, 0))?;
    surgery::prepare(&mut m, protocol, inputs)?;
    match surgery::execute(&mut m, protocol, &ancilla, &readout) {
        Ok(run) => Ok(Some((m, run))),
        Err(Error::ImpossibleOutcome { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Physical operators that stabilize the ideal output: the output codes'
/// generators and the expected logical stabilizers.
fn target_operators(
    protocol: Protocol,
    inputs: &[LogicalLabel],
    m1: u8,
) -> Result<Vec<PauliString>> {
    let outputs = protocol.output_codes();
    let expected = experiment::expected_logical(protocol, inputs, m1)?;
    let mut ops: Vec<PauliString> = outputs
        .iter()
        .flat_map(|c| c.generators().to_vec())
        .collect();
    for g in expected.stabilizers() {
        ops.push(codes::logical_to_physical(g, &outputs)?);
    }
    Ok(ops)
}

fn corrected_tableau_value(m: &Machine<StepRng>, frame: &PauliFrame, op: &PauliString) -> i8 {
    let v = m.expectation(op).expect("same width");
    if frame.flips(op) {
        -v
    } else {
        v
    }
}

/// Replays a branch on the dense simulator: the same initial code states,
/// the same signed measurements with the recorded outcomes, then the frame.
fn dense_replay(
    protocol: Protocol,
    inputs: &[LogicalLabel],
    run: &ProtocolRun,
) -> Result<DenseState> {
    let n = protocol.n_data();
    let mut gens = Vec::new();
    let preps = protocol
        .input_codes()
        .into_iter()
        .zip(inputs.iter().copied())
        .chain(protocol.fixed_preparations());
    for (code, label) in preps {
        gens.extend(code.generators().iter().cloned());
        gens.push(label.stabilizer(&code));
    }
    let mut d = DenseState::from_stabilizers(n, &gens)?;
    let mut no_rng = StepRng::new(0, 0);
    for (jm, rec) in protocol.surgeries().iter().zip(&run.records) {
        for (g, &b) in jm.merging_generators().iter().zip(&rec.merge_bits) {
            d.measure_pauli(g, MeasureMode::Forced(b), &mut no_rng)?;
        }
        for (s, &b) in jm.split_operators().iter().zip(&rec.split_bits) {
            d.measure_pauli(s, MeasureMode::Forced(b), &mut no_rng)?;
        }
    }
    for ((code, basis), &bit) in protocol.consumed_codes().iter().zip(&run.readout_bits) {
        let logical = code.logical(*basis);
        let physical = bit ^ run.frame.flips(&logical) as u8;
        d.measure_pauli(&logical, MeasureMode::Forced(physical), &mut no_rng)?;
    }
    d.apply_pauli(run.frame.pauli())?;
    Ok(d)
}

fn bits_of(index: usize, width: usize) -> Vec<u8> {
    (0..width)
        .map(|i| (index >> (width - 1 - i) & 1) as u8)
        .collect()
}

fn bits_name(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

/// Target `m1` of a branch: Bell protocols project onto their own outcome.
fn branch_m1(protocol: Protocol, run: &ProtocolRun) -> u8 {
    if protocol.is_bell() {
        run.records[0].m1
    } else {
        0
    }
}

/// Runs every input and forced branch of `protocol` and checks, on both the
/// tableau and the dense replay, that the corrected output is the ideal one.
pub fn branch_suite(protocol: Protocol) -> Result<Report> {
    let mut report = Report::new(&format!("branches/{protocol}"));
    let width = branch_width(protocol);
    let k = protocol.input_codes().len();
    for inputs in cardinal_inputs(k) {
        for index in 0..1usize << width {
            let bits = bits_of(index, width);
            let Some((m, run)) = run_branch(protocol, &inputs, &bits)? else {
                report.skipped += 1;
                continue;
            };
            report.checks += 1;
            let ops = target_operators(protocol, &inputs, branch_m1(protocol, &run))?;
            let dense = dense_replay(protocol, &inputs, &run)?;
            let labels: String = inputs
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(",");
            for op in &ops {
                let t = corrected_tableau_value(&m, &run.frame, op);
                let e = dense.expectation(op)?;
                if t != 1 || (e - 1.0).abs() > TOL {
                    report.fail(format!(
                        "inputs {labels} branch {}: {op} tableau {t}, dense {e:.6}",
                        bits_name(&bits)
                    ));
                    break;
                }
            }
        }
    }
    Ok(report)
}

/// One row of the Bell branch table.
#[derive(Clone, Debug, Serialize)]
pub struct BellBranch {
    pub ancilla_bits: Vec<u8>,
    pub m1: u8,
    /// Bell state identified from the tableau's corrected logical expectations.
    pub state: Option<&'static str>,
    /// Fidelity of the dense replay with that state.
    pub dense_fidelity: f64,
}

fn logical_ops(protocol: Protocol) -> Result<[PauliString; 3]> {
    let outputs = protocol.output_codes();
    let op = |kind| {
        let logical = PauliString::uniform(2, kind, &[0, 1])?;
        codes::logical_to_physical(&logical, &outputs)
    };
    Ok([op(PauliKind::Z)?, op(PauliKind::X)?, op(PauliKind::Y)?])
}

/// All forced branches of a Bell protocol on the given inputs.
pub fn bell_branch_table(protocol: Protocol, inputs: &[LogicalLabel]) -> Result<Vec<BellBranch>> {
    let ops = logical_ops(protocol)?;
    let width = branch_width(protocol);
    let mut rows = Vec::new();
    for index in 0..1usize << width {
        let bits = bits_of(index, width);
        let Some((m, run)) = run_branch(protocol, inputs, &bits)? else {
            continue;
        };
        let t: Vec<f64> = ops
            .iter()
            .map(|op| corrected_tableau_value(&m, &run.frame, op) as f64)
            .collect();
        let state = BellState::ALL
            .into_iter()
            .find(|b| experiment::bell_fidelity([t[0], t[1], t[2]], [0.0; 3], *b).0 == 1.0);
        let dense = dense_replay(protocol, inputs, &run)?;
        let e: Vec<f64> = ops
            .iter()
            .map(|op| dense.expectation(op))
            .collect::<Result<_>>()?;
        let dense_fidelity = state.map_or(0.0, |b| {
            experiment::bell_fidelity([e[0], e[1], e[2]], [0.0; 3], b).0
        });
        rows.push(BellBranch {
            ancilla_bits: bits,
            m1: run.records[0].m1,
            state: state.map(BellState::name),
            dense_fidelity,
        });
    }
    Ok(rows)
}

/// Correction applied by the protocol's table for a branch key.
fn table_correction(protocol: Protocol, key: &[u8]) -> Vec<LogicalCorrection> {
    match protocol {
        Protocol::Hadamard => vec![surgery::HADAMARD_CORRECTIONS[key[0] as usize][key[1] as usize]],
        Protocol::Cnot => {
            surgery::CNOT_CORRECTIONS[key[0] as usize][key[1] as usize][key[2] as usize].to_vec()
        }
        _ => vec![],
    }
}

fn correction_pauli(codes: &[StabilizerCode], fixes: &[LogicalCorrection]) -> PauliString {
    let n = codes[0].n_qubits();
    let mut out = PauliString::identity(n);
    for (code, c) in codes.iter().zip(fixes) {
        if c.x == 1 {
            out = out.multiply(code.logical_x()).expect("same register");
        }
        if c.z == 1 {
            out = out.multiply(code.logical_z()).expect("same register");
        }
    }
    out.with_phase(0)
}

/// Finds, per branch key (joint-measurement bits then readout bits), the
/// logical corrections that make every cardinal input come out ideal.
/// `None` marks keys with no consistent correction.
fn derive_corrections(
    protocol: Protocol,
) -> Result<BTreeMap<Vec<u8>, Option<Vec<LogicalCorrection>>>> {
    let outputs = protocol.output_codes();
    let k = outputs.len();
    let candidates: Vec<Vec<LogicalCorrection>> = (0..1usize << (2 * k))
        .map(|code| {
            (0..k)
                .map(|i| LogicalCorrection {
                    x: (code >> (2 * i) & 1) as u8,
                    z: (code >> (2 * i + 1) & 1) as u8,
                })
                .collect()
        })
        .collect();
    let mut alive: BTreeMap<Vec<u8>, Vec<bool>> = BTreeMap::new();
    let width = branch_width(protocol);
    for inputs in cardinal_inputs(k) {
        for index in 0..1usize << width {
            let bits = bits_of(index, width);
            let Some((m, run)) = run_branch(protocol, &inputs, &bits)? else {
                continue;
            };
            let mut key: Vec<u8> = run.records.iter().map(|r| r.m1).collect();
            key.extend(&run.readout_bits);
            let mut base = run.frame.clone();
            base.apply(&correction_pauli(
                &outputs,
                &table_correction(protocol, &key),
            ))?;
            let ops = target_operators(protocol, &inputs, 0)?;
            let entry = alive
                .entry(key)
                .or_insert_with(|| vec![true; candidates.len()]);
            for (ok, cand) in entry.iter_mut().zip(&candidates) {
                if !*ok {
                    continue;
                }
                let mut frame = base.clone();
                frame.apply(&correction_pauli(&outputs, cand))?;
                *ok = ops
                    .iter()
                    .all(|op| corrected_tableau_value(&m, &frame, op) == 1);
            }
        }
    }
    Ok(alive
        .into_iter()
        .map(|(key, ok)| {
            let found = ok.iter().position(|&b| b).map(|i| candidates[i].clone());
            (key, found)
        })
        .collect())
}

/// Regenerates the Hadamard correction table, indexed `[m1][m2]`.
pub fn derive_hadamard_corrections() -> Result<[[Option<LogicalCorrection>; 2]; 2]> {
    let mut table = [[None; 2]; 2];
    for (key, fix) in derive_corrections(Protocol::Hadamard)? {
        table[key[0] as usize][key[1] as usize] = fix.map(|f| f[0]);
    }
    Ok(table)
}

/// CNOT corrections indexed `[a][b][c]`, each entry `[control, target]`.
pub type CnotTable = [[[Option<[LogicalCorrection; 2]>; 2]; 2]; 2];

/// Regenerates the CNOT correction table.
pub fn derive_cnot_corrections() -> Result<CnotTable> {
    let mut table = [[[None; 2]; 2]; 2];
    for (key, fix) in derive_corrections(Protocol::Cnot)? {
        table[key[0] as usize][key[1] as usize][key[2] as usize] = fix.map(|f| [f[0], f[1]]);
    }
    Ok(table)
}

/// Oracle and branch suites together, as run by the command-line tool.
pub fn run_all(circuits: usize, seed: u64) -> Result<Vec<Report>> {
    let mut reports = vec![oracle_suite(circuits, 6, seed)];
    for p in Protocol::ALL {
        reports.push(branch_suite(p)?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_enumeration() {
        assert_eq!(all_paulis(2).count(), 16);
        assert!(all_paulis(1).next().unwrap().is_trivial());
    }

    #[test]
    fn small_oracle_run() {
        let r = oracle_suite(30, 3, 1);
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks, 30);
    }

    #[test]
    fn teleport_branches() {
        let r = branch_suite(Protocol::Teleport).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.checks > 0);
    }

    #[test]
    fn all_branch_suites() {
        for p in Protocol::ALL {
            let r = branch_suite(p).unwrap();
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn cnot_table_matches() {
        let derived = derive_cnot_corrections().unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    assert_eq!(derived[a][b][c], Some(surgery::CNOT_CORRECTIONS[a][b][c]));
                }
            }
        }
    }

    #[test]
    fn hadamard_table_matches() {
        let derived = derive_hadamard_corrections().unwrap();
        for m1 in 0..2 {
            for m2 in 0..2 {
                assert_eq!(derived[m1][m2], Some(surgery::HADAMARD_CORRECTIONS[m1][m2]));
            }
        }
    }
}
