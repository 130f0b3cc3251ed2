use latsurg::reference::{basis_index, DenseState};
use latsurg::verify::{all_paulis, oracle_suite};
use latsurg::{Error, Gate, MeasureMode, PauliKind, PauliString, StabilizerTableau};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::mock::StepRng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
enum Op {
    Gate(Gate),
    Measure(PauliString, u8),
}

fn op_strategy(n: usize) -> impl Strategy<Value = Op> {
    let gate = (0..n, 0..n, 0..8usize).prop_map(move |(a, b, k)| {
        let b = if a == b { (a + 1) % n } else { b };
        Op::Gate(match (k, n) {
            (0, _) => Gate::H(a),
            (1, _) => Gate::S(a),
            (2, _) => Gate::Sdg(a),
            (3, _) => Gate::X(a),
            (4, _) => Gate::Y(a),
            (5, _) | (_, 1) => Gate::Z(a),
            (6, _) => Gate::Cnot(a, b),
            _ => Gate::Cz(a, b),
        })
    });
    let measure = (prop::collection::vec(0..4usize, n), any::<bool>(), 0..2u8).prop_filter_map(
        "non-identity",
        move |(letters, neg, bit)| {
            let mut p = PauliString::identity(n);
            for (q, &k) in letters.iter().enumerate() {
                p.set(
                    q,
                    [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z][k],
                );
            }
            (!p.is_trivial()).then(|| Op::Measure(if neg { p.negated() } else { p }, bit))
        },
    );
    prop_oneof![4 => gate, 1 => measure]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Op>)> {
    (1..=6usize).prop_flat_map(|n| (Just(n), prop::collection::vec(op_strategy(n), 0..40)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tableau_matches_dense_on_all_paulis((n, ops) in circuit()) {
        let mut t = StabilizerTableau::init_zero(n).unwrap();
        let mut d = DenseState::zero(n).unwrap();
        let mut rng = StepRng::new(0, 0);
        for op in &ops {
            match op {
                Op::Gate(g) => {
                    t.apply_gate(g).unwrap();
                    d.apply_gate(g).unwrap();
                }
                Op::Measure(p, want) => {
                    let bit = match t.measure(p, MeasureMode::Forced(*want), &mut rng) {
                        Ok(o) => o.bit,
                        Err(Error::ImpossibleOutcome { actual, .. }) => {
                            prop_assert!(d.probability(p, *want).unwrap() < 1e-9);
                            t.measure(p, MeasureMode::Forced(actual), &mut rng).unwrap();
                            actual
                        }
                        Err(e) => return Err(TestCaseError::fail(e.to_string())),
                    };
                    d.measure_pauli(p, MeasureMode::Forced(bit), &mut rng).unwrap();
                }
            }
            prop_assert!(t.validate().is_ok(), "{:?}", t.validate());
        }
        for p in all_paulis(n) {
            let et = t.expectation(&p).unwrap() as f64;
            let ed = d.expectation(&p).unwrap();
            prop_assert!((et - ed).abs() < 1e-9, "{}: {} vs {}", p, et, ed);
        }
    }

    #[test]
    fn repeated_measurement_is_deterministic((n, ops) in circuit(), seed in any::<u64>()) {
        let mut t = StabilizerTableau::init_zero(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for op in &ops {
            match op {
                Op::Gate(g) => t.apply_gate(g).unwrap(),
                Op::Measure(p, _) => {
                    let first = t.measure(p, MeasureMode::Random, &mut rng).unwrap();
                    let second = t.measure(p, MeasureMode::Random, &mut rng).unwrap();
                    prop_assert_eq!(first.bit, second.bit);
                    prop_assert!(second.deterministic);
                }
            }
        }
    }

    #[test]
    fn forced_outcome_sets_expectation((n, ops) in circuit()) {
        let mut t = StabilizerTableau::init_zero(n).unwrap();
        let mut rng = StepRng::new(0, 0);
        for op in &ops {
            match op {
                Op::Gate(g) => t.apply_gate(g).unwrap(),
                Op::Measure(p, want) => {
                    let random = t.expectation(p).unwrap() == 0;
                    if let Ok(o) = t.measure(p, MeasureMode::Forced(*want), &mut rng) {
                        prop_assert_eq!(o.deterministic, !random);
                        let expected = if *want == 0 { 1 } else { -1 };
                        prop_assert_eq!(t.expectation(p).unwrap(), expected);
                    } else {
                        prop_assert!(!random);
                    }
                }
            }
        }
    }
}

#[test]
fn thousand_random_circuits_agree() {
    let r = oracle_suite(1000, 6, 2024);
    assert!(r.passed(), "{r}");
    assert_eq!(r.checks, 1000);
}

/// `|0_L⟩` of the code `⟨-Z1Z2, -Z3Z4, +X1X2X3X4⟩` with `Z_L = Z1Z3`, worked
/// out by hand: `(|0101⟩ + |1010⟩)/√2`.
fn hand_zero_l() -> DenseState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Complex64::new(0.0, 0.0); 16];
    amps[basis_index("0101")] = h.into();
    amps[basis_index("1010")] = h.into();
    DenseState::from_amplitudes(4, amps).unwrap()
}

#[test]
fn encoded_zero_matches_hand_state() {
    let p = |s: &str| PauliString::parse(s, 4).unwrap();
    let gens = [p("-Z1Z2"), p("-Z3Z4"), p("+X1X2X3X4"), p("+Z1Z3")];
    let d = DenseState::from_stabilizers(4, &gens).unwrap();
    assert!((d.fidelity(&hand_zero_l()) - 1.0).abs() < 1e-12);

    let mut t = StabilizerTableau::init_zero(4).unwrap();
    latsurg::codes::encode(
        &mut t,
        &latsurg::codes::four_qubit_code("A", 4, 0).unwrap(),
        latsurg::codes::LogicalLabel::Zero,
    )
    .unwrap();
    let hand = hand_zero_l();
    for q in all_paulis(4) {
        let et = t.expectation(&q).unwrap() as f64;
        assert!((et - hand.expectation(&q).unwrap()).abs() < 1e-12, "{q}");
    }
}

#[test]
fn frozen_small_state_values() {
    // GHZ on three qubits.
    let mut t = StabilizerTableau::init_zero(3).unwrap();
    t.apply_gates(&[Gate::H(0), Gate::Cnot(0, 1), Gate::Cnot(1, 2)])
        .unwrap();
    let e = |s: &str| t.expectation(&PauliString::parse(s, 3).unwrap()).unwrap();
    assert_eq!(e("+X1X2X3"), 1);
    assert_eq!(e("+Z1Z3"), 1);
    assert_eq!(e("-Y1Y2X3"), 1);
    assert_eq!(e("+Z1"), 0);
    // |+i⟩ = S H |0⟩
    let mut t = StabilizerTableau::init_zero(1).unwrap();
    t.apply_gates(&[Gate::H(0), Gate::S(0)]).unwrap();
    assert_eq!(
        t.expectation(&PauliString::parse("+Y1", 1).unwrap())
            .unwrap(),
        1
    );
}
