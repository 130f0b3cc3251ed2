use latsurg::reference::DenseState;
use latsurg::{PauliKind, PauliString};
use num_complex::Complex64;
use proptest::prelude::*;

const KINDS: [PauliKind; 4] = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];

fn build(n: usize, letters: &[usize], phase: u8) -> PauliString {
    let mut p = PauliString::identity(n);
    for (q, &k) in letters.iter().enumerate().take(n) {
        p.set(q, KINDS[k]);
    }
    p.with_phase(phase)
}

fn pauli_strategy(n: usize) -> impl Strategy<Value = PauliString> {
    (prop::collection::vec(0..4usize, n), 0..4u8).prop_map(move |(l, ph)| build(n, &l, ph))
}

fn triple() -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
    (1..=8usize).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n), pauli_strategy(n)))
}

proptest! {
    #[test]
    fn commutation_is_symmetric((p, q, _) in triple()) {
        prop_assert_eq!(p.commutes(&q).unwrap(), q.commutes(&p).unwrap());
    }

    #[test]
    fn multiplication_is_associative((p, q, r) in triple()) {
        let left = p.multiply(&q).unwrap().multiply(&r).unwrap();
        let right = p.multiply(&q.multiply(&r).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn squares_are_scalar((p, _, _) in triple()) {
        let sq = p.multiply(&p).unwrap();
        prop_assert!(sq.is_trivial());
        prop_assert!(sq.phase_exp() == 0 || sq.phase_exp() == 2);
        if p.is_hermitian() {
            prop_assert_eq!(sq.phase_exp(), 0);
        }
    }

    #[test]
    fn commuting_products_agree((p, q, _) in triple()) {
        let pq = p.multiply(&q).unwrap();
        let qp = q.multiply(&p).unwrap();
        if p.commutes(&q).unwrap() {
            prop_assert_eq!(pq, qp);
        } else {
            prop_assert_eq!(pq, qp.negated());
        }
    }

    #[test]
    fn text_round_trip((p, _, _) in triple()) {
        let text = p.to_string();
        prop_assert_eq!(PauliString::parse(&text, p.n_qubits()).unwrap(), p);
    }
}

/// Dense matrix, column `j` is `P|j⟩`.
fn matrix(p: &PauliString) -> Vec<Vec<Complex64>> {
    let n = p.n_qubits();
    (0..1usize << n)
        .map(|j| {
            let mut s = DenseState::basis(n, j).unwrap();
            s.apply_pauli(p).unwrap();
            s.amplitudes().to_vec()
        })
        .collect()
}

fn matmul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    // Column-major: (AB)[:, j] = A · B[:, j].
    let d = a.len();
    (0..d)
        .map(|j| {
            (0..d)
                .map(|i| (0..d).map(|k| a[k][i] * b[j][k]).sum())
                .collect()
        })
        .collect()
}

fn close(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> bool {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .all(|(x, y)| (x - y).norm() < 1e-12)
}

fn all_strings(n: usize, phases: &[u8]) -> Vec<PauliString> {
    let mut out = Vec::new();
    for code in 0..1usize << (2 * n) {
        let letters: Vec<usize> = (0..n).map(|q| code >> (2 * q) & 3).collect();
        for &ph in phases {
            out.push(build(n, &letters, ph));
        }
    }
    out
}

#[test]
fn products_and_commutation_match_dense_matrices() {
    for (n, phases) in [
        (1, vec![0, 1, 2, 3]),
        (2, vec![0, 1, 2, 3]),
        (3, vec![0, 1]),
    ] {
        let ops = all_strings(n, &phases);
        let mats: Vec<_> = ops.iter().map(matrix).collect();
        for (p, mp) in ops.iter().zip(&mats) {
            for (q, mq) in ops.iter().zip(&mats) {
                let prod = p.multiply(q).unwrap();
                let mpq = matmul(mp, mq);
                assert!(close(&matrix(&prod), &mpq), "{p} * {q} = {prod}");
                let mqp = matmul(mq, mp);
                assert_eq!(p.commutes(q).unwrap(), close(&mpq, &mqp), "{p}, {q}");
            }
        }
    }
}

#[test]
fn frozen_products() {
    let p = |s: &str, n| PauliString::parse(s, n).unwrap();
    // X·Z = -iY
    assert_eq!(
        p("+X1", 1).multiply(&p("+Z1", 1)).unwrap(),
        p("+Y1", 1).times_i(3)
    );
    // i·X_L·Z_L of the 4-qubit code
    let y = p("+X1X2", 4).multiply(&p("+Z1Z3", 4)).unwrap().times_i(1);
    assert_eq!(y.to_string(), "+Y1X2Z3");
    assert_eq!(
        p("-Z1Z2", 4).multiply(&p("-Z1Z2", 4)).unwrap(),
        PauliString::identity(4)
    );
    assert!(p("+X1X2X3X4", 4).commutes(&p("-Z1Z2", 4)).unwrap());
    assert!(!p("+X1X2", 4).commutes(&p("+Z1Z3", 4)).unwrap());
}
