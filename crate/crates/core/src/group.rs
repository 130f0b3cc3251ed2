//! Pauli subgroups by symplectic Gaussian elimination, and a small GF(2) solver.

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// A Pauli group given by generators, kept in reduced row-echelon form over
/// the symplectic vector `(x | z)`. Every stored row is an exact product of
/// the input generators, phase included, so membership queries return signed
/// elements. Intended for abelian generating sets.
#[derive(Clone, Debug)]
pub struct PauliGroup {
    n: usize,
    rows: Vec<(usize, PauliString)>,
}

fn bit_at(p: &PauliString, col: usize) -> bool {
    let n = p.n_qubits();
    if col < n {
        p.x_bit(col)
    } else {
        p.z_bit(col - n)
    }
}

fn first_set(p: &PauliString) -> Option<usize> {
    (0..2 * p.n_qubits()).find(|&c| bit_at(p, c))
}

impl PauliGroup {
    pub fn new(n: usize, generators: &[PauliString]) -> Result<Self> {
        let mut group = Self {
            n,
            rows: Vec::new(),
        };
        for g in generators {
            group.insert(g)?;
        }
        Ok(group)
    }

    /// Adds a generator; returns false when it was already in the span
    /// (up to phase).
    pub fn insert(&mut self, g: &PauliString) -> Result<bool> {
        if g.n_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: g.n_qubits(),
            });
        }
        let mut v = g.clone();
        for (pivot, row) in &self.rows {
            if bit_at(&v, *pivot) {
                v.mul_assign_right(row);
            }
        }
        let Some(pivot) = first_set(&v) else {
            return Ok(false);
        };
        for (p, row) in self.rows.iter_mut() {
            if bit_at(row, pivot) {
                row.mul_assign_right(&v);
            }
            debug_assert!(*p != pivot);
        }
        self.rows.push((pivot, v));
        self.rows.sort_by_key(|(p, _)| *p);
        Ok(true)
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// The group element with the same X/Z masks as `p`, if one exists.
    pub fn decompose(&self, p: &PauliString) -> Option<PauliString> {
        if p.n_qubits() != self.n {
            return None;
        }
        let mut residual = p.unsigned();
        let mut acc = PauliString::identity(self.n);
        for (pivot, row) in &self.rows {
            if bit_at(&residual, *pivot) {
                residual.mul_assign_right(row);
                acc.mul_assign_right(row);
            }
        }
        residual.is_trivial().then_some(acc)
    }

    /// `Some(+1)` if `p` is in the group, `Some(-1)` if `-p` is, `None` otherwise.
    pub fn sign_of(&self, p: &PauliString) -> Option<i8> {
        let elem = self.decompose(p)?;
        match (elem.phase_exp() + 4 - p.phase_exp()) % 4 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// Exact (phase-sensitive) membership.
    pub fn contains(&self, p: &PauliString) -> bool {
        self.sign_of(p) == Some(1)
    }

    /// Membership ignoring the phase.
    pub fn contains_up_to_phase(&self, p: &PauliString) -> bool {
        self.decompose(p).is_some()
    }

    /// Reduced generators; equal groups yield equal canonical forms.
    pub fn canonical_generators(&self) -> Vec<PauliString> {
        self.rows.iter().map(|(_, r)| r.clone()).collect()
    }
}

/// Solves `A x = b` over GF(2). `a` holds one row per equation.
pub fn solve_gf2(a: &[Vec<bool>], b: &[bool]) -> Option<Vec<bool>> {
    let n_vars = a.first().map_or(0, |r| r.len());
    let mut rows: Vec<(Vec<bool>, bool)> = a.iter().cloned().zip(b.iter().copied()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n_vars {
        let Some(found) = (r..rows.len()).find(|&i| rows[i].0[col]) else {
            continue;
        };
        rows.swap(r, found);
        let (pivot_row, pivot_rhs) = rows[r].clone();
        for (i, (row, rhs)) in rows.iter_mut().enumerate() {
            if i != r && row[col] {
                row.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a ^= *b);
                *rhs ^= pivot_rhs;
            }
        }
        pivots.push(col);
        r += 1;
    }
    if rows[r..].iter().any(|(_, rhs)| *rhs) {
        return None;
    }
    let mut x = vec![false; n_vars];
    for (i, &col) in pivots.iter().enumerate() {
        x[col] = rows[i].1;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> PauliString {
        PauliString::parse(text, 4).unwrap()
    }

    #[test]
    fn repetition_group_has_four_elements() {
        let n = 3;
        let gens = [
            PauliString::parse("+Z1Z2", n).unwrap(),
            PauliString::parse("+Z2Z3", n).unwrap(),
        ];
        let g = PauliGroup::new(n, &gens).unwrap();
        assert_eq!(g.rank(), 2);
        for text in ["+I", "+Z1Z2", "+Z2Z3", "+Z1Z3"] {
            assert!(g.contains(&PauliString::parse(text, n).unwrap()), "{text}");
        }
        assert!(!g.contains_up_to_phase(&PauliString::parse("+Z1", n).unwrap()));
    }

    #[test]
    fn signs_follow_generators() {
        let g = PauliGroup::new(4, &[p("-Z1Z2"), p("-Z3Z4"), p("+X1X2X3X4")]).unwrap();
        assert_eq!(g.sign_of(&p("+Z1Z2Z3Z4")), Some(1));
        assert_eq!(g.sign_of(&p("+Z1Z2")), Some(-1));
        assert_eq!(g.sign_of(&p("+Y1Y2X3X4")), Some(1));
        assert_eq!(g.sign_of(&p("+Z1Z3")), None);
    }

    #[test]
    fn dependent_generators_do_not_raise_rank() {
        let mut g = PauliGroup::new(4, &[p("+Z1Z2"), p("+Z2Z3")]).unwrap();
        assert!(!g.insert(&p("-Z1Z3")).unwrap());
        assert_eq!(g.rank(), 2);
    }

    #[test]
    fn gf2_solver() {
        let a = vec![vec![true, true, false], vec![false, true, true]];
        let x = solve_gf2(&a, &[true, false]).unwrap();
        assert!(x[0] ^ x[1]);
        assert!(!(x[1] ^ x[2]));
        let inconsistent = vec![vec![true, false], vec![true, false]];
        assert!(solve_gf2(&inconsistent, &[true, false]).is_none());
    }
}
