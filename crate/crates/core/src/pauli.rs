//! Signed multi-qubit Pauli operators.
//!
//! A [`PauliString`] stores one X bit and one Z bit per qubit in 64-bit
//! blocks, plus a phase exponent `k` so the operator is `i^k` times the
//! tensor product of single-qubit Paulis. A qubit with both bits set carries
//! the Hermitian `Y`, not `XZ`, so every Hermitian string has `k` in `{0, 2}`.
//!
//! Text literals use 1-based qubit labels with an explicit sign, e.g.
//! `-Z1Z2`, `+X3X5`, `-iY1`, `+I`.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliKind {
    I,
    X,
    Y,
    Z,
}

impl PauliKind {
    pub fn bits(self) -> (bool, bool) {
        match self {
            PauliKind::I => (false, false),
            PauliKind::X => (true, false),
            PauliKind::Y => (true, true),
            PauliKind::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliKind::I,
            (true, false) => PauliKind::X,
            (true, true) => PauliKind::Y,
            (false, true) => PauliKind::Z,
        }
    }

    pub fn letter(self) -> char {
        match self {
            PauliKind::I => 'I',
            PauliKind::X => 'X',
            PauliKind::Y => 'Y',
            PauliKind::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliKind::I),
            'X' => Some(PauliKind::X),
            'Y' => Some(PauliKind::Y),
            'Z' => Some(PauliKind::Z),
            _ => None,
        }
    }
}

/// `i^phase * P_0 ⊗ P_1 ⊗ ... ⊗ P_{n-1}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

#[inline]
fn blocks(n: usize) -> usize {
    n.div_ceil(WORD)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: vec![0; blocks(n)],
            z: vec![0; blocks(n)],
            phase: 0,
        }
    }

    /// A single-qubit Pauli on 0-based qubit `q`.
    pub fn single(n: usize, q: usize, kind: PauliKind) -> Result<Self> {
        Self::from_sparse(n, &[(q, kind)])
    }

    /// Builds a +1-phase string from 0-based `(qubit, letter)` pairs.
    pub fn from_sparse(n: usize, terms: &[(usize, PauliKind)]) -> Result<Self> {
        let mut p = Self::identity(n);
        for &(q, kind) in terms {
            if q >= n {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: n,
                });
            }
            if p.kind(q) != PauliKind::I {
                return Err(Error::DuplicateQubit(q + 1));
            }
            p.set(q, kind);
        }
        Ok(p)
    }

    /// Builds an X-type or Z-type string (phase +1) on the given 0-based qubits.
    pub fn uniform(n: usize, kind: PauliKind, qubits: &[usize]) -> Result<Self> {
        let terms: Vec<_> = qubits.iter().map(|&q| (q, kind)).collect();
        Self::from_sparse(n, &terms)
    }

    /// Parses a signed literal such as `-Z1Z2` on an `n`-qubit register.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let err = |reason: &str| Error::ParsePauli {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let mut phase = 0u8;
        match chars.first() {
            Some('+') => pos += 1,
            Some('-') => {
                phase = 2;
                pos += 1;
            }
            _ => {}
        }
        if chars.get(pos) == Some(&'i') {
            phase = (phase + 1) % 4;
            pos += 1;
        }
        if pos >= chars.len() {
            return Err(err("missing operator body"));
        }
        let mut p = Self::identity(n);
        if chars[pos..] == ['I'] {
            p.phase = phase;
            return Ok(p);
        }
        while pos < chars.len() {
            let kind = PauliKind::from_letter(chars[pos])
                .filter(|k| *k != PauliKind::I)
                .ok_or_else(|| err(&format!("expected X, Y or Z at offset {pos}")))?;
            pos += 1;
            let start = pos;
            while pos < chars.len() && chars[pos].is_ascii_digit() {
                pos += 1;
            }
            if start == pos {
                return Err(err("missing qubit index"));
            }
            let label: usize = chars[start..pos]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| err("qubit index overflow"))?;
            if label == 0 || label > n {
                return Err(Error::QubitOutOfRange {
                    index: label,
                    n_qubits: n,
                });
            }
            if p.kind(label - 1) != PauliKind::I {
                return Err(Error::DuplicateQubit(label));
            }
            p.set(label - 1, kind);
        }
        p.phase = phase;
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Exponent `k` of the global factor `i^k`.
    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    /// `+1` or `-1` for Hermitian strings, `None` otherwise.
    pub fn sign(&self) -> Option<i8> {
        match self.phase {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.phase == 2
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    /// Same masks with phase `+1`.
    pub fn unsigned(&self) -> Self {
        self.clone().with_phase(0)
    }

    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + 2) % 4;
        p
    }

    /// Multiplies the operator by `i^k`.
    pub fn times_i(&self, k: u8) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + k) % 4;
        p
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q / WORD] >> (q % WORD) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q / WORD] >> (q % WORD) & 1 == 1
    }

    pub fn kind(&self, q: usize) -> PauliKind {
        PauliKind::from_bits(self.x_bit(q), self.z_bit(q))
    }

    /// Overwrites the letter on qubit `q` without touching the phase.
    pub fn set(&mut self, q: usize, kind: PauliKind) {
        let (xb, zb) = kind.bits();
        let (w, b) = (q / WORD, q % WORD);
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    /// 0-based indices of qubits carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&q| self.kind(q) != PauliKind::I)
            .collect()
    }

    /// True when the masks are all zero (any phase).
    pub fn is_trivial(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    pub fn same_masks(&self, other: &Self) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    /// Concatenated symplectic vector `(x | z)` as bits, for linear algebra over GF(2).
    pub fn symplectic_bits(&self) -> Vec<bool> {
        (0..self.n)
            .map(|q| self.x_bit(q))
            .chain((0..self.n).map(|q| self.z_bit(q)))
            .collect()
    }

    /// Re-indexes the string onto a register of `n` qubits; `map` sends old
    /// 0-based indices to new ones.
    pub fn relabeled(&self, n: usize, map: impl Fn(usize) -> usize) -> Result<Self> {
        let mut p = Self::identity(n);
        for q in self.support() {
            let dst = map(q);
            if dst >= n {
                return Err(Error::QubitOutOfRange {
                    index: dst,
                    n_qubits: n,
                });
            }
            if p.kind(dst) != PauliKind::I {
                return Err(Error::DuplicateQubit(dst + 1));
            }
            p.set(dst, self.kind(q));
        }
        p.phase = self.phase;
        Ok(p)
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// `self · other` with exact phase tracking.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut p = self.clone();
        p.mul_assign_right(other);
        Ok(p)
    }

    /// `self ← self · other`; both must have the same width.
    pub(crate) fn mul_assign_right(&mut self, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        let mut plus = 0u32;
        let mut minus = 0u32;
        for w in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[w], self.z[w], other.x[w], other.z[w]);
            let (ax, ay, az) = (x1 & !z1, x1 & z1, !x1 & z1);
            let (bx, by, bz) = (x2 & !z2, x2 & z2, !x2 & z2);
            // XY = iZ, YZ = iX, ZX = iY and the reversed products carry -i.
            plus += ((ax & by) | (ay & bz) | (az & bx)).count_ones();
            minus += ((ax & bz) | (ay & bx) | (az & by)).count_ones();
            self.x[w] = x1 ^ x2;
            self.z[w] = z1 ^ z2;
        }
        let total = self.phase as u32 + other.phase as u32 + plus + 4 * (minus / 4 + 1) - minus;
        self.phase = (total % 4) as u8;
    }

    /// Whether the two operators commute; ignores phases.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_dims(other)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        let mut parity = 0u32;
        for w in 0..self.x.len() {
            parity ^= ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones() & 1;
        }
        parity == 0
    }

    fn flip_sign_if(&mut self, cond: bool) {
        if cond {
            self.phase = (self.phase + 2) % 4;
        }
    }

    // Clifford conjugation P -> U P U†, one method per generator of the gate set.

    pub fn conjugate_h(&mut self, q: usize) {
        let (xb, zb) = (self.x_bit(q), self.z_bit(q));
        self.flip_sign_if(xb && zb);
        self.set(q, PauliKind::from_bits(zb, xb));
    }

    pub fn conjugate_s(&mut self, q: usize) {
        let (xb, zb) = (self.x_bit(q), self.z_bit(q));
        self.flip_sign_if(xb && zb);
        self.set(q, PauliKind::from_bits(xb, zb ^ xb));
    }

    pub fn conjugate_sdg(&mut self, q: usize) {
        let (xb, zb) = (self.x_bit(q), self.z_bit(q));
        self.flip_sign_if(xb && !zb);
        self.set(q, PauliKind::from_bits(xb, zb ^ xb));
    }

    pub fn conjugate_x(&mut self, q: usize) {
        let zb = self.z_bit(q);
        self.flip_sign_if(zb);
    }

    pub fn conjugate_y(&mut self, q: usize) {
        let (xb, zb) = (self.x_bit(q), self.z_bit(q));
        self.flip_sign_if(xb ^ zb);
    }

    pub fn conjugate_z(&mut self, q: usize) {
        let xb = self.x_bit(q);
        self.flip_sign_if(xb);
    }

    pub fn conjugate_cnot(&mut self, c: usize, t: usize) {
        let (xc, zc, xt, zt) = (self.x_bit(c), self.z_bit(c), self.x_bit(t), self.z_bit(t));
        self.flip_sign_if(xc && zt && !(xt ^ zc));
        self.set(t, PauliKind::from_bits(xt ^ xc, zt));
        self.set(c, PauliKind::from_bits(xc, zc ^ zt));
    }

    pub fn conjugate_cz(&mut self, a: usize, b: usize) {
        let (xa, za, xb, zb) = (self.x_bit(a), self.z_bit(a), self.x_bit(b), self.z_bit(b));
        self.flip_sign_if(xa && xb && (za ^ zb));
        self.set(a, PauliKind::from_bits(xa, za ^ xb));
        self.set(b, PauliKind::from_bits(xb, zb ^ xa));
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        if self.is_trivial() {
            return f.write_str("I");
        }
        for q in self.support() {
            write!(f, "{}{}", self.kind(q).letter(), q + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString[{}]({})", self.n, self)
    }
}

impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
