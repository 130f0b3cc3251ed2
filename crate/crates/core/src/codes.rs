//! Stabilizer codes: the signed 4-qubit surface codes, their merged forms,
//! general planar surface codes and the 3-qubit repetition code.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{solve_gf2, PauliGroup};
use crate::pauli::{PauliKind, PauliString};
use crate::tableau::{MeasureMode, StabilizerTableau};

/// Largest data block accepted by [`distance`].
pub const DISTANCE_CAP: usize = 12;

/// Single-qubit measurement basis, also used for logical readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Basis {
    Z,
    X,
    Y,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Z, Basis::X, Basis::Y];

    pub fn kind(self) -> PauliKind {
        match self {
            Basis::X => PauliKind::X,
            Basis::Y => PauliKind::Y,
            Basis::Z => PauliKind::Z,
        }
    }

    pub fn letter(self) -> char {
        self.kind().letter()
    }
}

/// Lattice metadata: `qubit_at[row][col]` holds 1-based qubit labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub rows: usize,
    pub cols: usize,
    pub qubit_at: Vec<Vec<usize>>,
    pub boundaries: &'static str,
}

const BOUNDARY_CONVENTION: &str =
    "left/right rough (Z-type boundary stabilizers), top/bottom smooth (X-type); \
     face (r,c) is X-type when r+c is even";

/// Logical state labels. `+i`/`-i` complete the six cardinal states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LogicalLabel {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl LogicalLabel {
    pub const CARDINAL: [LogicalLabel; 6] = [
        LogicalLabel::Zero,
        LogicalLabel::One,
        LogicalLabel::Plus,
        LogicalLabel::Minus,
        LogicalLabel::PlusI,
        LogicalLabel::MinusI,
    ];

    pub fn basis(self) -> Basis {
        match self {
            LogicalLabel::Zero | LogicalLabel::One => Basis::Z,
            LogicalLabel::Plus | LogicalLabel::Minus => Basis::X,
            LogicalLabel::PlusI | LogicalLabel::MinusI => Basis::Y,
        }
    }

    /// Eigenvalue of the basis operator: +1 for `0`, `+`, `+i`.
    pub fn eigenvalue(self) -> i8 {
        match self {
            LogicalLabel::Zero | LogicalLabel::Plus | LogicalLabel::PlusI => 1,
            _ => -1,
        }
    }

    pub fn from_basis(basis: Basis, eigenvalue: i8) -> Self {
        match (basis, eigenvalue > 0) {
            (Basis::Z, true) => LogicalLabel::Zero,
            (Basis::Z, false) => LogicalLabel::One,
            (Basis::X, true) => LogicalLabel::Plus,
            (Basis::X, false) => LogicalLabel::Minus,
            (Basis::Y, true) => LogicalLabel::PlusI,
            (Basis::Y, false) => LogicalLabel::MinusI,
        }
    }

    /// Label of `H|self⟩`.
    pub fn hadamard(self) -> Self {
        match self {
            LogicalLabel::Zero => LogicalLabel::Plus,
            LogicalLabel::Plus => LogicalLabel::Zero,
            LogicalLabel::One => LogicalLabel::Minus,
            LogicalLabel::Minus => LogicalLabel::One,
            LogicalLabel::PlusI => LogicalLabel::MinusI,
            LogicalLabel::MinusI => LogicalLabel::PlusI,
        }
    }

    /// The signed logical operator stabilizing this state in `code`.
    pub fn stabilizer(self, code: &StabilizerCode) -> PauliString {
        let op = code.logical(self.basis());
        if self.eigenvalue() > 0 {
            op
        } else {
            op.negated()
        }
    }
}

impl fmt::Display for LogicalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogicalLabel::Zero => "0",
            LogicalLabel::One => "1",
            LogicalLabel::Plus => "+",
            LogicalLabel::Minus => "-",
            LogicalLabel::PlusI => "+i",
            LogicalLabel::MinusI => "-i",
        })
    }
}

impl FromStr for LogicalLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "0" => LogicalLabel::Zero,
            "1" => LogicalLabel::One,
            "+" => LogicalLabel::Plus,
            "-" => LogicalLabel::Minus,
            "+i" => LogicalLabel::PlusI,
            "-i" => LogicalLabel::MinusI,
            other => return Err(Error::Config(format!("unknown logical label {other:?}"))),
        })
    }
}

impl Serialize for LogicalLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for LogicalLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a run of labels such as `00`, `+-`, `+i0` or `0,+i`.
pub fn parse_labels(text: &str) -> Result<Vec<LogicalLabel>> {
    if text.contains(',') {
        return text.split(',').map(|t| t.trim().parse()).collect();
    }
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let two = chars.get(i + 1) == Some(&'i') && matches!(chars[i], '+' | '-');
        let len = if two { 2 } else { 1 };
        out.push(chars[i..i + len].iter().collect::<String>().parse()?);
        i += len;
    }
    Ok(out)
}

/// Maps a Pauli on `codes.len()` logical qubits to the physical operator
/// (`X → X_L`, `Z → Z_L`, `Y → Y_L` of the matching code), keeping its sign.
pub fn logical_to_physical(logical: &PauliString, codes: &[StabilizerCode]) -> Result<PauliString> {
    if logical.n_qubits() != codes.len() {
        return Err(Error::DimensionMismatch {
            left: codes.len(),
            right: logical.n_qubits(),
        });
    }
    let n = codes[0].n_qubits();
    let mut out = PauliString::identity(n).with_phase(logical.phase_exp());
    for (k, code) in codes.iter().enumerate() {
        let op = match logical.kind(k) {
            PauliKind::I => continue,
            PauliKind::X => code.logical_x().clone(),
            PauliKind::Y => code.logical_y(),
            PauliKind::Z => code.logical_z().clone(),
        };
        out = out.multiply(&op)?;
    }
    Ok(out)
}

/// A stabilizer code encoding one logical qubit on a block of data qubits
/// inside a register of `n_qubits`.
#[derive(Clone, Debug)]
pub struct StabilizerCode {
    label: String,
    n_qubits: usize,
    data: Vec<usize>,
    generators: Vec<PauliString>,
    logical_x: PauliString,
    logical_z: PauliString,
    layout: Option<Layout>,
    /// `pure_errors[j]` anticommutes with generator `j` only and commutes with both logicals.
    pure_errors: Vec<PauliString>,
}

impl StabilizerCode {
    pub fn new(
        label: impl Into<String>,
        n_qubits: usize,
        data: Vec<usize>,
        generators: Vec<PauliString>,
        logical_x: PauliString,
        logical_z: PauliString,
        layout: Option<Layout>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidCode(msg));
        let all = generators
            .iter()
            .chain([&logical_x, &logical_z])
            .collect::<Vec<_>>();
        for p in &all {
            if p.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    left: n_qubits,
                    right: p.n_qubits(),
                });
            }
            if !p.is_hermitian() {
                return Err(Error::NotHermitian(p.to_string()));
            }
            if let Some(q) = p.support().into_iter().find(|q| !data.contains(q)) {
                return bad(format!(
                    "{p} acts on qubit {} outside the data block",
                    q + 1
                ));
            }
        }
        if data.len() != generators.len() + 1 {
            return bad(format!(
                "{} data qubits and {} generators do not leave exactly one logical qubit",
                data.len(),
                generators.len()
            ));
        }
        for (i, g) in generators.iter().enumerate() {
            for h in &generators[i + 1..] {
                if !g.commutes_unchecked(h) {
                    return bad(format!("generators {g} and {h} anticommute"));
                }
            }
            for l in [&logical_x, &logical_z] {
                if !g.commutes_unchecked(l) {
                    return bad(format!("logical {l} anticommutes with generator {g}"));
                }
            }
        }
        if logical_x.commutes_unchecked(&logical_z) {
            return bad("logical X and Z commute".into());
        }
        let group = PauliGroup::new(n_qubits, &generators)?;
        if group.rank() != generators.len() {
            return bad("generators are not independent".into());
        }
        for l in [&logical_x, &logical_z] {
            if group.contains_up_to_phase(l) {
                return bad(format!("logical {l} lies in the stabilizer group"));
            }
        }
        let pure_errors = pure_errors(&data, &generators, &logical_x, &logical_z)?;
        Ok(Self {
            label: label.into(),
            n_qubits,
            data,
            generators,
            logical_x,
            logical_z,
            layout,
            pure_errors,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// 0-based data qubit indices.
    pub fn data_qubits(&self) -> &[usize] {
        &self.data
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn logical_x(&self) -> &PauliString {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &PauliString {
        &self.logical_z
    }

    /// `Y_L = i X_L Z_L`.
    pub fn logical_y(&self) -> PauliString {
        self.logical_x
            .multiply(&self.logical_z)
            .expect("same register")
            .times_i(1)
    }

    pub fn logical(&self, basis: Basis) -> PauliString {
        match basis {
            Basis::X => self.logical_x.clone(),
            Basis::Z => self.logical_z.clone(),
            Basis::Y => self.logical_y(),
        }
    }

    pub fn layout(&self) -> Option<&Layout> {
        self.layout.as_ref()
    }

    pub fn pure_error(&self, generator: usize) -> &PauliString {
        &self.pure_errors[generator]
    }

    pub fn stabilizer_group(&self) -> PauliGroup {
        PauliGroup::new(self.n_qubits, &self.generators).expect("validated at construction")
    }

    /// The same code on a `width`-qubit register with every qubit shifted by `offset`.
    pub fn relocated(&self, width: usize, offset: usize) -> Result<Self> {
        let mv = |p: &PauliString| p.relabeled(width, |q| q + offset);
        let layout = self.layout.clone().map(|mut l| {
            l.qubit_at.iter_mut().flatten().for_each(|q| *q += offset);
            l
        });
        Self::new(
            self.label.clone(),
            width,
            self.data.iter().map(|q| q + offset).collect(),
            self.generators.iter().map(mv).collect::<Result<_>>()?,
            mv(&self.logical_x)?,
            mv(&self.logical_z)?,
            layout,
        )
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Per-qubit readout bases used to measure the logical operator of `basis`
    /// destructively. Z and X read every data qubit in that basis; Y reads the
    /// support of `Y_L` in its own letters and the remaining qubits in Z.
    pub fn readout_bases(&self, basis: Basis) -> Vec<(usize, Basis)> {
        let y = self.logical_y();
        self.data
            .iter()
            .map(|&q| {
                let b = match basis {
                    Basis::Y => match y.kind(q) {
                        PauliKind::X => Basis::X,
                        PauliKind::Y => Basis::Y,
                        _ => Basis::Z,
                    },
                    other => other,
                };
                (q, b)
            })
            .collect()
    }
}

impl Serialize for StabilizerCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("StabilizerCode", 8)?;
        st.serialize_field("label", &self.label)?;
        st.serialize_field("n_qubits", &self.n_qubits)?;
        st.serialize_field(
            "data_qubits",
            &self.data.iter().map(|q| q + 1).collect::<Vec<_>>(),
        )?;
        st.serialize_field("generators", &self.generators)?;
        st.serialize_field("logical_x", &self.logical_x)?;
        st.serialize_field("logical_z", &self.logical_z)?;
        st.serialize_field("logical_y", &self.logical_y())?;
        st.serialize_field("layout", &self.layout)?;
        st.end()
    }
}

/// Pure errors over the data block: `E_j` anticommutes with generator `j`
/// only and commutes with the other generators and both logicals.
fn pure_errors(
    data: &[usize],
    generators: &[PauliString],
    lx: &PauliString,
    lz: &PauliString,
) -> Result<Vec<PauliString>> {
    let n = lx.n_qubits();
    let m = data.len();
    let constraints: Vec<&PauliString> = generators.iter().chain([lx, lz]).collect();
    // Unknowns: x bits then z bits of E on the data block. <E, P> = E_x·P_z + E_z·P_x.
    let rows: Vec<Vec<bool>> = constraints
        .iter()
        .map(|p| {
            data.iter()
                .map(|&q| p.z_bit(q))
                .chain(data.iter().map(|&q| p.x_bit(q)))
                .collect()
        })
        .collect();
    (0..generators.len())
        .map(|j| {
            let rhs: Vec<bool> = (0..constraints.len()).map(|i| i == j).collect();
            let sol = solve_gf2(&rows, &rhs)
                .ok_or_else(|| Error::InvalidCode("no pure error for generator".into()))?;
            let mut e = PauliString::identity(n);
            for (k, &q) in data.iter().enumerate() {
                e.set(q, PauliKind::from_bits(sol[k], sol[m + k]));
            }
            Ok(e)
        })
        .collect()
}

fn paulis(n: usize, texts: &[&str]) -> Vec<PauliString> {
    texts
        .iter()
        .map(|t| PauliString::parse(t, n).expect("static literal"))
        .collect()
}

fn pauli(n: usize, text: &str) -> PauliString {
    PauliString::parse(text, n).expect("static literal")
}

/// The signed 4-qubit surface code `⟨-Z1Z2, -Z3Z4, +X1X2X3X4⟩` with
/// `Z_L = Z1Z3`, `X_L = X1X2`, placed on qubits `offset+1..=offset+4`.
pub fn four_qubit_code(label: &str, width: usize, offset: usize) -> Result<StabilizerCode> {
    let base = StabilizerCode::new(
        label,
        4,
        (0..4).collect(),
        paulis(4, &["-Z1Z2", "-Z3Z4", "+X1X2X3X4"]),
        pauli(4, "+X1X2"),
        pauli(4, "+Z1Z3"),
        Some(Layout {
            rows: 2,
            cols: 2,
            qubit_at: vec![vec![1, 3], vec![2, 4]],
            boundaries: BOUNDARY_CONVENTION,
        }),
    )?;
    base.relocated(width, offset)
}

/// Code A on qubits 1–4 of an 8-qubit register.
pub fn code_a() -> StabilizerCode {
    static CELL: OnceLock<StabilizerCode> = OnceLock::new();
    CELL.get_or_init(|| four_qubit_code("A", 8, 0).expect("static code"))
        .clone()
}

/// Code B on qubits 5–8 of an 8-qubit register.
pub fn code_b() -> StabilizerCode {
    static CELL: OnceLock<StabilizerCode> = OnceLock::new();
    CELL.get_or_init(|| four_qubit_code("B", 8, 4).expect("static code"))
        .clone()
}

/// The 2×4 code obtained by merging A and B across their rough boundaries.
pub fn merged_rough() -> StabilizerCode {
    static CELL: OnceLock<StabilizerCode> = OnceLock::new();
    CELL.get_or_init(|| {
        StabilizerCode::new(
            "merged-rough",
            8,
            (0..8).collect(),
            paulis(
                8,
                &[
                    "-Z1Z2",
                    "+X1X2X3X4",
                    "-Z7Z8",
                    "+X5X6X7X8",
                    "+Z3Z4Z5Z6",
                    "+X3X5",
                    "+X4X6",
                ],
            ),
            pauli(8, "+X1X2"),
            pauli(8, "+Z1Z3Z5Z7"),
            Some(Layout {
                rows: 2,
                cols: 4,
                qubit_at: vec![vec![1, 3, 5, 7], vec![2, 4, 6, 8]],
                boundaries: BOUNDARY_CONVENTION,
            }),
        )
        .expect("static code")
    })
    .clone()
}

/// The 4×2 code obtained by merging A (top) and B (bottom) across their smooth boundaries.
pub fn merged_smooth() -> StabilizerCode {
    static CELL: OnceLock<StabilizerCode> = OnceLock::new();
    CELL.get_or_init(|| {
        StabilizerCode::new(
            "merged-smooth",
            8,
            (0..8).collect(),
            paulis(
                8,
                &[
                    "-Z1Z2",
                    "-Z3Z4",
                    "+X1X2X3X4",
                    "-Z5Z6",
                    "-Z7Z8",
                    "+X5X6X7X8",
                    "+Z2Z4Z5Z7",
                ],
            ),
            pauli(8, "+X1X2X5X6"),
            pauli(8, "+Z1Z3"),
            Some(Layout {
                rows: 4,
                cols: 2,
                qubit_at: vec![vec![1, 3], vec![2, 4], vec![5, 7], vec![6, 8]],
                boundaries: BOUNDARY_CONVENTION,
            }),
        )
        .expect("static code")
    })
    .clone()
}

/// Planar surface code with qubits on the vertices of a `rows × cols` grid,
/// numbered column-major. Face `(r, c)` is X-type when `r + c` is even.
/// Left/right edges carry weight-2 Z stabilizers next to X faces, top/bottom
/// edges carry weight-2 X stabilizers next to Z faces. Logical Z runs along
/// the top row (left to right), logical X down the left column.
pub fn planar_surface_code(rows: usize, cols: usize) -> Result<StabilizerCode> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidCode(format!(
            "planar code needs at least 2×2 vertices, got {rows}×{cols}"
        )));
    }
    let n = rows * cols;
    let q = |r: usize, c: usize| c * rows + r;
    let x_face = |r: usize, c: usize| (r + c).is_multiple_of(2);
    let mut gens = Vec::new();
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let kind = if x_face(r, c) {
                PauliKind::X
            } else {
                PauliKind::Z
            };
            gens.push(PauliString::uniform(
                n,
                kind,
                &[q(r, c), q(r + 1, c), q(r, c + 1), q(r + 1, c + 1)],
            )?);
        }
    }
    for r in 0..rows - 1 {
        if x_face(r, 0) {
            gens.push(PauliString::uniform(
                n,
                PauliKind::Z,
                &[q(r, 0), q(r + 1, 0)],
            )?);
        }
        if x_face(r, cols - 2) {
            gens.push(PauliString::uniform(
                n,
                PauliKind::Z,
                &[q(r, cols - 1), q(r + 1, cols - 1)],
            )?);
        }
    }
    for c in 0..cols - 1 {
        if !x_face(0, c) {
            gens.push(PauliString::uniform(
                n,
                PauliKind::X,
                &[q(0, c), q(0, c + 1)],
            )?);
        }
        if !x_face(rows - 2, c) {
            gens.push(PauliString::uniform(
                n,
                PauliKind::X,
                &[q(rows - 1, c), q(rows - 1, c + 1)],
            )?);
        }
    }
    let lz = PauliString::uniform(
        n,
        PauliKind::Z,
        &(0..cols).map(|c| q(0, c)).collect::<Vec<_>>(),
    )?;
    let lx = PauliString::uniform(
        n,
        PauliKind::X,
        &(0..rows).map(|r| q(r, 0)).collect::<Vec<_>>(),
    )?;
    let layout = Layout {
        rows,
        cols,
        qubit_at: (0..rows)
            .map(|r| (0..cols).map(|c| q(r, c) + 1).collect())
            .collect(),
        boundaries: BOUNDARY_CONVENTION,
    };
    StabilizerCode::new(
        format!("sc{rows}x{cols}"),
        n,
        (0..n).collect(),
        gens,
        lx,
        lz,
        Some(layout),
    )
}

/// `⟨Z1Z2, Z2Z3⟩` with `Z_L = Z1`, `X_L = X1X2X3`.
pub fn repetition_code_3() -> StabilizerCode {
    static CELL: OnceLock<StabilizerCode> = OnceLock::new();
    CELL.get_or_init(|| {
        StabilizerCode::new(
            "rep3",
            3,
            vec![0, 1, 2],
            paulis(3, &["+Z1Z2", "+Z2Z3"]),
            pauli(3, "+X1X2X3"),
            pauli(3, "+Z1"),
            None,
        )
        .expect("static code")
    })
    .clone()
}

/// Looks up a code by its command-line name: `sc2x2A`, `sc2x2B`, `sc<R>x<C>`,
/// `rep3`, `merged-rough`, `merged-smooth`.
pub fn named_code(name: &str) -> Result<StabilizerCode> {
    match name {
        "sc2x2A" => return Ok(code_a()),
        "sc2x2B" => return Ok(code_b()),
        "rep3" => return Ok(repetition_code_3()),
        "merged-rough" => return Ok(merged_rough()),
        "merged-smooth" => return Ok(merged_smooth()),
        _ => {}
    }
    let dims = name
        .strip_prefix("sc")
        .and_then(|rest| rest.split_once('x'))
        .and_then(|(r, c)| Some((r.parse::<usize>().ok()?, c.parse::<usize>().ok()?)));
    match dims {
        Some((r, c)) => planar_surface_code(r, c),
        None => Err(Error::Config(format!("unknown code {name:?}"))),
    }
}

/// Prepares the logical state `label` of `code` by projective measure-and-fix.
///
/// The code's qubits must start in `|0…0⟩`; other qubits are untouched. Each
/// signed generator is measured (random outcomes are post-selected onto the
/// declared sign, deterministic mismatches are repaired with the generator's
/// pure error), then the labeled logical operator is fixed the same way.
pub fn encode(
    state: &mut StabilizerTableau,
    code: &StabilizerCode,
    label: LogicalLabel,
) -> Result<()> {
    let mut no_rng = rand::rngs::mock::StepRng::new(0, 0);
    for (j, g) in code.generators().iter().enumerate() {
        let out = state.measure(g, MeasureMode::Forced(0), &mut no_rng);
        match out {
            Ok(_) => {}
            Err(Error::ImpossibleOutcome { .. }) => state.apply_pauli(code.pure_error(j))?,
            Err(e) => return Err(e),
        }
    }
    let target = label.stabilizer(code);
    match state.measure(&target, MeasureMode::Forced(0), &mut no_rng) {
        Ok(_) => Ok(()),
        Err(Error::ImpossibleOutcome { .. }) => {
            state.apply_pauli(&logical_flip(code, label.basis()))
        }
        Err(e) => Err(e),
    }
}

/// A logical Pauli that anticommutes with the logical operator of `basis`.
pub fn logical_flip(code: &StabilizerCode, basis: Basis) -> PauliString {
    match basis {
        Basis::Z => code.logical_x().clone(),
        Basis::X | Basis::Y => code.logical_z().clone(),
    }
}

/// Expectation of each signed generator: `+1`, `-1`, or `0` when indefinite.
pub fn syndromes(state: &StabilizerTableau, code: &StabilizerCode) -> Result<Vec<i8>> {
    code.generators()
        .iter()
        .map(|g| state.expectation(g))
        .collect()
}

/// Signed generators whose value can be read off a destructive logical
/// readout in `basis` (see [`StabilizerCode::readout_bases`]).
pub fn basis_checks(basis: Basis, code: &StabilizerCode) -> Vec<PauliString> {
    let bases = code.readout_bases(basis);
    code.generators()
        .iter()
        .filter(|g| {
            g.support().iter().all(|q| {
                bases
                    .iter()
                    .find(|(d, _)| d == q)
                    .is_some_and(|(_, b)| b.kind() == g.kind(*q))
            })
        })
        .cloned()
        .collect()
}

/// Minimum weights `(d_x, d_z)` over the cosets `X_L·S` and `Z_L·S`, by
/// exhaustive enumeration of the stabilizer group.
pub fn distance(code: &StabilizerCode) -> Result<(usize, usize)> {
    if code.data_qubits().len() > DISTANCE_CAP {
        return Err(Error::DistanceCapExceeded {
            requested: code.data_qubits().len(),
            cap: DISTANCE_CAP,
        });
    }
    let min_weight = |logical: &PauliString| {
        let gens = code.generators();
        let mut current = logical.clone();
        let mut best = current.weight();
        // Gray-code walk: step i toggles generator trailing_zeros(i).
        for i in 1u64..1 << gens.len() {
            current.mul_assign_right(&gens[i.trailing_zeros() as usize]);
            best = best.min(current.weight());
        }
        best
    };
    Ok((min_weight(code.logical_x()), min_weight(code.logical_z())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p8(text: &str) -> PauliString {
        PauliString::parse(text, 8).unwrap()
    }

    #[test]
    fn code_a_matches_signed_generators() {
        let a = code_a();
        let gens: Vec<String> = a.generators().iter().map(|g| g.to_string()).collect();
        assert_eq!(gens, ["-Z1Z2", "-Z3Z4", "+X1X2X3X4"]);
        assert_eq!(a.logical_z().to_string(), "+Z1Z3");
        assert_eq!(a.logical_x().to_string(), "+X1X2");
        assert_eq!(a.logical_y().to_string(), "+Y1X2Z3");
        assert_eq!(code_b().logical_y().to_string(), "+Y5X6Z7");
        assert!(!a.logical_z().commutes(a.logical_x()).unwrap());
    }

    #[test]
    fn merged_codes_have_one_logical_qubit() {
        let rough = merged_rough();
        assert_eq!(rough.generators().len(), 7);
        let smooth = merged_smooth();
        assert_eq!(smooth.generators().len(), 7);
        let zzzz = p8("+Z2Z4Z5Z7");
        for g in code_a().generators().iter().chain(code_b().generators()) {
            assert!(zzzz.commutes(g).unwrap());
        }
    }

    #[test]
    fn joint_logical_membership() {
        let xx = p8("+X1X2X5X6");
        let merged = merged_rough().stabilizer_group();
        assert!(merged.contains(&xx));
        assert!(merged.contains(
            &p8("+X3X5")
                .multiply(&p8("+X4X6"))
                .unwrap()
                .multiply(&p8("+X1X2X3X4"))
                .unwrap()
        ));
        let separate = PauliGroup::new(
            8,
            &code_a()
                .generators()
                .iter()
                .chain(code_b().generators())
                .cloned()
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(!separate.contains_up_to_phase(&xx));
    }

    #[test]
    fn planar_codes() {
        let c22 = planar_surface_code(2, 2).unwrap();
        let gens: Vec<String> = c22.generators().iter().map(|g| g.to_string()).collect();
        assert_eq!(gens, ["+X1X2X3X4", "+Z1Z2", "+Z3Z4"]);
        assert_eq!(c22.logical_z().to_string(), "+Z1Z3");
        assert_eq!(c22.logical_x().to_string(), "+X1X2");

        let c33 = planar_surface_code(3, 3).unwrap();
        assert_eq!(c33.generators().len(), 8);
        assert_eq!(distance(&c33).unwrap(), (3, 3));
        for (r, c) in [(2, 3), (3, 2), (2, 5), (3, 4), (4, 3)] {
            let code = planar_surface_code(r, c).unwrap();
            assert_eq!(code.generators().len(), r * c - 1, "{r}x{c}");
            assert_eq!(distance(&code).unwrap(), (r, c), "{r}x{c}");
        }
        assert!(planar_surface_code(1, 3).is_err());
    }

    #[test]
    fn planar_2x4_equals_rough_merge_up_to_signs() {
        let planar = planar_surface_code(2, 4).unwrap();
        let unsigned = |c: &StabilizerCode| {
            let gens: Vec<_> = c.generators().iter().map(|g| g.unsigned()).collect();
            PauliGroup::new(8, &gens).unwrap().canonical_generators()
        };
        assert_eq!(unsigned(&planar), unsigned(&merged_rough()));
    }

    #[test]
    fn repetition_code() {
        let rep = repetition_code_3();
        assert_eq!(distance(&rep).unwrap(), (3, 1));
        let mut t = StabilizerTableau::init_zero(3).unwrap();
        encode(&mut t, &rep, LogicalLabel::Zero).unwrap();
        t.apply_pauli(&PauliString::parse("+X1", 3).unwrap())
            .unwrap();
        assert_eq!(syndromes(&t, &rep).unwrap(), vec![-1, 1]);

        let mut t = StabilizerTableau::init_zero(3).unwrap();
        encode(&mut t, &rep, LogicalLabel::One).unwrap();
        for q in 1..=3 {
            assert_eq!(
                t.expectation(&PauliString::parse(&format!("+Z{q}"), 3).unwrap())
                    .unwrap(),
                -1
            );
        }
    }

    #[test]
    fn distances_of_four_qubit_codes() {
        assert_eq!(distance(&code_a()).unwrap(), (2, 2));
        assert_eq!(distance(&code_b()).unwrap(), (2, 2));
        assert_eq!(distance(&merged_rough()).unwrap(), (2, 4));
        assert!(matches!(
            distance(&planar_surface_code(4, 4).unwrap()),
            Err(Error::DistanceCapExceeded { requested: 16, .. })
        ));
    }

    #[test]
    fn encode_and_syndromes() {
        let a = code_a();
        let mut t = StabilizerTableau::init_zero(8).unwrap();
        encode(&mut t, &a, LogicalLabel::Zero).unwrap();
        assert_eq!(syndromes(&t, &a).unwrap(), vec![1, 1, 1]);
        assert_eq!(t.expectation(a.logical_z()).unwrap(), 1);
        assert_eq!(t.expectation(a.logical_x()).unwrap(), 0);

        let mut flipped = t.clone();
        flipped.apply_pauli(&p8("+X1")).unwrap();
        assert_eq!(syndromes(&flipped, &a).unwrap(), vec![-1, 1, 1]);
        let mut flipped = t.clone();
        flipped.apply_pauli(&p8("+Z3")).unwrap();
        assert_eq!(syndromes(&flipped, &a).unwrap(), vec![1, 1, -1]);

        let mut t = StabilizerTableau::init_zero(8).unwrap();
        encode(&mut t, &a, LogicalLabel::Plus).unwrap();
        assert_eq!(t.expectation(a.logical_x()).unwrap(), 1);
        assert_eq!(t.expectation(a.logical_z()).unwrap(), 0);
    }

    #[test]
    fn basis_checks_per_basis() {
        let show = |v: Vec<PauliString>| v.iter().map(|p| p.to_string()).collect::<Vec<_>>();
        assert_eq!(show(basis_checks(Basis::Z, &code_a())), ["-Z1Z2", "-Z3Z4"]);
        assert_eq!(show(basis_checks(Basis::X, &code_b())), ["+X5X6X7X8"]);
        assert_eq!(show(basis_checks(Basis::Y, &code_a())), ["-Z3Z4"]);
    }

    #[test]
    fn label_parsing_and_logical_map() {
        use LogicalLabel::*;
        assert_eq!(parse_labels("0+").unwrap(), vec![Zero, Plus]);
        assert_eq!(parse_labels("+i-").unwrap(), vec![PlusI, Minus]);
        assert_eq!(parse_labels("-i,1").unwrap(), vec![MinusI, One]);
        assert!(parse_labels("0q").is_err());
        let yy = PauliString::parse("-Y1Y2", 2).unwrap();
        let phys = logical_to_physical(&yy, &[code_a(), code_b()]).unwrap();
        assert_eq!(phys.to_string(), "-Y1X2Z3Y5X6Z7");
    }

    #[test]
    fn named_codes() {
        assert_eq!(named_code("sc3x3").unwrap().generators().len(), 8);
        assert_eq!(named_code("rep3").unwrap().label(), "rep3");
        assert!(named_code("toric").is_err());
    }
}
