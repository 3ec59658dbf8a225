//! Normal-mode force fields, dipole surfaces and their qubit Hamiltonians.
//!
//! A force field holds harmonic frequencies and cubic/quartic constants keyed
//! by sorted index multisets; each constant multiplies its monomial once:
//!
//! ```text
//! H = Σ_i ω_i (q_i² + p_i²)/2 + Σ h_ijk q_i q_j q_k + Σ h_ijkl q_i q_j q_k q_l
//! ```
//!
//! All energies are in cm⁻¹.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::boson::{embed_product, encode_operator, DLevelOperator, Encoding, Quadrature};
use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, C64, DEFAULT_DROP_TOL, MAX_QUBITS};

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 3] = ["co", "coh", "fermi_resonance"];

/// Frequency window of the pessimistic resource model.
pub const PESSIMISTIC_OMEGA_RANGE: (f64, f64) = (1000.0, 4000.0);
pub const PESSIMISTIC_CUBIC: f64 = 400.0;
pub const PESSIMISTIC_QUARTIC: f64 = 40.0;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ForceField {
    omegas: Vec<f64>,
    cubic: BTreeMap<[usize; 3], f64>,
    quartic: BTreeMap<[usize; 4], f64>,
}

fn check_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidForceField(format!("{what} is not finite")))
    }
}

impl ForceField {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        for (i, &w) in omegas.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidForceField(format!(
                    "omega[{i}] = {w} must be positive"
                )));
            }
        }
        Ok(ForceField {
            omegas,
            ..Default::default()
        })
    }

    pub fn n_modes(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn cubic(&self) -> &BTreeMap<[usize; 3], f64> {
        &self.cubic
    }

    pub fn quartic(&self) -> &BTreeMap<[usize; 4], f64> {
        &self.quartic
    }

    fn check_indices(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&i| i >= self.n_modes()) {
            Some(i) => Err(Error::InvalidForceField(format!(
                "mode index {i} out of range for {} modes",
                self.n_modes()
            ))),
            None => Ok(()),
        }
    }

    /// Set `h_ijk`; the index order is irrelevant.
    pub fn set_cubic(&mut self, mut idx: [usize; 3], value: f64) -> Result<()> {
        self.check_indices(&idx)?;
        check_finite(value, "cubic constant")?;
        idx.sort_unstable();
        self.cubic.insert(idx, value);
        Ok(())
    }

    /// Set `h_ijkl`; the index order is irrelevant.
    pub fn set_quartic(&mut self, mut idx: [usize; 4], value: f64) -> Result<()> {
        self.check_indices(&idx)?;
        check_finite(value, "quartic constant")?;
        idx.sort_unstable();
        self.quartic.insert(idx, value);
        Ok(())
    }

    /// Same frequencies, no anharmonic constants.
    pub fn harmonic(&self) -> ForceField {
        ForceField {
            omegas: self.omegas.clone(),
            ..Default::default()
        }
    }

    /// Largest number of distinct modes touched by a single constant.
    pub fn max_coupled_modes(&self) -> usize {
        let distinct = |idx: &[usize]| {
            let mut v = idx.to_vec();
            v.dedup();
            v.len()
        };
        self.cubic
            .keys()
            .map(|k| distinct(k))
            .chain(self.quartic.keys().map(|k| distinct(k)))
            .max()
            .unwrap_or(usize::from(!self.omegas.is_empty()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::Unknown {
                kind: "axis",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["x", "y", "z"][self.index()])
    }
}

/// Taylor expansion of one Cartesian dipole component.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AxisDipole {
    pub constant: f64,
    pub linear: BTreeMap<usize, f64>,
    /// Keys are sorted `(i, j)` with `i ≤ j`.
    pub quadratic: BTreeMap<(usize, usize), f64>,
}

impl AxisDipole {
    pub fn is_zero(&self) -> bool {
        self.constant == 0.0
            && self.linear.values().all(|&v| v == 0.0)
            && self.quadratic.values().all(|&v| v == 0.0)
    }

    pub fn set_quadratic(&mut self, i: usize, j: usize, value: f64) {
        self.quadratic.insert((i.min(j), i.max(j)), value);
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DipoleSurface {
    pub axes: [AxisDipole; 3],
}

impl DipoleSurface {
    pub fn axis(&self, a: Axis) -> &AxisDipole {
        &self.axes[a.index()]
    }

    pub fn axis_mut(&mut self, a: Axis) -> &mut AxisDipole {
        &mut self.axes[a.index()]
    }

    /// Axes with at least one nonzero coefficient.
    pub fn active_axes(&self) -> Vec<Axis> {
        Axis::ALL
            .into_iter()
            .filter(|&a| !self.axis(a).is_zero())
            .collect()
    }
}

/// A force field together with its dipole surface.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub force_field: ForceField,
    pub dipole: DipoleSurface,
}

enum ModeOp {
    Harmonic,
    Q(u32),
}

struct Monomial {
    coeff: f64,
    factors: Vec<(usize, ModeOp)>,
}

fn monomial(coeff: f64, idx: &[usize]) -> Monomial {
    let mut factors: Vec<(usize, ModeOp)> = Vec::new();
    for &i in idx {
        match factors.last_mut() {
            Some((m, ModeOp::Q(k))) if *m == i => *k += 1,
            _ => factors.push((i, ModeOp::Q(1))),
        }
    }
    Monomial { coeff, factors }
}

struct Encoded {
    enc: Encoding,
    harmonic: PauliSum,
    powers: Vec<PauliSum>,
}

impl Encoded {
    fn new(enc: Encoding, max_power: u32) -> Result<Self> {
        let harmonic = encode_operator(&DLevelOperator::harmonic(enc.d), &enc)?;
        let powers = (1..=max_power)
            .map(|k| {
                encode_operator(
                    &DLevelOperator::quadrature_power(Quadrature::Position, k, enc.d),
                    &enc,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Encoded {
            enc,
            harmonic,
            powers,
        })
    }

    fn get(&self, op: &ModeOp) -> &PauliSum {
        match op {
            ModeOp::Harmonic => &self.harmonic,
            ModeOp::Q(k) => &self.powers[*k as usize - 1],
        }
    }
}

fn register_width(n_modes: usize, enc: &Encoding) -> Result<usize> {
    let n = n_modes * enc.qubits_per_mode();
    if n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "{n} qubits exceeds the supported maximum of {MAX_QUBITS}"
        )));
    }
    Ok(n)
}

/// Fixed work split so coefficient sums do not depend on the thread count.
const ASSEMBLY_CHUNKS: usize = 64;

fn assemble(terms: &[Monomial], n_modes: usize, enc: &Encoding, constant: f64) -> Result<PauliSum> {
    let n = register_width(n_modes, enc)?;
    let max_power = terms
        .iter()
        .flat_map(|t| t.factors.iter())
        .filter_map(|(_, op)| match op {
            ModeOp::Q(k) => Some(*k),
            ModeOp::Harmonic => None,
        })
        .max()
        .unwrap_or(1);
    let cache = Encoded::new(*enc, max_power)?;
    let w = cache.enc.qubits_per_mode();
    let chunk = terms.len().div_ceil(ASSEMBLY_CHUNKS).max(1);
    let parts: Vec<HashMap<PauliString, C64>> = terms
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = HashMap::<PauliString, C64>::new();
            for t in part {
                let factors: Vec<(usize, PauliSum)> = t
                    .factors
                    .iter()
                    .map(|(m, op)| (*m, cache.get(op).clone()))
                    .collect();
                let s = embed_product(&factors, n_modes, w)?;
                for (p, c) in s.iter() {
                    *acc.entry(*p).or_default() += c * t.coeff;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut parts = parts.into_iter();
    let mut acc = parts.next().unwrap_or_default();
    for part in parts {
        for (p, c) in part {
            *acc.entry(p).or_default() += c;
        }
    }
    if constant != 0.0 {
        *acc.entry(PauliString::identity(n)).or_default() += C64::new(constant, 0.0);
    }
    Ok(PauliSum::from_map(n, acc, DEFAULT_DROP_TOL))
}

/// Qubit Hamiltonian of a force field, in cm⁻¹.
pub fn build_hamiltonian(ff: &ForceField, enc: &Encoding) -> Result<PauliSum> {
    let mut terms: Vec<Monomial> = ff
        .omegas
        .iter()
        .enumerate()
        .map(|(i, &w)| Monomial {
            coeff: w,
            factors: vec![(i, ModeOp::Harmonic)],
        })
        .collect();
    terms.extend(ff.cubic.iter().map(|(k, &v)| monomial(v, k)));
    terms.extend(ff.quartic.iter().map(|(k, &v)| monomial(v, k)));
    assemble(&terms, ff.n_modes(), enc, 0.0)
}

/// Qubit operator of one dipole component on an `n_modes` register.
pub fn build_dipole(ds: &DipoleSurface, axis: Axis, n_modes: usize, enc: &Encoding) -> Result<PauliSum> {
    let a = ds.axis(axis);
    let mut terms: Vec<Monomial> = Vec::new();
    for (&i, &v) in &a.linear {
        terms.push(monomial(v, &[i]));
    }
    for (&(i, j), &v) in &a.quadratic {
        terms.push(monomial(v, &[i, j]));
    }
    for t in &terms {
        if let Some((m, _)) = t.factors.iter().find(|(m, _)| *m >= n_modes) {
            return Err(Error::InvalidForceField(format!(
                "dipole references mode {m} of {n_modes}"
            )));
        }
    }
    assemble(&terms, n_modes, enc, a.constant)
}

/// `(h − ζI)²`.
pub fn fold(h: &PauliSum, zeta: f64) -> Result<PauliSum> {
    h.require_hermitian()?;
    let shifted = h.sub(&PauliSum::identity(h.n_qubits(), zeta))?;
    shifted.multiply(&shifted)
}

/// Evenly spaced frequencies on the closed interval `[lo, hi]`.
pub fn omega_grid(n_modes: usize) -> Vec<f64> {
    let (lo, hi) = PESSIMISTIC_OMEGA_RANGE;
    match n_modes {
        0 => Vec::new(),
        1 => vec![lo],
        m => (0..m)
            .map(|i| lo + i as f64 * (hi - lo) / (m - 1) as f64)
            .collect(),
    }
}

/// Worst-case force field used for resource estimates: every allowed cubic
/// constant at 400 cm⁻¹ and every allowed quartic constant at 40 cm⁻¹.
///
/// Cubic terms are `q_i³` and `q_i² q_j` with `i < j`; quartic terms are
/// `q_i⁴`, `q_i³ q_j`, `q_i² q_j²` and, with `include_3body`, `q_i² q_j q_k`.
pub fn pessimistic_model(n_modes: usize, include_3body: bool) -> ForceField {
    let mut ff = ForceField::new(omega_grid(n_modes)).expect("positive grid");
    let m = n_modes;
    for i in 0..m {
        ff.cubic.insert([i, i, i], PESSIMISTIC_CUBIC);
        ff.quartic.insert([i, i, i, i], PESSIMISTIC_QUARTIC);
        for j in i + 1..m {
            ff.cubic.insert([i, i, j], PESSIMISTIC_CUBIC);
            ff.quartic.insert([i, i, i, j], PESSIMISTIC_QUARTIC);
            ff.quartic.insert([i, j, j, j], PESSIMISTIC_QUARTIC);
            ff.quartic.insert([i, i, j, j], PESSIMISTIC_QUARTIC);
            if include_3body {
                for k in j + 1..m {
                    for key in [[i, i, j, k], [i, j, j, k], [i, j, k, k]] {
                        ff.quartic.insert(key, PESSIMISTIC_QUARTIC);
                    }
                }
            }
        }
    }
    ff
}

/// Built-in dataset by name.
pub fn builtin(name: &str) -> Result<Dataset> {
    let text = match name {
        "co" => include_str!("../data/co.ff"),
        "coh" => include_str!("../data/coh.ff"),
        "fermi_resonance" => include_str!("../data/fermi_resonance.ff"),
        other => {
            return Err(Error::Unknown {
                kind: "molecule",
                name: other.to_string(),
            })
        }
    };
    Dataset::parse(text)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Omegas,
    Cubic,
    Quartic,
    Dipole(Axis),
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid index '{tok}'")))
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

impl Dataset {
    /// Read the sectioned text format (`[omegas]`, `[cubic]`, `[quartic]`,
    /// `[dipole.x|y|z]`).
    pub fn parse(text: &str) -> Result<Dataset> {
        let mut section = Section::None;
        let mut omegas: BTreeMap<usize, f64> = BTreeMap::new();
        let mut cubic: Vec<(usize, [usize; 3], f64)> = Vec::new();
        let mut quartic: Vec<(usize, [usize; 4], f64)> = Vec::new();
        let mut dipole = DipoleSurface::default();

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = match name.trim() {
                    "omegas" => Section::Omegas,
                    "cubic" => Section::Cubic,
                    "quartic" => Section::Quartic,
                    s => match s.strip_prefix("dipole.") {
                        Some(a) => Section::Dipole(a.parse().map_err(|_| {
                            parse_err(line, format!("unknown dipole axis '{a}'"))
                        })?),
                        None => return Err(parse_err(line, format!("unknown section '{s}'"))),
                    },
                };
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            let (value, keys) = toks.split_last().expect("nonempty line");
            let value = parse_value(value, line)?;
            let want = |k: usize| {
                if keys.len() == k {
                    Ok(())
                } else {
                    Err(parse_err(line, format!("expected {k} indices, found {}", keys.len())))
                }
            };
            match section {
                Section::None => return Err(parse_err(line, "data before any section header")),
                Section::Omegas => {
                    want(1)?;
                    let i = parse_index(keys[0], line)?;
                    if omegas.insert(i, value).is_some() {
                        return Err(parse_err(line, format!("duplicate omega for mode {i}")));
                    }
                }
                Section::Cubic => {
                    want(3)?;
                    let mut k = [0; 3];
                    for (slot, t) in k.iter_mut().zip(keys) {
                        *slot = parse_index(t, line)?;
                    }
                    cubic.push((line, k, value));
                }
                Section::Quartic => {
                    want(4)?;
                    let mut k = [0; 4];
                    for (slot, t) in k.iter_mut().zip(keys) {
                        *slot = parse_index(t, line)?;
                    }
                    quartic.push((line, k, value));
                }
                Section::Dipole(axis) => {
                    let a = dipole.axis_mut(axis);
                    match keys {
                        ["const"] => a.constant = value,
                        [i] => {
                            let i = parse_index(i, line)?;
                            if a.linear.insert(i, value).is_some() {
                                return Err(parse_err(line, "duplicate dipole entry"));
                            }
                        }
                        [i, j] => {
                            let (i, j) = (parse_index(i, line)?, parse_index(j, line)?);
                            if a.quadratic.insert((i.min(j), i.max(j)), value).is_some() {
                                return Err(parse_err(line, "duplicate dipole entry"));
                            }
                        }
                        _ => return Err(parse_err(line, "dipole entries take 1 or 2 indices or 'const'")),
                    }
                }
            }
        }

        let n_modes = omegas.len();
        if let Some((_, &i)) = omegas.keys().enumerate().find(|(pos, &i)| *pos != i) {
            return Err(Error::InvalidForceField(format!(
                "omega indices must be 0..{n_modes} without gaps (found {i})"
            )));
        }
        let mut ff = ForceField::new(omegas.into_values().collect())?;
        for (line, k, v) in cubic {
            let mut sorted = k;
            sorted.sort_unstable();
            if ff.cubic.contains_key(&sorted) {
                return Err(parse_err(line, "duplicate cubic constant"));
            }
            ff.set_cubic(k, v)?;
        }
        for (line, k, v) in quartic {
            let mut sorted = k;
            sorted.sort_unstable();
            if ff.quartic.contains_key(&sorted) {
                return Err(parse_err(line, "duplicate quartic constant"));
            }
            ff.set_quartic(k, v)?;
        }
        for a in Axis::ALL {
            let d = dipole.axis(a);
            let bad = d
                .linear
                .keys()
                .copied()
                .chain(d.quadratic.keys().map(|&(_, j)| j))
                .find(|&i| i >= n_modes);
            if let Some(i) = bad {
                return Err(Error::InvalidForceField(format!(
                    "dipole.{a} references mode {i} of {n_modes}"
                )));
            }
        }
        Ok(Dataset {
            force_field: ff,
            dipole,
        })
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text form; `parse(dump(x)) == x`.
    pub fn dump(&self) -> String {
        let ff = &self.force_field;
        let mut s = String::new();
        s.push_str("[omegas]\n");
        for (i, w) in ff.omegas.iter().enumerate() {
            let _ = writeln!(s, "{i} {w}");
        }
        if !ff.cubic.is_empty() {
            s.push_str("\n[cubic]\n");
            for ([i, j, k], v) in &ff.cubic {
                let _ = writeln!(s, "{i} {j} {k} {v}");
            }
        }
        if !ff.quartic.is_empty() {
            s.push_str("\n[quartic]\n");
            for ([i, j, k, l], v) in &ff.quartic {
                let _ = writeln!(s, "{i} {j} {k} {l} {v}");
            }
        }
        for a in Axis::ALL {
            let d = self.dipole.axis(a);
            if *d == AxisDipole::default() {
                continue;
            }
            let _ = writeln!(s, "\n[dipole.{a}]");
            if d.constant != 0.0 {
                let _ = writeln!(s, "const {}", d.constant);
            }
            for (i, v) in &d.linear {
                let _ = writeln!(s, "{i} {v}");
            }
            for ((i, j), v) in &d.quadratic {
                let _ = writeln!(s, "{i} {j} {v}");
            }
        }
        s
    }
}
