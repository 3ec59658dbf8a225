//! Pauli strings and sums of Pauli strings.
//!
//! A [`PauliString`] stores its letters in symplectic form (one X bit and one
//! Z bit per qubit, `Y = iXZ`), so products are bit operations plus a phase
//! lookup. Qubit 0 is the least significant bit of a computational basis
//! index and the leftmost character of the text form (`"XZII"` is `X₀Z₁`).
//!
//! A [`PauliSum`] is an immutable, canonically ordered list of
//! `(PauliString, coefficient)` pairs without duplicates. Every constructor
//! merges equal strings and drops coefficients whose magnitude falls below
//! the drop tolerance relative to the largest coefficient.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest qubit count a [`PauliString`] can address.
pub const MAX_QUBITS: usize = 128;

/// Relative coefficient drop tolerance used by all constructors.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

/// Default dense-matrix qubit limit; overridable with `VIBQ_DENSE_LIMIT`.
pub const DEFAULT_DENSE_LIMIT: usize = 14;

/// Active dense limit (environment override or default).
pub fn dense_limit() -> usize {
    std::env::var("VIBQ_DENSE_LIMIT")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_LIMIT)
}

/// `i^k` for `k` taken mod 4.
#[inline]
pub(crate) fn i_pow(k: u32) -> C64 {
    match k & 3 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' | '_' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis on a fixed number of qubits.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: u128,
    z: u128,
    n: u16,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        PauliString {
            x: 0,
            z: 0,
            n: n_qubits as u16,
        }
    }

    /// A single letter on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, p: Pauli) -> Self {
        Self::from_pairs(n_qubits, &[(qubit, p)])
    }

    /// Build from `(qubit, letter)` pairs; later pairs overwrite earlier ones.
    pub fn from_pairs(n_qubits: usize, pairs: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(n_qubits);
        for &(q, p) in pairs {
            assert!(q < n_qubits, "qubit {q} out of range");
            s.set(q, p);
        }
        s
    }

    /// Parse letters with qubit 0 leftmost, e.g. `"XZII"`.
    pub fn from_letters(letters: &str) -> Result<Self> {
        let chars: Vec<char> = letters.trim().chars().collect();
        if chars.len() > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "Pauli string longer than {MAX_QUBITS} qubits"
            )));
        }
        let mut s = Self::identity(chars.len());
        for (q, c) in chars.into_iter().enumerate() {
            let p = Pauli::from_char(c).ok_or_else(|| {
                Error::InvalidArgument(format!("invalid Pauli letter '{c}' in '{letters}'"))
            })?;
            s.set(q, p);
        }
        Ok(s)
    }

    pub(crate) fn from_masks(n_qubits: usize, x: u128, z: u128) -> Self {
        PauliString {
            x,
            z,
            n: n_qubits as u16,
        }
    }

    fn set(&mut self, q: usize, p: Pauli) {
        let (bx, bz) = p.bits();
        let m = 1u128 << q;
        self.x = if bx { self.x | m } else { self.x & !m };
        self.z = if bz { self.z | m } else { self.z & !m };
    }

    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u128 {
        self.x
    }

    pub fn z_mask(&self) -> u128 {
        self.z
    }

    pub fn letter(&self, q: usize) -> Pauli {
        Pauli::from_bits((self.x >> q) & 1 == 1, (self.z >> q) & 1 == 1)
    }

    pub fn letters(&self) -> impl Iterator<Item = Pauli> + '_ {
        (0..self.n_qubits()).map(move |q| self.letter(q))
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of Y letters; the string is a real matrix iff this is even.
    pub fn y_count(&self) -> usize {
        (self.x & self.z).count_ones() as usize
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        s.is_multiple_of(2)
    }

    /// `self · other = phase · result`, with `phase` a power of `i`.
    pub fn mul(&self, other: &PauliString) -> (C64, PauliString) {
        debug_assert_eq!(self.n, other.n);
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // P(x,z) = i^{|x∧z|} XᶻZᶻ and ZᶻXˣ = (-1)^{|z∧x|} XˣZᶻ.
        let k = (self.x & self.z).count_ones() + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 4 * 128
            - (x & z).count_ones();
        (i_pow(k), PauliString { x, z, n: self.n })
    }

    /// Image of basis state `b`: `P|b⟩ = phase |b'⟩`.
    #[inline]
    pub fn act(&self, b: usize) -> (usize, C64) {
        let b128 = b as u128;
        let k = (self.x & self.z).count_ones() + 2 * (self.z & b128).count_ones();
        ((b128 ^ self.x) as usize, i_pow(k))
    }

    /// Place this string on qubits `offset..offset+n` of a wider register.
    pub fn embed(&self, offset: usize, n_total: usize) -> PauliString {
        assert!(offset + self.n_qubits() <= n_total && n_total <= MAX_QUBITS);
        PauliString {
            x: self.x << offset,
            z: self.z << offset,
            n: n_total as u16,
        }
    }

    /// Letters restricted to qubits `offset..offset+width`.
    pub fn slice(&self, offset: usize, width: usize) -> PauliString {
        let mask = if width >= 128 {
            u128::MAX
        } else {
            (1u128 << width) - 1
        };
        PauliString {
            x: (self.x >> offset) & mask,
            z: (self.z >> offset) & mask,
            n: width as u16,
        }
    }

    fn letter_rank(p: Pauli) -> u8 {
        match p {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }
}

impl Ord for PauliString {
    /// Lexicographic over letters, qubit 0 first, `I < X < Y < Z`.
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = (self.x ^ other.x) | (self.z ^ other.z);
        if diff == 0 {
            return self.n.cmp(&other.n);
        }
        let q = diff.trailing_zeros() as usize;
        Self::letter_rank(self.letter(q)).cmp(&Self::letter_rank(other.letter(q)))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.letters() {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

/// Linear combination of Pauli strings with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(PauliString, C64)>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS);
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn identity(n_qubits: usize, c: impl Into<C64>) -> Self {
        Self::from_terms(n_qubits, [(PauliString::identity(n_qubits), c.into())])
    }

    pub fn from_string(s: PauliString, c: impl Into<C64>) -> Self {
        Self::from_terms(s.n_qubits(), [(s, c.into())])
    }

    /// Merge duplicates and drop small coefficients (default tolerance).
    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = (PauliString, C64)>) -> Self {
        Self::from_terms_with_tol(n_qubits, terms, DEFAULT_DROP_TOL)
    }

    pub fn from_terms_with_tol(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (PauliString, C64)>,
        tol: f64,
    ) -> Self {
        let mut acc: HashMap<PauliString, C64> = HashMap::new();
        for (s, c) in terms {
            assert_eq!(s.n_qubits(), n_qubits, "string width does not match sum");
            *acc.entry(s).or_insert(C64::new(0.0, 0.0)) += c;
        }
        Self::from_map(n_qubits, acc, tol)
    }

    pub(crate) fn from_map(n_qubits: usize, acc: HashMap<PauliString, C64>, tol: f64) -> Self {
        let max = acc.values().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = tol * max;
        let mut terms: Vec<(PauliString, C64)> = acc
            .into_iter()
            .filter(|(_, c)| max > 0.0 && c.norm() > cut)
            .collect();
        terms.sort_unstable_by_key(|a| a.0);
        PauliSum { n_qubits, terms }
    }

    /// Convenience constructor from `(letters, coefficient)` pairs.
    pub fn parse_terms(terms: &[(&str, C64)]) -> Result<Self> {
        let strings = terms
            .iter()
            .map(|(l, c)| PauliString::from_letters(l).map(|s| (s, *c)))
            .collect::<Result<Vec<_>>>()?;
        let n = strings.first().map(|(s, _)| s.n_qubits()).unwrap_or(0);
        if let Some((s, _)) = strings.iter().find(|(s, _)| s.n_qubits() != n) {
            return Err(Error::QubitMismatch {
                left: n,
                right: s.n_qubits(),
            });
        }
        Ok(Self::from_terms(n, strings))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> &[(PauliString, C64)] {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = &(PauliString, C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, s: &PauliString) -> C64 {
        self.terms
            .binary_search_by(|(t, _)| t.cmp(s))
            .map(|i| self.terms[i].1)
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn identity_coefficient(&self) -> C64 {
        self.coefficient(&PauliString::identity(self.n_qubits))
    }

    fn check_width(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_width(other)?;
        Ok(Self::from_terms(
            self.n_qubits,
            self.terms.iter().chain(other.terms.iter()).copied(),
        ))
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: impl Into<C64>) -> PauliSum {
        let c = c.into();
        Self::from_terms(self.n_qubits, self.terms.iter().map(|(s, a)| (*s, a * c)))
    }

    /// Exact product with phase tracking.
    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_width(other)?;
        let mut acc: HashMap<PauliString, C64> =
            HashMap::with_capacity(self.len().saturating_mul(other.len()).min(1 << 20));
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (ph, s) = a.mul(b);
                *acc.entry(s).or_insert(C64::new(0.0, 0.0)) += ph * ca * cb;
            }
        }
        Ok(Self::from_map(self.n_qubits, acc, DEFAULT_DROP_TOL))
    }

    /// Re-apply the drop rule with a custom tolerance.
    pub fn simplify(&self, tol: f64) -> PauliSum {
        Self::from_terms_with_tol(self.n_qubits, self.terms.iter().copied(), tol)
    }

    /// Place this sum on qubits `offset..offset+n` of a wider register.
    pub fn embed(&self, offset: usize, n_total: usize) -> PauliSum {
        PauliSum {
            n_qubits: n_total,
            terms: {
                let mut t: Vec<_> = self
                    .terms
                    .iter()
                    .map(|(s, c)| (s.embed(offset, n_total), *c))
                    .collect();
                t.sort_unstable_by_key(|a| a.0);
                t
            },
        }
    }

    /// Hermitian conjugate (coefficients conjugated; strings are Hermitian).
    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(s, c)| (*s, c.conj())).collect(),
        }
    }

    /// Largest imaginary part among coefficients.
    pub fn max_imag(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() <= tol * self.max_abs().max(1.0)
    }

    pub(crate) fn require_hermitian(&self) -> Result<()> {
        if self.is_hermitian(1e-10) {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation: self.max_imag(),
            })
        }
    }

    fn max_abs(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude excluding the identity term.
    pub fn max_abs_non_identity(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(s, _)| !s.is_identity())
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    /// Sum of coefficient magnitudes, identity included.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    /// `W = sqrt(sum over non-identity strings of a_k²)`.
    pub fn w_magnitude(&self) -> Result<f64> {
        self.require_hermitian()?;
        Ok(self
            .terms
            .iter()
            .filter(|(s, _)| !s.is_identity())
            .map(|(_, c)| c.re * c.re)
            .sum::<f64>()
            .sqrt())
    }

    /// Number of strings per weight; identity counted at weight 0.
    pub fn locality_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for (s, _) in &self.terms {
            *h.entry(s.weight()).or_insert(0) += 1;
        }
        h
    }

    pub fn dense_dim(&self) -> Result<usize> {
        let limit = dense_limit();
        if self.n_qubits > limit {
            return Err(Error::DenseLimit {
                n_qubits: self.n_qubits,
                limit,
            });
        }
        Ok(1usize << self.n_qubits)
    }

    /// Dense `2^n × 2^n` matrix (qubit 0 least significant).
    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let dim = self.dense_dim()?;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for (s, c) in &self.terms {
            for b in 0..dim {
                let (r, ph) = s.act(b);
                m[(r, b)] += ph * c;
            }
        }
        Ok(m)
    }

    /// Matrix elements `⟨basis[r]| self |basis[c]⟩` on a subset of
    /// computational basis states.
    pub fn restricted_dense(&self, basis: &[usize]) -> Result<DMatrix<C64>> {
        let dim = self.dense_dim()?;
        let mut pos = vec![usize::MAX; dim];
        for (i, &b) in basis.iter().enumerate() {
            if b >= dim {
                return Err(Error::InvalidArgument(format!(
                    "basis index {b} out of range for {} qubits",
                    self.n_qubits
                )));
            }
            pos[b] = i;
        }
        let k = basis.len();
        let mut m = DMatrix::<C64>::zeros(k, k);
        for (s, c) in &self.terms {
            for (col, &b) in basis.iter().enumerate() {
                let (r, ph) = s.act(b);
                let row = pos[r];
                if row != usize::MAX {
                    m[(row, col)] += ph * c;
                }
            }
        }
        Ok(m)
    }

    /// `self |ψ⟩` without forming the dense matrix.
    pub fn apply(&self, psi: &DVector<C64>) -> Result<DVector<C64>> {
        let dim = self.dense_dim()?;
        if psi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: psi.len(),
            });
        }
        let mut out = DVector::<C64>::zeros(dim);
        for (s, c) in &self.terms {
            for b in 0..dim {
                let (r, ph) = s.act(b);
                out[r] += ph * c * psi[b];
            }
        }
        Ok(out)
    }

    /// Write the text serialization: header lines, then `<letters> <re> <im>`.
    pub fn write_text<W: Write>(&self, mut w: W, unit: &str) -> std::io::Result<()> {
        writeln!(w, "# pauli-sum: leftmost letter is qubit 0")?;
        writeln!(w, "n_qubits {}", self.n_qubits)?;
        writeln!(w, "unit {unit}")?;
        for (s, c) in &self.terms {
            writeln!(w, "{s} {} {}", c.re, c.im)?;
        }
        Ok(())
    }

    pub fn to_text(&self, unit: &str) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf, unit).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parse the text serialization; returns the sum and its unit tag.
    pub fn read_text<R: BufRead>(r: R) -> Result<(PauliSum, String)> {
        let mut n_qubits = None;
        let mut unit = String::new();
        let mut terms = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let perr = |m: &str| Error::Parse {
                line: lineno,
                message: m.to_string(),
            };
            match parts[0] {
                "n_qubits" => {
                    let n = parts
                        .get(1)
                        .and_then(|v| v.parse::<usize>().ok())
                        .ok_or_else(|| perr("bad n_qubits"))?;
                    n_qubits = Some(n);
                }
                "unit" => unit = parts.get(1).unwrap_or(&"").to_string(),
                letters => {
                    let n = n_qubits.ok_or_else(|| perr("term before n_qubits header"))?;
                    if parts.len() != 3 {
                        return Err(perr("expected '<letters> <re> <im>'"));
                    }
                    let s = PauliString::from_letters(letters)?;
                    if s.n_qubits() != n {
                        return Err(perr("string width does not match n_qubits"));
                    }
                    let re: f64 = parts[1].parse().map_err(|_| perr("bad real part"))?;
                    let im: f64 = parts[2].parse().map_err(|_| perr("bad imaginary part"))?;
                    terms.push((s, C64::new(re, im)));
                }
            }
        }
        let n = n_qubits.ok_or(Error::Parse {
            line: 0,
            message: "missing n_qubits header".into(),
        })?;
        Ok((PauliSum::from_terms(n, terms), unit))
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}·{s}", c.re)?;
            } else {
                write!(f, "({}{:+}i)·{s}", c.re, c.im)?;
            }
        }
        Ok(())
    }
}
