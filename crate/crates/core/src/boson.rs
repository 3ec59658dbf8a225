//! Truncated bosonic modes and their qubit encodings.
//!
//! A mode truncated at `d` levels is described by a dense `d × d` matrix.
//! Its levels are written into qubits through an [`Encoding`] (Gray code,
//! standard binary or unary) and each `|l'⟩⟨l|` is expanded into Pauli
//! strings with the single-qubit identities
//!
//! ```text
//! |0⟩⟨0| = (I + Z)/2    |0⟩⟨1| = (X + iY)/2
//! |1⟩⟨1| = (I - Z)/2    |1⟩⟨0| = (X - iY)/2
//! ```
//!
//! Powers of the quadratures are the `d × d` truncations of the exact
//! (untruncated) powers, so `(q² + p²)/2` is exactly `diag(n + ½)` and the
//! published per-term Pauli counts are reproduced.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, C64, DEFAULT_DROP_TOL};

/// Dense operator on a single `d`-level mode; `matrix[(l', l)]` is the
/// coefficient of `|l'⟩⟨l|`.
#[derive(Clone, Debug, PartialEq)]
pub struct DLevelOperator {
    matrix: DMatrix<C64>,
}

/// Position/momentum quadrature selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quadrature {
    Position,
    Momentum,
}

fn annihilation(d: usize) -> DMatrix<C64> {
    let mut a = DMatrix::<C64>::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn quadrature_matrix(kind: Quadrature, d: usize) -> DMatrix<C64> {
    let a = annihilation(d);
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        Quadrature::Position => (&a + &ad) * C64::new(s, 0.0),
        Quadrature::Momentum => (&ad - &a) * C64::new(0.0, s),
    }
}

impl DLevelOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.nrows() < 2 {
            return Err(Error::UnsupportedTruncation(matrix.nrows()));
        }
        Ok(DLevelOperator { matrix })
    }

    pub fn d(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn identity(d: usize) -> Self {
        DLevelOperator {
            matrix: DMatrix::identity(d, d),
        }
    }

    /// `|to⟩⟨from|`.
    pub fn transition(d: usize, from: usize, to: usize) -> Result<Self> {
        for l in [from, to] {
            if l >= d {
                return Err(Error::LevelOutOfRange { level: l, d });
            }
        }
        let mut m = DMatrix::<C64>::zeros(d, d);
        m[(to, from)] = C64::new(1.0, 0.0);
        Ok(DLevelOperator { matrix: m })
    }

    /// `q = (a + a†)/√2` truncated at `d` levels.
    pub fn position(d: usize) -> Self {
        Self::quadrature_power(Quadrature::Position, 1, d)
    }

    /// `p = i(a† − a)/√2` truncated at `d` levels.
    pub fn momentum(d: usize) -> Self {
        Self::quadrature_power(Quadrature::Momentum, 1, d)
    }

    /// `d × d` block of the exact `k`-th power of a quadrature.
    pub fn quadrature_power(kind: Quadrature, k: u32, d: usize) -> Self {
        assert!(d >= 2, "truncation must be at least 2");
        if k == 0 {
            return Self::identity(d);
        }
        // Entries of qᵏ within the first d levels only involve levels < d + k.
        let big = d + k as usize;
        let q = quadrature_matrix(kind, big);
        let mut acc = q.clone();
        for _ in 1..k {
            acc = &acc * &q;
        }
        DLevelOperator {
            matrix: acc.view((0, 0), (d, d)).into_owned(),
        }
    }

    /// `(q² + p²)/2 = diag(n + ½)`.
    pub fn harmonic(d: usize) -> Self {
        DLevelOperator {
            matrix: DMatrix::from_fn(d, d, |r, c| {
                if r == c {
                    C64::new(r as f64 + 0.5, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Number operator `a†a`.
    pub fn number(d: usize) -> Self {
        let a = annihilation(d);
        DLevelOperator {
            matrix: a.adjoint() * a,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_d(other)?;
        Ok(DLevelOperator {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_d(other)?;
        Ok(DLevelOperator {
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        DLevelOperator {
            matrix: &self.matrix * C64::new(c, 0.0),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.adjoint()).camax() <= tol
    }

    fn check_d(&self, other: &Self) -> Result<()> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        Ok(())
    }
}

/// Level-to-bitstring map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EncodingKind {
    Gray,
    StdBinary,
    Unary,
}

impl FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gray" => Ok(EncodingKind::Gray),
            "binary" | "std_binary" | "std-binary" => Ok(EncodingKind::StdBinary),
            "unary" | "one-hot" => Ok(EncodingKind::Unary),
            other => Err(Error::Unknown {
                kind: "encoding",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingKind::Gray => "gray",
            EncodingKind::StdBinary => "binary",
            EncodingKind::Unary => "unary",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Encoding {
    pub kind: EncodingKind,
    pub d: usize,
}

impl Encoding {
    pub fn new(kind: EncodingKind, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::UnsupportedTruncation(d));
        }
        let enc = Encoding { kind, d };
        if enc.qubits_per_mode() > 64 {
            return Err(Error::UnsupportedTruncation(d));
        }
        Ok(enc)
    }

    pub fn gray(d: usize) -> Self {
        Self::new(EncodingKind::Gray, d).expect("valid truncation")
    }

    pub fn binary(d: usize) -> Self {
        Self::new(EncodingKind::StdBinary, d).expect("valid truncation")
    }

    pub fn unary(d: usize) -> Self {
        Self::new(EncodingKind::Unary, d).expect("valid truncation")
    }

    /// `⌈log₂ d⌉` for the binary codes, `d` for unary.
    pub fn qubits_per_mode(&self) -> usize {
        match self.kind {
            EncodingKind::Unary => self.d,
            _ => (usize::BITS - (self.d - 1).leading_zeros()) as usize,
        }
    }

    /// Bitstring of level `l` (bit k = qubit k of the mode block).
    pub fn codeword(&self, l: usize) -> u64 {
        debug_assert!(l < self.d);
        let l = l as u64;
        match self.kind {
            EncodingKind::Gray => l ^ (l >> 1),
            EncodingKind::StdBinary => l,
            EncodingKind::Unary => 1 << l,
        }
    }

    pub fn codewords(&self) -> Vec<u64> {
        (0..self.d).map(|l| self.codeword(l)).collect()
    }

    /// True when every bit pattern of the block is a codeword.
    pub fn is_complete(&self) -> bool {
        self.kind != EncodingKind::Unary && self.d == 1 << self.qubits_per_mode()
    }

    /// Computational-basis indices of the codeword product space for
    /// `n_modes` modes, ordered with mode 0 levels varying fastest.
    pub fn codeword_indices(&self, n_modes: usize) -> Vec<usize> {
        let w = self.qubits_per_mode();
        let words = self.codewords();
        let mut out = vec![0usize];
        for m in 0..n_modes {
            let mut next = Vec::with_capacity(out.len() * words.len());
            for &cw in &words {
                for &base in &out {
                    next.push(base | ((cw as usize) << (m * w)));
                }
            }
            out = next;
        }
        // Re-order so that mode 0 varies fastest.
        let d = self.d;
        let total = out.len();
        let mut ordered = vec![0usize; total];
        for (flat, slot) in ordered.iter_mut().enumerate() {
            let mut rem = flat;
            let mut idx = 0usize;
            for m in 0..n_modes {
                let l = rem % d;
                rem /= d;
                idx |= (words[l] as usize) << (m * w);
            }
            *slot = idx;
        }
        ordered
    }
}

/// Pauli expansion of `|to⟩⟨from|` under `enc`, on one mode block.
pub fn projector_to_pauli(from: usize, to: usize, enc: &Encoding) -> Result<PauliSum> {
    for l in [from, to] {
        if l >= enc.d {
            return Err(Error::LevelOutOfRange { level: l, d: enc.d });
        }
    }
    let w = enc.qubits_per_mode();
    Ok(PauliSum::from_terms(w, projector_terms(enc.codeword(from), enc.codeword(to), w)))
}

fn projector_terms(bra: u64, ket: u64, w: usize) -> Vec<(PauliString, C64)> {
    let half = C64::new(0.5, 0.0);
    let mut terms: Vec<(u128, u128, C64)> = vec![(0, 0, C64::new(1.0, 0.0))];
    for k in 0..w {
        let kb = (ket >> k) & 1;
        let bb = (bra >> k) & 1;
        let bit = 1u128 << k;
        // (x, z, coefficient) pairs for |kb⟩⟨bb|.
        let factors: [(u128, u128, C64); 2] = match (kb, bb) {
            (0, 0) => [(0, 0, half), (0, bit, half)],
            (1, 1) => [(0, 0, half), (0, bit, -half)],
            // |0⟩⟨1| = (X + iY)/2
            (0, 1) => [(bit, 0, half), (bit, bit, C64::new(0.0, 0.5))],
            // |1⟩⟨0| = (X − iY)/2
            _ => [(bit, 0, half), (bit, bit, C64::new(0.0, -0.5))],
        };
        let mut next = Vec::with_capacity(terms.len() * 2);
        for &(x, z, c) in &terms {
            for &(fx, fz, fc) in &factors {
                next.push((x | fx, z | fz, c * fc));
            }
        }
        terms = next;
    }
    terms
        .into_iter()
        .map(|(x, z, c)| (PauliString::from_masks(w, x, z), c))
        .collect()
}

/// Encode a single-mode operator into a Pauli sum on one mode block.
pub fn encode_operator(op: &DLevelOperator, enc: &Encoding) -> Result<PauliSum> {
    if op.d() != enc.d {
        return Err(Error::DimensionMismatch {
            expected: enc.d,
            got: op.d(),
        });
    }
    let w = enc.qubits_per_mode();
    let mut acc: HashMap<PauliString, C64> = HashMap::new();
    for to in 0..op.d() {
        for from in 0..op.d() {
            let c = op.matrix[(to, from)];
            if c.norm() == 0.0 {
                continue;
            }
            for (s, pc) in projector_terms(enc.codeword(from), enc.codeword(to), w) {
                *acc.entry(s).or_insert(C64::new(0.0, 0.0)) += c * pc;
            }
        }
    }
    Ok(PauliSum::from_map(w, acc, DEFAULT_DROP_TOL))
}

/// Tensor product of single-mode operators embedded in an `n_modes` register.
///
/// Mode `m` occupies qubits `m·w .. (m+1)·w`; modes absent from `factors`
/// carry the identity.
pub fn encode_mode_product(
    factors: &[(usize, &DLevelOperator)],
    n_modes: usize,
    enc: &Encoding,
) -> Result<PauliSum> {
    let encoded: Vec<(usize, PauliSum)> = factors
        .iter()
        .map(|(m, op)| encode_operator(op, enc).map(|s| (*m, s)))
        .collect::<Result<_>>()?;
    embed_product(&encoded, n_modes, enc.qubits_per_mode())
}

/// Multiply already-encoded single-mode sums placed on their mode blocks.
pub fn embed_product(factors: &[(usize, PauliSum)], n_modes: usize, w: usize) -> Result<PauliSum> {
    let n_total = n_modes * w;
    let mut seen = vec![false; n_modes];
    let mut out = PauliSum::identity(n_total, 1.0);
    for (m, s) in factors {
        if *m >= n_modes {
            return Err(Error::InvalidArgument(format!(
                "mode {m} out of range for {n_modes} modes"
            )));
        }
        if seen[*m] {
            return Err(Error::RepeatedMode(*m));
        }
        seen[*m] = true;
        out = out.multiply(&s.embed(m * w, n_total))?;
    }
    Ok(out)
}

/// Many-body term types of a quartic normal-mode Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermType {
    P2,
    Q2,
    Q3,
    Q2Qj,
    Q4,
    Q3Qj,
    Q2Qj2,
    Q2QjQk,
}

impl TermType {
    pub const ALL: [TermType; 8] = [
        TermType::P2,
        TermType::Q2,
        TermType::Q3,
        TermType::Q2Qj,
        TermType::Q4,
        TermType::Q3Qj,
        TermType::Q2Qj2,
        TermType::Q2QjQk,
    ];

    /// `(quadrature, power)` per distinct mode.
    pub fn factors(self) -> Vec<(Quadrature, u32)> {
        use Quadrature::*;
        match self {
            TermType::P2 => vec![(Momentum, 2)],
            TermType::Q2 => vec![(Position, 2)],
            TermType::Q3 => vec![(Position, 3)],
            TermType::Q2Qj => vec![(Position, 2), (Position, 1)],
            TermType::Q4 => vec![(Position, 4)],
            TermType::Q3Qj => vec![(Position, 3), (Position, 1)],
            TermType::Q2Qj2 => vec![(Position, 2), (Position, 2)],
            TermType::Q2QjQk => vec![(Position, 2), (Position, 1), (Position, 1)],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TermType::P2 => "p_i^2",
            TermType::Q2 => "q_i^2",
            TermType::Q3 => "q_i^3",
            TermType::Q2Qj => "q_i^2 q_j",
            TermType::Q4 => "q_i^4",
            TermType::Q3Qj => "q_i^3 q_j",
            TermType::Q2Qj2 => "q_i^2 q_j^2",
            TermType::Q2QjQk => "q_i^2 q_j q_k",
        }
    }
}

/// One row of the per-term-type Pauli count table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermCount {
    pub term: TermType,
    /// Non-identity strings.
    pub strings: usize,
    pub includes_identity: bool,
}

impl TermCount {
    /// Count with the identity included when present.
    pub fn total(&self) -> usize {
        self.strings + usize::from(self.includes_identity)
    }
}

/// Pauli counts per term type for Gray-coded modes with `d ∈ {4, 8}`.
pub fn vibrational_term_count_table(d: usize) -> Result<Vec<TermCount>> {
    if d != 4 && d != 8 {
        return Err(Error::UnsupportedTruncation(d));
    }
    let enc = Encoding::gray(d);
    TermType::ALL
        .iter()
        .map(|&t| {
            let ops: Vec<DLevelOperator> = t
                .factors()
                .into_iter()
                .map(|(kind, k)| DLevelOperator::quadrature_power(kind, k, d))
                .collect();
            let factors: Vec<(usize, &DLevelOperator)> = ops.iter().enumerate().collect();
            let sum = encode_mode_product(&factors, ops.len(), &enc)?;
            let has_id = !sum.identity_coefficient().norm().eq(&0.0);
            Ok(TermCount {
                term: t,
                strings: sum.len() - usize::from(has_id),
                includes_identity: has_id,
            })
        })
        .collect()
}
