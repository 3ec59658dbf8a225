//! Jordan–Wigner mapping and Pauli-string counting for electronic Hamiltonians.
//!
//! Spin orbitals are laid out as `2·p + σ` for spatial orbital `p` and spin
//! `σ ∈ {0, 1}`. Two-electron integrals use chemist notation `(pq|rs)`,
//! attached to `a†_{pσ} a†_{rμ} a_{sμ} a_{qσ}`, with the eightfold symmetry
//! of a real orbital basis.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, C64};

/// Largest spatial-orbital count accepted by the brute-force counter.
pub const MAX_BRUTEFORCE_ORBITALS: usize = 8;

/// Product of ladder operators, applied right to left.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    /// `(spin-orbital index, is_creation)` in written order.
    pub ops: Vec<(usize, bool)>,
    pub coeff: C64,
}

impl FermionTerm {
    pub fn new(ops: Vec<(usize, bool)>, coeff: impl Into<C64>) -> Self {
        FermionTerm {
            ops,
            coeff: coeff.into(),
        }
    }

    /// `a†_p a_q`.
    pub fn hopping(p: usize, q: usize) -> Self {
        Self::new(vec![(p, true), (q, false)], 1.0)
    }

    /// `a†_p a†_r a_s a_q`.
    pub fn two_body(p: usize, r: usize, s: usize, q: usize) -> Self {
        Self::new(vec![(p, true), (r, true), (s, false), (q, false)], 1.0)
    }
}

/// `a†_p` or `a_p` on `n` spin orbitals.
pub fn ladder(p: usize, creation: bool, n: usize) -> Result<PauliSum> {
    if p >= n {
        return Err(Error::OrbitalOutOfRange {
            index: p,
            n_orbitals: n,
        });
    }
    let mut chain: Vec<(usize, Pauli)> = (0..p).map(|m| (m, Pauli::Z)).collect();
    chain.push((p, Pauli::X));
    let xs = PauliString::from_pairs(n, &chain);
    chain.pop();
    chain.push((p, Pauli::Y));
    let ys = PauliString::from_pairs(n, &chain);
    let yc = if creation { -0.5 } else { 0.5 };
    Ok(PauliSum::from_terms(
        n,
        [(xs, C64::new(0.5, 0.0)), (ys, C64::new(0.0, yc))],
    ))
}

/// Jordan–Wigner image of a ladder-operator product on `n` spin orbitals.
pub fn jordan_wigner(t: &FermionTerm, n: usize) -> Result<PauliSum> {
    let mut out = PauliSum::identity(n, t.coeff);
    for &(p, creation) in &t.ops {
        out = out.multiply(&ladder(p, creation, n)?)?;
    }
    Ok(out)
}

/// Jordan–Wigner image of a sum of terms.
pub fn jordan_wigner_sum(terms: &[FermionTerm], n: usize) -> Result<PauliSum> {
    terms.iter().try_fold(PauliSum::zero(n), |acc, t| {
        acc.add(&jordan_wigner(t, n)?)
    })
}

/// Distinct index tuples equivalent to `(pq|rs)` under the real eightfold
/// symmetry.
pub fn chemist_orbit(p: usize, q: usize, r: usize, s: usize) -> Vec<[usize; 4]> {
    let set: BTreeSet<[usize; 4]> = [
        [p, q, r, s],
        [q, p, r, s],
        [p, q, s, r],
        [q, p, s, r],
        [r, s, p, q],
        [s, r, p, q],
        [r, s, q, p],
        [s, r, q, p],
    ]
    .into_iter()
    .collect();
    set.into_iter().collect()
}

/// Terms of one symmetry class `(pq|rs)` with indices taken as spin orbitals.
pub fn two_electron_class_spinless(p: usize, q: usize, r: usize, s: usize) -> Vec<FermionTerm> {
    chemist_orbit(p, q, r, s)
        .into_iter()
        .map(|[a, b, c, e]| FermionTerm::two_body(a, c, e, b))
        .collect()
}

/// Terms of one symmetry class `(pq|rs)` over spatial orbitals, summed over
/// both spin labels of each electron.
pub fn two_electron_class(p: usize, q: usize, r: usize, s: usize) -> Vec<FermionTerm> {
    let mut out = Vec::new();
    for [a, b, c, e] in chemist_orbit(p, q, r, s) {
        for sigma in 0..2 {
            for mu in 0..2 {
                out.push(FermionTerm::two_body(
                    2 * a + sigma,
                    2 * c + mu,
                    2 * e + mu,
                    2 * b + sigma,
                ));
            }
        }
    }
    out
}

/// `Σ_σ a†_{pσ} a_{qσ}` plus its adjoint (once when `p = q`).
pub fn one_electron_class(p: usize, q: usize) -> Vec<FermionTerm> {
    let mut out = Vec::new();
    for sigma in 0..2 {
        out.push(FermionTerm::hopping(2 * p + sigma, 2 * q + sigma));
        if p != q {
            out.push(FermionTerm::hopping(2 * q + sigma, 2 * p + sigma));
        }
    }
    out
}

/// Number of distinct Pauli strings (identity included) in the union of the
/// Jordan–Wigner images of each class.
pub fn count_distinct_strings(classes: &[Vec<FermionTerm>], n: usize) -> Result<usize> {
    let sets: Vec<HashSet<PauliString>> = classes
        .par_iter()
        .map(|c| {
            jordan_wigner_sum(c, n).map(|s| s.iter().map(|(p, _)| *p).collect::<HashSet<_>>())
        })
        .collect::<Result<_>>()?;
    let mut all = HashSet::new();
    for s in sets {
        all.extend(s);
    }
    Ok(all.len())
}

fn choose(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Closed-form count of distinct Pauli strings for `n` spatial orbitals
/// (`2n` qubits), identity included.
pub fn es_pauli_count_analytic(n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let nq = 2 * n;
    // identity, single Z, ZZ pairs
    let diagonal = 1 + nq + choose(nq, 2);
    // XX/YY hops, alone or dressed by a Z on a third spin orbital
    let hops = 2 * n * (n - 1) * (nq - 1);
    // same-spin and opposite-spin double excitations on two spatial orbitals
    let two_orbital = 4 * choose(n, 2) * choose(n, 2);
    let four_orbital = 12 * choose(n, 4);
    diagonal + hops + two_orbital + four_orbital
}

/// Enumerate every symmetry class with unit coefficients and count the
/// distinct strings of the Jordan–Wigner image.
pub fn es_pauli_count_bruteforce(n: usize) -> Result<usize> {
    if n > MAX_BRUTEFORCE_ORBITALS {
        return Err(Error::EnumerationLimit(format!(
            "{n} spatial orbitals exceeds the brute-force limit of {MAX_BRUTEFORCE_ORBITALS}"
        )));
    }
    if n == 0 {
        return Ok(0);
    }
    let nq = 2 * n;
    let mut classes = Vec::new();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|p| (p..n).map(move |q| (p, q)))
        .collect();
    for &(p, q) in &pairs {
        classes.push(one_electron_class(p, q));
    }
    for (i, &(p, q)) in pairs.iter().enumerate() {
        for &(r, s) in &pairs[i..] {
            classes.push(two_electron_class(p, q, r, s));
        }
    }
    count_distinct_strings(&classes, nq)
}
