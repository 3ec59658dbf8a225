//! First-order Trotterized propagators and imaginary-time operators.
//!
//! ```text
//! Ũ(Δτ) = Π_k exp(−iΔτ a_k P_k)      M̃(Δβ) = Π_k exp(−Δβ a_k P_k)
//! ```
//!
//! The product is taken left to right in the chosen term order. Each factor
//! uses `P² = I`, so `exp(−iθP) = cos θ − i sin θ P` and
//! `exp(−xP) = cosh x − sinh x P`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, C64};
use crate::spectra::diagonalize;
use crate::vibham::fold;

/// Term ordering inside a Trotter step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermOrder {
    /// Canonical Pauli-string order.
    Lex,
    /// Largest `|a_k|` first; ties in canonical order.
    MagnitudeDesc,
    SeededShuffle(u64),
}

impl FromStr for TermOrder {
    type Err = Error;

    /// `lex`, `magnitude-desc`, `seeded-shuffle` (seed 0) or
    /// `seeded-shuffle:<seed>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lex" => Ok(TermOrder::Lex),
            "magnitude-desc" => Ok(TermOrder::MagnitudeDesc),
            "seeded-shuffle" => Ok(TermOrder::SeededShuffle(0)),
            _ => match s.strip_prefix("seeded-shuffle:").map(str::parse) {
                Some(Ok(seed)) => Ok(TermOrder::SeededShuffle(seed)),
                _ => Err(Error::Unknown {
                    kind: "term order",
                    name: s.to_string(),
                }),
            },
        }
    }
}

impl fmt::Display for TermOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermOrder::Lex => f.write_str("lex"),
            TermOrder::MagnitudeDesc => f.write_str("magnitude-desc"),
            TermOrder::SeededShuffle(seed) => write!(f, "seeded-shuffle:{seed}"),
        }
    }
}

/// Real-coefficient terms of a Hermitian sum in the requested order.
pub fn ordered_terms(h: &PauliSum, order: TermOrder) -> Result<Vec<(PauliString, f64)>> {
    h.require_hermitian()?;
    let mut terms: Vec<(PauliString, f64)> = h.iter().map(|(p, c)| (*p, c.re)).collect();
    match order {
        TermOrder::Lex => {}
        TermOrder::MagnitudeDesc => terms.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs())),
        TermOrder::SeededShuffle(seed) => terms.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }
    Ok(terms)
}

fn check_dim(n_qubits: usize) -> Result<usize> {
    PauliSum::zero(n_qubits).dense_dim()
}

/// `m ← (c·I + s·P) m`.
fn left_apply(m: &mut DMatrix<C64>, p: &PauliString, c: C64, s: C64, scratch: &mut DMatrix<C64>) {
    let dim = m.nrows();
    scratch.copy_from(m);
    *m *= c;
    for b in 0..dim {
        let (r, ph) = p.act(b);
        let f = s * ph;
        for col in 0..dim {
            m[(r, col)] += f * scratch[(b, col)];
        }
    }
}

fn ordered_product<F>(terms: &[(PauliString, f64)], n_qubits: usize, factor: F) -> Result<DMatrix<C64>>
where
    F: Fn(f64) -> (C64, C64),
{
    let dim = check_dim(n_qubits)?;
    let mut m = DMatrix::<C64>::identity(dim, dim);
    let mut scratch = m.clone();
    for (p, a) in terms.iter().rev() {
        let (c, s) = factor(*a);
        left_apply(&mut m, p, c, s, &mut scratch);
    }
    Ok(m)
}

/// `Π_k exp(−iΔτ a_k P_k)` for an explicit term sequence.
pub fn propagator_from_terms(terms: &[(PauliString, f64)], n_qubits: usize, dt: f64) -> Result<DMatrix<C64>> {
    ordered_product(terms, n_qubits, |a| {
        let th = dt * a;
        (C64::new(th.cos(), 0.0), C64::new(0.0, -th.sin()))
    })
}

/// First-order Trotter propagator `Ũ(Δτ)`.
pub fn trotter_propagator(h: &PauliSum, dt: f64, order: TermOrder) -> Result<DMatrix<C64>> {
    propagator_from_terms(&ordered_terms(h, order)?, h.n_qubits(), dt)
}

/// Dense matrix stored with a separate logarithmic scale:
/// the operator is `exp(log_scale) · matrix`.
#[derive(Clone, Debug)]
pub struct ScaledMatrix {
    pub matrix: DMatrix<C64>,
    pub log_scale: f64,
}

/// `Π_k exp(−Δβ a_k P_k)` for an explicit term sequence.
pub fn ite_from_terms(terms: &[(PauliString, f64)], n_qubits: usize, dbeta: f64) -> Result<ScaledMatrix> {
    let log_scale = terms.iter().map(|(_, a)| (dbeta * a).abs()).sum();
    // exp(−xP) = e^{|x|} [ (1 + e^{−2|x|})/2 − sgn(x) (1 − e^{−2|x|})/2 P ]
    let matrix = ordered_product(terms, n_qubits, |a| {
        let x = dbeta * a;
        let e = (-2.0 * x.abs()).exp();
        let c = 0.5 * (1.0 + e);
        let s = -x.signum() * 0.5 * (1.0 - e);
        (C64::new(c, 0.0), C64::new(s, 0.0))
    })?;
    Ok(ScaledMatrix { matrix, log_scale })
}

/// First-order imaginary-time operator `M̃(Δβ)`.
pub fn ite_operator(h: &PauliSum, dbeta: f64, order: TermOrder) -> Result<ScaledMatrix> {
    ite_from_terms(&ordered_terms(h, order)?, h.n_qubits(), dbeta)
}

/// Largest step keeping every eigenphase inside `(−π, π]`.
pub fn phase_cap(h: &PauliSum) -> f64 {
    PI / h.one_norm()
}

/// Eigenvalues of a general complex matrix via its Schur form.
pub fn general_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    m.clone()
        .schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Numerical("Schur decomposition did not yield eigenvalues".into()))
}

/// Per-state comparison of sorted Trotter and exact spectra.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseErrors {
    pub errors: Vec<f64>,
    /// True where the error is at least half the gap to a neighbouring level,
    /// so the sorted pairing may have swapped states.
    pub crossing: Vec<bool>,
}

/// `|λ̃_j − λ_j|` for the tracked indices of the sorted spectra, with
/// `λ̃ = −arg(eig Ũ)/Δτ`.
pub fn propagator_eigenphase_errors(
    h: &PauliSum,
    dt: f64,
    tracked: &[usize],
    order: TermOrder,
) -> Result<PhaseErrors> {
    let exact = diagonalize(h, None)?.values;
    eigenphase_errors_against(h, &exact, dt, tracked, order)
}

fn eigenphase_errors_against(
    h: &PauliSum,
    exact: &[f64],
    dt: f64,
    tracked: &[usize],
    order: TermOrder,
) -> Result<PhaseErrors> {
    let norm = h.one_norm();
    if !(dt > 0.0) || dt * norm >= PI {
        return Err(Error::PhaseAliasing { step: dt, norm });
    }
    if let Some(&j) = tracked.iter().find(|&&j| j >= exact.len()) {
        return Err(Error::InvalidArgument(format!(
            "state {j} out of range for {} levels",
            exact.len()
        )));
    }
    let u = trotter_propagator(h, dt, order)?;
    let mut approx: Vec<f64> = general_eigenvalues(&u)?
        .into_iter()
        .map(|e| -e.arg() / dt)
        .collect();
    approx.sort_by(f64::total_cmp);
    let mut errors = Vec::with_capacity(tracked.len());
    let mut crossing = Vec::with_capacity(tracked.len());
    for &j in tracked {
        let err = (approx[j] - exact[j]).abs();
        let gap = [j.checked_sub(1), Some(j + 1)]
            .into_iter()
            .flatten()
            .filter_map(|k| exact.get(k))
            .map(|&e| (e - exact[j]).abs())
            .fold(f64::INFINITY, f64::min);
        errors.push(err);
        crossing.push(err >= 0.5 * gap);
    }
    Ok(PhaseErrors { errors, crossing })
}

/// Power-iteration settings.
///
/// With `squaring`, update `r` applies `M^(2^r)` (renormalized), so the
/// vector converges to the same dominant eigenvector in logarithmically many
/// updates; `max_iter` bounds the number of vector updates either way.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iter: usize,
    pub squaring: bool,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            tol: 1e-10,
            max_iter: 100_000,
            squaring: true,
        }
    }
}

/// Outcome of [`power_iterate`].
#[derive(Clone, Debug)]
pub struct Dominant {
    pub vector: DVector<C64>,
    /// Rayleigh quotient `v†Mv` of the input matrix.
    pub eigenvalue: C64,
    pub iterations: usize,
}

fn normalize_phase(w: DVector<C64>, reference: &DVector<C64>) -> Result<DVector<C64>> {
    let nrm = w.norm();
    if !(nrm > 0.0 && nrm.is_finite()) {
        return Err(Error::Numerical(format!("power iteration vector norm {nrm}")));
    }
    let mut w = w / C64::new(nrm, 0.0);
    let ov = reference.dotc(&w);
    if ov.norm() > 0.0 {
        w *= (ov / ov.norm()).conj();
    }
    Ok(w)
}

/// Dominant eigenvector of `m`, starting from `start`.
pub fn power_iterate(m: &DMatrix<C64>, start: &DVector<C64>, opts: PowerIteration) -> Result<Dominant> {
    let mut v = start.normalize();
    let mut b = m.clone();
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let w = normalize_phase(&b * &v, &v)?;
        change = (&w - &v).norm();
        v = w;
        if change < opts.tol {
            let eigenvalue = v.dotc(&(m * &v));
            return Ok(Dominant {
                vector: v,
                eigenvalue,
                iterations: it,
            });
        }
        if opts.squaring {
            b = &b * &b;
            let s = b.camax();
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Numerical(format!("matrix power scale {s}")));
            }
            b /= C64::new(s, 0.0);
        }
    }
    let mut mags: Vec<f64> = general_eigenvalues(m)?.iter().map(|e| e.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    if mags.len() > 1 && mags[0] > 0.0 {
        let ratio = mags[1] / mags[0];
        if ratio > 1.0 - 1e-9 {
            return Err(Error::DegenerateDominant { ratio });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        change,
    })
}

/// State targeted by imaginary-time evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IteTarget {
    Ground,
    /// Eigenstate of `H` nearest `ζ`, via `(H − ζ)²`.
    Folded(f64),
}

#[derive(Clone, Debug)]
pub struct IteResult {
    /// `⟨v|H|v⟩` on the converged vector.
    pub energy: f64,
    /// Energy from the dominant eigenvalue of `M̃`; for folded targets the
    /// root branch is taken on the side of `energy`.
    pub eigenvalue_energy: f64,
    pub exact: f64,
    /// `|energy − exact|`.
    pub error: f64,
    /// Index (ascending) of the exact eigenstate that was targeted.
    pub exact_index: usize,
    pub iterations: usize,
    pub state: DVector<C64>,
}

/// Uniform superposition over `basis` on an `n`-qubit register.
pub fn uniform_state(n_qubits: usize, basis: Option<&[usize]>) -> DVector<C64> {
    let dim = 1usize << n_qubits;
    let mut v = DVector::zeros(dim);
    match basis {
        Some(b) => b.iter().for_each(|&i| v[i] = C64::new(1.0, 0.0)),
        None => v.fill(C64::new(1.0, 0.0)),
    }
    v.normalize()
}

/// Run ITE power iteration for `target` and compare with exact eigenvalues
/// restricted to `basis`.
pub fn ite_energy_error(
    h: &PauliSum,
    dbeta: f64,
    target: IteTarget,
    order: TermOrder,
    basis: Option<&[usize]>,
    opts: PowerIteration,
) -> Result<IteResult> {
    let exact_values = diagonalize(h, basis)?.values;
    ite_against(h, &exact_values, dbeta, target, order, basis, opts)
}

fn ite_against(
    h: &PauliSum,
    exact_values: &[f64],
    dbeta: f64,
    target: IteTarget,
    order: TermOrder,
    basis: Option<&[usize]>,
    opts: PowerIteration,
) -> Result<IteResult> {
    if !(dbeta > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {dbeta}")));
    }
    let (generator, zeta) = match target {
        IteTarget::Ground => (h.clone(), None),
        IteTarget::Folded(z) => (fold(h, z)?, Some(z)),
    };
    let m = ite_operator(&generator, dbeta, order)?;
    let start = uniform_state(h.n_qubits(), basis);
    let Dominant {
        vector: v,
        eigenvalue: lambda,
        iterations,
    } = power_iterate(&m.matrix, &start, opts)?;
    let energy = h.apply(&v)?.iter().zip(v.iter()).map(|(a, b)| (b.conj() * a).re).sum::<f64>();
    let gen_value = -(lambda.norm().ln() + m.log_scale) / dbeta;
    let (exact_index, eigenvalue_energy) = match zeta {
        None => (0, gen_value),
        Some(z) => {
            let idx = exact_values
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - z).abs().total_cmp(&(b.1 - z).abs()))
                .map(|(i, _)| i)
                .ok_or_else(|| Error::InvalidArgument("empty spectrum".into()))?;
            let root = gen_value.max(0.0).sqrt();
            (idx, if energy >= z { z + root } else { z - root })
        }
    };
    let exact = exact_values[exact_index];
    Ok(IteResult {
        energy,
        eigenvalue_energy,
        exact,
        error: (energy - exact).abs(),
        exact_index,
        iterations,
        state: v,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanMode {
    Real,
    Imag,
}

impl FromStr for ScanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(ScanMode::Real),
            "imag" => Ok(ScanMode::Imag),
            other => Err(Error::Unknown {
                kind: "scan mode",
                name: other.to_string(),
            }),
        }
    }
}

/// Errors over a grid of step sizes.
#[derive(Clone, Debug)]
pub struct TrotterScan {
    pub mode: ScanMode,
    pub order: TermOrder,
    pub steps: Vec<f64>,
    pub states: Vec<usize>,
    /// `errors[i][k]` is the error of `states[k]` at `steps[i]` (cm⁻¹).
    pub errors: Vec<Vec<f64>>,
    pub crossing: Vec<Vec<bool>>,
    /// Steps removed because they exceeded the phase cap.
    pub cap: Option<f64>,
}

/// `n` geometrically spaced values on `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let r = (hi / lo).ln() / (n - 1) as f64;
            (0..n).map(|i| lo * (r * i as f64).exp()).collect()
        }
    }
}

/// Real-time scan; steps at or above the phase cap are dropped.
pub fn scan_real(h: &PauliSum, steps: &[f64], states: &[usize], order: TermOrder) -> Result<TrotterScan> {
    let cap = phase_cap(h);
    let kept: Vec<f64> = steps.iter().copied().filter(|&s| s > 0.0 && s < cap).collect();
    let dropped = kept.len() < steps.len();
    let exact = diagonalize(h, None)?.values;
    let rows: Vec<PhaseErrors> = kept
        .par_iter()
        .map(|&dt| eigenphase_errors_against(h, &exact, dt, states, order))
        .collect::<Result<_>>()?;
    Ok(TrotterScan {
        mode: ScanMode::Real,
        order,
        steps: kept,
        states: states.to_vec(),
        errors: rows.iter().map(|r| r.errors.clone()).collect(),
        crossing: rows.into_iter().map(|r| r.crossing).collect(),
        cap: dropped.then_some(cap),
    })
}

/// Imaginary-time scan. State 0 uses `H` directly; state `j > 0` uses the
/// folded operator at `ζ = λ_j` with step `Δβ / ‖H‖₁`.
pub fn scan_imag(
    h: &PauliSum,
    steps: &[f64],
    states: &[usize],
    order: TermOrder,
    basis: Option<&[usize]>,
    opts: PowerIteration,
) -> Result<TrotterScan> {
    let exact = diagonalize(h, basis)?.values;
    if let Some(&j) = states.iter().find(|&&j| j >= exact.len()) {
        return Err(Error::InvalidArgument(format!(
            "state {j} out of range for {} levels",
            exact.len()
        )));
    }
    let fold_scale = 1.0 / h.one_norm();
    let rows: Vec<Vec<f64>> = steps
        .par_iter()
        .map(|&db| {
            states
                .iter()
                .map(|&j| {
                    let (target, step) = if j == 0 {
                        (IteTarget::Ground, db)
                    } else {
                        (IteTarget::Folded(exact[j]), db * fold_scale)
                    };
                    ite_against(h, &exact, step, target, order, basis, opts).map(|r| r.error)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(TrotterScan {
        mode: ScanMode::Imag,
        order,
        steps: steps.to_vec(),
        states: states.to_vec(),
        crossing: vec![vec![false; states.len()]; rows.len()],
        errors: rows,
        cap: None,
    })
}

impl TrotterScan {
    /// `step,state,error_cm1`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,state,error_cm1\n");
        for (i, step) in self.steps.iter().enumerate() {
            for (k, state) in self.states.iter().enumerate() {
                s.push_str(&format!("{step:.9e},{state},{:.9e}\n", self.errors[i][k]));
            }
        }
        s
    }

    /// Least-squares slope of `log error` against `log step` for one state,
    /// over steps inside `[lo, hi]` with nonzero error.
    pub fn loglog_slope(&self, state_pos: usize, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .steps
            .iter()
            .zip(&self.errors)
            .filter(|(s, e)| **s >= lo && **s <= hi && e[state_pos] > 0.0)
            .map(|(s, e)| (s.ln(), e[state_pos].ln()))
            .collect();
        loglog_fit(&pts)
    }
}

/// Slope of a least-squares line through `(x, y)` points.
pub fn loglog_fit(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(terms: &[(&str, f64)]) -> PauliSum {
        let t: Vec<(&str, C64)> = terms.iter().map(|&(s, c)| (s, c.into())).collect();
        PauliSum::parse_terms(&t).unwrap()
    }

    #[test]
    fn single_term_is_exact() {
        let h = sum(&[("Z", 3.0)]);
        let u = trotter_propagator(&h, 0.4, TermOrder::Lex).unwrap();
        let ph = C64::new(0.0, -1.2).exp();
        assert!((u[(0, 0)] - ph).norm() < 1e-14);
        assert!((u[(1, 1)] - ph.conj()).norm() < 1e-14);
    }

    #[test]
    fn propagator_is_unitary() {
        let h = sum(&[("XZ", 0.7), ("YY", -1.3), ("ZI", 0.4), ("IX", 2.0)]);
        let u = trotter_propagator(&h, 0.3, TermOrder::MagnitudeDesc).unwrap();
        let err = (u.adjoint() * &u - DMatrix::identity(4, 4)).camax();
        assert!(err < 1e-12);
    }

    #[test]
    fn ite_single_term() {
        let h = sum(&[("X", 2.0)]);
        let m = ite_operator(&h, 0.5, TermOrder::Lex).unwrap();
        let full = &m.matrix * C64::new(m.log_scale.exp(), 0.0);
        let (c, s) = (1.0f64.cosh(), 1.0f64.sinh());
        assert!((full[(0, 0)].re - c).abs() < 1e-12);
        assert!((full[(0, 1)].re + s).abs() < 1e-12);
    }

    #[test]
    fn ite_large_step_stays_finite() {
        let h = sum(&[("Z", 1e4), ("X", -3e3)]);
        let m = ite_operator(&h, 1.0, TermOrder::Lex).unwrap();
        assert!(m.matrix.iter().all(|c| c.re.is_finite()));
        assert!((m.log_scale - 1.3e4).abs() < 1e-6);
    }

    #[test]
    fn aliasing_is_reported() {
        let h = sum(&[("Z", 1.0), ("X", 1.0)]);
        let e = propagator_eigenphase_errors(&h, 2.0, &[0], TermOrder::Lex);
        assert!(matches!(e, Err(Error::PhaseAliasing { .. })));
    }

    #[test]
    fn commuting_terms_have_no_error() {
        let h = sum(&[("ZI", 1.0), ("IZ", 0.3), ("ZZ", -0.7)]);
        let e = propagator_eigenphase_errors(&h, 0.5, &[0, 1, 2, 3], TermOrder::Lex).unwrap();
        assert!(e.errors.iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn order_parsing() {
        assert_eq!("lex".parse::<TermOrder>().unwrap(), TermOrder::Lex);
        assert_eq!(
            "seeded-shuffle:7".parse::<TermOrder>().unwrap(),
            TermOrder::SeededShuffle(7)
        );
        assert!("random".parse::<TermOrder>().is_err());
        assert_eq!(TermOrder::SeededShuffle(3).to_string(), "seeded-shuffle:3");
    }

    #[test]
    fn shuffle_is_reproducible() {
        let h = sum(&[("XI", 1.0), ("IX", 2.0), ("ZZ", 3.0), ("YY", 4.0)]);
        let a = ordered_terms(&h, TermOrder::SeededShuffle(11)).unwrap();
        let b = ordered_terms(&h, TermOrder::SeededShuffle(11)).unwrap();
        assert_eq!(a, b);
        let m = ordered_terms(&h, TermOrder::MagnitudeDesc).unwrap();
        assert_eq!(m[0].1, 4.0);
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(1e-4, 1.0, 5);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!((g[4] - 1.0).abs() < 1e-12);
        assert!((g[1] / g[0] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((loglog_fit(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_fit(&pts[..1]).is_none());
    }
}
