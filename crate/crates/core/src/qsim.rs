//! Dense statevector simulation of the measurement protocols.
//!
//! Every protocol quantity is a probability of the all-zero outcome after a
//! compute–uncompute circuit `U_i† W U_j |0⟩`, where `U_i|0⟩ = |ψ_i⟩` is a
//! Householder state-preparation unitary and `W` is built from Pauli
//! rotations. Amplitudes are exact; shot sampling is opt-in.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, C64};
use crate::spectra::diagonalize;

/// Allowed deviation of a state norm from one.
pub const NORM_TOL: f64 = 1e-10;

/// Block-encoding success probabilities at or below this are failures.
pub const SUCCESS_THRESHOLD: f64 = 1e-20;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

fn register_dim(n_qubits: usize) -> Result<usize> {
    PauliSum::zero(n_qubits).dense_dim()
}

/// Normalized amplitudes over `2^n` computational states, qubit 0 least
/// significant.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: DVector<C64>,
}

impl StateVector {
    /// Wrap amplitudes whose norm is already one.
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "state length {len} is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        register_dim(n_qubits)?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("state norm {norm} differs from 1")));
        }
        Ok(StateVector { n_qubits, amps })
    }

    /// Normalize and wrap.
    pub fn normalized(amps: DVector<C64>) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical(format!("cannot normalize vector of norm {norm}")));
        }
        Self::new(amps / C64::new(norm, 0.0))
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = register_dim(n_qubits)?;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = ONE;
        Ok(StateVector { n_qubits, amps })
    }

    /// Haar-random state from complex Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        let dim = register_dim(n_qubits)?;
        let amps = DVector::from_fn(dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Self::normalized(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        same_dim(self, other)?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn same_dim(a: &StateVector, b: &StateVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

fn check_string(p: &PauliString, n_qubits: usize) -> Result<()> {
    if p.n_qubits() != n_qubits {
        return Err(Error::QubitMismatch {
            left: n_qubits,
            right: p.n_qubits(),
        });
    }
    Ok(())
}

/// `P v`.
pub fn apply_string(p: &PauliString, v: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::zeros(v.len());
    for b in 0..v.len() {
        let (r, ph) = p.act(b);
        out[r] = ph * v[b];
    }
    out
}

/// `exp(iθP) v = cos θ v + i sin θ P v`.
pub fn apply_rotation(p: &PauliString, theta: f64, v: &DVector<C64>) -> DVector<C64> {
    let pv = apply_string(p, v);
    v * C64::new(theta.cos(), 0.0) + pv * C64::new(0.0, theta.sin())
}

/// Dense `exp(iθP)`.
pub fn rotation_matrix(p: &PauliString, theta: f64) -> Result<DMatrix<C64>> {
    let dim = register_dim(p.n_qubits())?;
    let mut m = DMatrix::identity(dim, dim) * C64::new(theta.cos(), 0.0);
    for b in 0..dim {
        let (r, ph) = p.act(b);
        m[(r, b)] += C64::new(0.0, theta.sin()) * ph;
    }
    Ok(m)
}

/// Householder state preparation `U = e^{iθ}(I − 2ww†/w†w)` with `U|0⟩ = ψ`.
struct Preparation {
    w: DVector<C64>,
    w_norm_sqr: f64,
    phase: C64,
}

impl Preparation {
    fn new(psi: &StateVector) -> Self {
        let a = psi.amps[0];
        let phase = if a.norm() > 0.0 { a / a.norm() } else { ONE };
        let mut w = -(&psi.amps * phase.conj());
        w[0] += ONE;
        let w_norm_sqr = w.norm_squared();
        Preparation { w, w_norm_sqr, phase }
    }

    fn reflect(&self, v: &DVector<C64>) -> DVector<C64> {
        if self.w_norm_sqr < 1e-30 {
            return v.clone();
        }
        let c = self.w.dotc(v) * C64::new(2.0 / self.w_norm_sqr, 0.0);
        v - &self.w * c
    }

    fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        self.reflect(v) * self.phase
    }

    fn apply_adjoint(&self, v: &DVector<C64>) -> DVector<C64> {
        self.reflect(v) * self.phase.conj()
    }
}

/// Dense unitary with `U|0…0⟩ = ψ`.
pub fn preparation_unitary(psi: &StateVector) -> DMatrix<C64> {
    let prep = Preparation::new(psi);
    let dim = psi.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let mut e = DVector::zeros(dim);
        e[b] = ONE;
        m.set_column(b, &prep.apply(&e));
    }
    m
}

/// `|⟨0|U_i† W U_j|0⟩|²` where `w` maps the prepared state.
fn zero_probability<F>(psi_i: &StateVector, psi_j: &StateVector, w: F) -> Result<f64>
where
    F: FnOnce(DVector<C64>) -> DVector<C64>,
{
    same_dim(psi_i, psi_j)?;
    let mut zero = DVector::zeros(psi_j.dim());
    zero[0] = ONE;
    let prepared = Preparation::new(psi_j).apply(&zero);
    let out = Preparation::new(psi_i).apply_adjoint(&w(prepared));
    Ok(out[0].norm_sqr())
}

/// `|⟨ψ_i|ψ_j⟩|²` via compute–uncompute.
pub fn overlap_squared(psi_i: &StateVector, psi_j: &StateVector) -> Result<f64> {
    zero_probability(psi_i, psi_j, |v| v)
}

/// `|⟨ψ_i|exp(iπ/2 R)|ψ_j⟩|² = |⟨ψ_i|R|ψ_j⟩|²` via compute–uncompute.
pub fn pauli_rotation_overlap(psi_i: &StateVector, psi_j: &StateVector, r: &PauliString) -> Result<f64> {
    check_string(r, psi_j.n_qubits())?;
    zero_probability(psi_i, psi_j, |v| apply_rotation(r, FRAC_PI_2, &v))
}

/// Fraction of `shots` all-zero outcomes drawn for probability `p`.
pub fn sample_fraction(p: f64, shots: u64, seed: u64) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be positive".into()));
    }
    let dist = Binomial::new(shots, p.clamp(0.0, 1.0))
        .map_err(|e| Error::InvalidArgument(format!("binomial sampling: {e}")))?;
    let hits = dist.sample(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(hits as f64 / shots as f64)
}

/// `exp(s·iπ/4 R_k) exp(s·iπ/4 R_l)` for `s = ±1`.
pub fn v_unitary(rk: &PauliString, rl: &PauliString, sign: f64) -> Result<DMatrix<C64>> {
    Ok(rotation_matrix(rk, sign * FRAC_PI_4)? * rotation_matrix(rl, sign * FRAC_PI_4)?)
}

/// Reconstructed transition amplitude and the number of overlap
/// primitives spent on it.
#[derive(Clone, Debug, PartialEq)]
pub struct IbeEstimate {
    pub value: f64,
    pub primitives: usize,
    /// `b_k² |⟨i|R_k|j⟩|²` per term.
    pub diagonal: Vec<f64>,
    /// `(k, l, b_k b_l · 2Re(r_k r_l*))` for `k < l`.
    pub cross: Vec<(usize, usize, f64)>,
}

fn real_terms(mu: &PauliSum, n_qubits: usize) -> Result<Vec<(PauliString, f64)>> {
    if mu.n_qubits() != n_qubits {
        return Err(Error::QubitMismatch {
            left: n_qubits,
            right: mu.n_qubits(),
        });
    }
    let scale = mu.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max).max(1.0);
    let dev = mu.max_imag();
    if dev > 1e-12 * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(mu.iter().map(|(p, c)| (*p, c.re)).collect())
}

/// Optional finite-shot estimation of every overlap primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shots {
    pub shots: u64,
    pub seed: u64,
}

/// Turns an exact primitive probability into the reported one; `id` is a
/// fixed label of the primitive so sampled runs are reproducible.
struct Measure(Option<Shots>);

impl Measure {
    fn read(&self, p: f64, id: u64) -> Result<f64> {
        match self.0 {
            None => Ok(p),
            Some(s) => sample_fraction(p, s.shots, s.seed.wrapping_add(id.wrapping_mul(0x9E37_79B9_7F4A_7C15))),
        }
    }
}

/// `2Re(r_k r_l*)` from overlap primitives, where `r = ⟨i|R|j⟩`.
///
/// `2|V₊|² + 2|V₋|² = |S − r_kl|² + |r_k|² + |r_l|² + 2Re(r_k r_l*)` with
/// `S = ⟨i|j⟩` and `r_kl = ⟨i|R_k R_l|j⟩`. For anticommuting strings
/// `R_k R_l = ±iQ` and `|S − r_kl|² = 2|⟨i|exp(∓iπ/4 Q)|j⟩|²`; for commuting
/// strings `S = 0` is required and `|S − r_kl|² = |⟨i|Q|j⟩|²`.
fn cross_term(
    states: (&StateVector, &StateVector),
    (rk, rl): (&PauliString, &PauliString),
    (dk, dl): (f64, f64),
    overlap: f64,
    measure: &Measure,
    id: u64,
) -> Result<f64> {
    let (psi_i, psi_j) = states;
    let vp = zero_probability(psi_i, psi_j, |v| {
        apply_rotation(rk, FRAC_PI_4, &apply_rotation(rl, FRAC_PI_4, &v))
    })?;
    let vm = zero_probability(psi_i, psi_j, |v| {
        apply_rotation(rk, -FRAC_PI_4, &apply_rotation(rl, -FRAC_PI_4, &v))
    })?;
    let (phase, q) = rk.mul(rl);
    let s_minus = if rk.commutes_with(rl) {
        if overlap > 1e-20 {
            return Err(Error::ProtocolPrecondition(format!(
                "commuting strings {rk} and {rl} need orthogonal states, |<i|j>|^2 = {overlap:.3e}"
            )));
        }
        measure.read(pauli_rotation_overlap(psi_i, psi_j, &q)?, id + 2)?
    } else {
        // phase = ±i, so S − r_kl = ⟨i|(I ∓ iQ)|j⟩ = √2 ⟨i|exp(∓iπ/4 Q)|j⟩
        let theta = -phase.im.signum() * FRAC_PI_4;
        let p = zero_probability(psi_i, psi_j, |v| apply_rotation(&q, theta, &v))?;
        2.0 * measure.read(p, id + 2)?
    };
    let vp = measure.read(vp, id)?;
    let vm = measure.read(vm, id + 1)?;
    Ok(2.0 * vp + 2.0 * vm - s_minus - dk - dl)
}

/// `|⟨ψ_i|μ|ψ_j⟩|²` reconstructed from overlap-squared primitives only.
///
/// Term pairs of commuting strings need `⟨ψ_i|ψ_j⟩ = 0`.
pub fn ibe_transition_amplitude(psi_i: &StateVector, psi_j: &StateVector, mu: &PauliSum) -> Result<IbeEstimate> {
    ibe_with(psi_i, psi_j, mu, &Measure(None))
}

/// As [`ibe_transition_amplitude`], with each primitive estimated from
/// seeded shots.
pub fn ibe_transition_amplitude_sampled(
    psi_i: &StateVector,
    psi_j: &StateVector,
    mu: &PauliSum,
    shots: Shots,
) -> Result<IbeEstimate> {
    ibe_with(psi_i, psi_j, mu, &Measure(Some(shots)))
}

fn ibe_with(psi_i: &StateVector, psi_j: &StateVector, mu: &PauliSum, measure: &Measure) -> Result<IbeEstimate> {
    same_dim(psi_i, psi_j)?;
    let terms = real_terms(mu, psi_i.n_qubits())?;
    let overlap = measure.read(overlap_squared(psi_i, psi_j)?, 0)?;
    let raw: Vec<f64> = terms
        .par_iter()
        .enumerate()
        .map(|(k, (r, _))| measure.read(pauli_rotation_overlap(psi_i, psi_j, r)?, 1 + k as u64))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..terms.len())
        .flat_map(|k| (k + 1..terms.len()).map(move |l| (k, l)))
        .collect();
    let base = 1 + terms.len() as u64;
    let cross_raw: Vec<f64> = pairs
        .par_iter()
        .enumerate()
        .map(|(n, &(k, l))| {
            cross_term(
                (psi_i, psi_j),
                (&terms[k].0, &terms[l].0),
                (raw[k], raw[l]),
                overlap,
                measure,
                base + 3 * n as u64,
            )
        })
        .collect::<Result<_>>()?;
    let diagonal: Vec<f64> = terms.iter().zip(&raw).map(|((_, b), p)| b * b * p).collect();
    let cross: Vec<(usize, usize, f64)> = pairs
        .iter()
        .zip(&cross_raw)
        .map(|(&(k, l), x)| (k, l, terms[k].1 * terms[l].1 * x))
        .collect();
    let value = diagonal.iter().sum::<f64>() + cross.iter().map(|c| c.2).sum::<f64>();
    Ok(IbeEstimate {
        value,
        primitives: 1 + raw.len() + 3 * cross_raw.len(),
        diagonal,
        cross,
    })
}

/// `|⟨ψ_i|μ|ψ_j⟩|²` from dense algebra.
pub fn direct_transition_amplitude(psi_i: &StateVector, psi_j: &StateVector, mu: &PauliSum) -> Result<f64> {
    same_dim(psi_i, psi_j)?;
    let mv = mu.apply(psi_j.amplitudes())?;
    Ok(psi_i.amplitudes().dotc(&mv).norm_sqr())
}

/// Reconstruction checked term by term against dense algebra; the first
/// disagreeing diagonal (`k = l`) or cross term is reported.
pub fn ibe_transition_amplitude_checked(
    psi_i: &StateVector,
    psi_j: &StateVector,
    mu: &PauliSum,
    tol: f64,
) -> Result<IbeEstimate> {
    let est = ibe_transition_amplitude(psi_i, psi_j, mu)?;
    let terms = real_terms(mu, psi_i.n_qubits())?;
    let r: Vec<C64> = terms
        .iter()
        .map(|(p, _)| psi_i.amplitudes().dotc(&apply_string(p, psi_j.amplitudes())))
        .collect();
    for (k, (_, b)) in terms.iter().enumerate() {
        let direct = b * b * r[k].norm_sqr();
        if (est.diagonal[k] - direct).abs() > tol {
            return Err(Error::ProtocolMismatch {
                k,
                l: k,
                reconstructed: est.diagonal[k],
                direct,
            });
        }
    }
    for &(k, l, x) in &est.cross {
        let direct = terms[k].1 * terms[l].1 * 2.0 * (r[k] * r[l].conj()).re;
        if (x - direct).abs() > tol {
            return Err(Error::ProtocolMismatch {
                k,
                l,
                reconstructed: x,
                direct,
            });
        }
    }
    Ok(est)
}

/// Bin profile used to turn eigenphases into a histogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpeKernel {
    /// All weight in the nearest bin.
    Ideal,
    /// Textbook leakage `|sin(2^N πδ) / (2^N sin πδ)|²`.
    Exact,
}

impl FromStr for QpeKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(QpeKernel::Ideal),
            "exact" => Ok(QpeKernel::Exact),
            other => Err(Error::Unknown {
                kind: "kernel",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for QpeKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QpeKernel::Ideal => "ideal",
            QpeKernel::Exact => "exact",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseHistogram {
    pub n_bits: usize,
    /// Energy-to-phase scale: eigenvalue `λ` has phase `tλ`.
    pub t: f64,
    pub auto_scaled: bool,
    pub kernel: QpeKernel,
    pub probabilities: Vec<f64>,
}

impl PhaseHistogram {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Phase of bin `m`.
    pub fn phase(&self, m: usize) -> f64 {
        m as f64 / self.probabilities.len() as f64
    }

    /// Energy corresponding to bin `m`.
    pub fn energy(&self, m: usize) -> f64 {
        self.phase(m) / self.t
    }

    /// `bin,phase,probability`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin,phase,probability\n");
        for (m, p) in self.probabilities.iter().enumerate() {
            s.push_str(&format!("{m},{:.12},{p:.12e}\n", self.phase(m)));
        }
        s
    }
}

/// Largest bit count accepted for the phase register.
pub const MAX_PHASE_BITS: usize = 24;

/// `t = (2^N − 1) / (2^N λ_max)`, placing the top eigenvalue in the last bin.
pub fn auto_time_scale(values: &[f64], n_bits: usize) -> Result<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo < 0.0 {
        return Err(Error::PhaseOutOfRange(format!(
            "lowest eigenvalue {lo} is negative; shift the Hamiltonian"
        )));
    }
    if !(hi > 0.0) {
        return Err(Error::PhaseOutOfRange("spectrum has no positive eigenvalue".into()));
    }
    let bins = (1u64 << n_bits) as f64;
    Ok((bins - 1.0) / (bins * hi))
}

fn kernel_weight(n_bits: usize, delta: f64) -> f64 {
    let bins = (1u64 << n_bits) as f64;
    let den = bins * (PI * delta).sin();
    if den.abs() < 1e-15 {
        return 1.0;
    }
    ((bins * PI * delta).sin() / den).powi(2)
}

/// Histogram for eigenvalues `values` carrying weights `|c_i|²`.
pub fn phase_histogram(
    values: &[f64],
    weights: &[f64],
    n_bits: usize,
    t: Option<f64>,
    kernel: QpeKernel,
) -> Result<PhaseHistogram> {
    if n_bits == 0 || n_bits > MAX_PHASE_BITS {
        return Err(Error::InvalidArgument(format!(
            "phase register needs 1..={MAX_PHASE_BITS} bits, got {n_bits}"
        )));
    }
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            got: weights.len(),
        });
    }
    let (t, auto_scaled) = match t {
        Some(t) => (t, false),
        None => (auto_time_scale(values, n_bits)?, true),
    };
    let nb = 1usize << n_bits;
    let phases: Vec<f64> = values.iter().map(|v| t * v).collect();
    if let Some(p) = phases.iter().find(|p| !(0.0..1.0).contains(*p)) {
        return Err(Error::PhaseOutOfRange(format!("phase {p} outside [0, 1) at t = {t}")));
    }
    let mut probs = vec![0.0; nb];
    for (&phi, &w) in phases.iter().zip(weights) {
        match kernel {
            QpeKernel::Ideal => {
                let m = (phi * nb as f64).round() as usize % nb;
                probs[m] += w;
            }
            QpeKernel::Exact => {
                for (m, p) in probs.iter_mut().enumerate() {
                    *p += w * kernel_weight(n_bits, phi - m as f64 / nb as f64);
                }
            }
        }
    }
    Ok(PhaseHistogram {
        n_bits,
        t,
        auto_scaled,
        kernel,
        probabilities: probs,
    })
}

/// Phase-estimation histogram of `h` for the initial state `eta`.
///
/// With `basis`, `h` is diagonalized on that subspace and `eta` must lie in
/// it.
pub fn qpe_histogram(
    h: &PauliSum,
    eta: &StateVector,
    n_bits: usize,
    t: Option<f64>,
    kernel: QpeKernel,
    basis: Option<&[usize]>,
) -> Result<PhaseHistogram> {
    if h.n_qubits() != eta.n_qubits() {
        return Err(Error::QubitMismatch {
            left: h.n_qubits(),
            right: eta.n_qubits(),
        });
    }
    let sol = diagonalize(h, basis)?;
    let weights: Vec<f64> = (0..sol.len())
        .map(|i| sol.full_state(i).dotc(eta.amplitudes()).norm_sqr())
        .collect();
    let covered: f64 = weights.iter().sum();
    if (covered - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "initial state has weight {:.3e} outside the diagonalized subspace",
            1.0 - covered
        )));
    }
    phase_histogram(&sol.values, &weights, n_bits, t, kernel)
}

/// Dense `exp(2πi t H)`.
pub fn evolution_unitary(h: &PauliSum, t: f64) -> Result<DMatrix<C64>> {
    h.require_hermitian()?;
    Ok(hermitian_function(&h.to_dense()?, |x| (I * (2.0 * PI * t * x)).exp()))
}

fn hermitian_function<F: Fn(f64) -> C64>(m: &DMatrix<C64>, f: F) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(m.clone());
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    v * d * v.adjoint()
}

/// Dense `exp(−iγ Y ⊗ μ)` with the ancilla as the most significant qubit:
/// `[[cos γμ, −sin γμ], [sin γμ, cos γμ]]`.
pub fn block_encoding_unitary(mu: &PauliSum, gamma: f64) -> Result<DMatrix<C64>> {
    let n = mu.n_qubits();
    let y = PauliString::single(n + 1, n, Pauli::Y);
    let gen = PauliSum::from_string(y, 1.0).multiply(&mu.embed(0, n + 1))?;
    gen.require_hermitian()?;
    Ok(hermitian_function(&gen.to_dense()?, |x| (-I * (gamma * x)).exp()))
}

/// Outcome of one block-encoding application.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEncodingOutcome {
    /// `⟨ψ|sin²(γμ)|ψ⟩`.
    pub probability: f64,
    /// Normalized `sin(γμ)|ψ⟩`; `None` when the probability is at or below
    /// [`SUCCESS_THRESHOLD`].
    pub state: Option<StateVector>,
}

impl BlockEncodingOutcome {
    pub fn into_state(self) -> Result<StateVector> {
        self.state.ok_or(Error::LowSuccessProbability(self.probability))
    }
}

/// Apply `exp(−iγ Y_anc ⊗ μ)` to `|0⟩_anc|ψ⟩` and post-select the ancilla
/// branch carrying `sin(γμ)|ψ⟩`.
pub fn dipole_block_encoding(mu: &PauliSum, gamma: f64, psi: &StateVector) -> Result<BlockEncodingOutcome> {
    if mu.n_qubits() != psi.n_qubits() {
        return Err(Error::QubitMismatch {
            left: mu.n_qubits(),
            right: psi.n_qubits(),
        });
    }
    mu.require_hermitian()?;
    let s = hermitian_function(&mu.to_dense()?, |x| C64::new((gamma * x).sin(), 0.0));
    let branch = s * psi.amplitudes();
    let probability = branch.norm_squared();
    let state = if probability > SUCCESS_THRESHOLD {
        Some(StateVector::normalized(branch)?)
    } else {
        None
    };
    Ok(BlockEncodingOutcome { probability, state })
}

/// Normalized `μ|ψ⟩`.
pub fn apply_normalized(mu: &PauliSum, psi: &StateVector) -> Result<StateVector> {
    StateVector::normalized(mu.apply(psi.amplitudes())?)
}

/// `max |U†U − I|`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n)).camax()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(a: &[(f64, f64)]) -> StateVector {
        StateVector::normalized(DVector::from_iterator(a.len(), a.iter().map(|&(r, i)| C64::new(r, i)))).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn norm_is_checked() {
        let bad = DVector::from_element(4, C64::new(0.6, 0.0));
        assert!(StateVector::new(bad).is_err());
        assert!(StateVector::new(DVector::from_element(3, ONE)).is_err());
    }

    #[test]
    fn preparation_maps_zero_to_state() {
        let psi = StateVector::random(3, &mut rng()).unwrap();
        let u = preparation_unitary(&psi);
        assert!(unitarity_defect(&u) < 1e-12);
        assert!((u.column(0) - psi.amplitudes()).norm() < 1e-12);
        let basis = StateVector::basis(3, 0).unwrap();
        assert!(unitarity_defect(&preparation_unitary(&basis)) < 1e-12);
    }

    #[test]
    fn trivial_overlaps() {
        let a = StateVector::basis(2, 1).unwrap();
        let b = StateVector::basis(2, 2).unwrap();
        assert!((overlap_squared(&a, &a).unwrap() - 1.0).abs() < 1e-14);
        assert!(overlap_squared(&a, &b).unwrap().abs() < 1e-14);
        let z0 = PauliString::from_letters("ZI").unwrap();
        let zero = StateVector::basis(2, 0).unwrap();
        assert!((pauli_rotation_overlap(&zero, &zero, &z0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let a = StateVector::basis(2, 0).unwrap();
        let b = StateVector::basis(3, 0).unwrap();
        assert!(matches!(overlap_squared(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sampled_fraction_is_reproducible() {
        let a = sample_fraction(0.3, 10_000, 9).unwrap();
        assert_eq!(a, sample_fraction(0.3, 10_000, 9).unwrap());
        assert!((a - 0.3).abs() < 0.03);
    }

    #[test]
    fn single_string_amplitude() {
        let mut r = rng();
        let a = StateVector::random(2, &mut r).unwrap();
        let b = StateVector::random(2, &mut r).unwrap();
        let mu = PauliSum::parse_terms(&[("XY", C64::new(-0.7, 0.0))]).unwrap();
        let est = ibe_transition_amplitude(&a, &b, &mu).unwrap();
        let direct = direct_transition_amplitude(&a, &b, &mu).unwrap();
        assert!((est.value - direct).abs() < 1e-12);
        assert_eq!(est.primitives, 2);
    }

    #[test]
    fn commuting_terms_need_orthogonal_states() {
        let a = sv(&[(1.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let mu = PauliSum::parse_terms(&[("XI", ONE), ("IX", ONE)]).unwrap();
        assert!(matches!(
            ibe_transition_amplitude(&a, &a, &mu),
            Err(Error::ProtocolPrecondition(_))
        ));
    }

    #[test]
    fn complex_coefficients_rejected() {
        let a = StateVector::basis(1, 0).unwrap();
        let mu = PauliSum::parse_terms(&[("X", C64::new(1.0, 0.5))]).unwrap();
        assert!(matches!(
            ibe_transition_amplitude(&a, &a, &mu),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn v_unitaries_are_unitary() {
        let rk = PauliString::from_letters("XZY").unwrap();
        let rl = PauliString::from_letters("ZZI").unwrap();
        for s in [1.0, -1.0] {
            assert!(unitarity_defect(&v_unitary(&rk, &rl, s).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn mid_bin_leakage() {
        let n = 10;
        let nb = (1u64 << n) as f64;
        let phi = (17.0 + 0.5) / nb;
        let h = phase_histogram(&[phi], &[1.0], n, Some(1.0), QpeKernel::Exact).unwrap();
        let peak = h.probabilities.iter().copied().fold(0.0, f64::max);
        assert!((peak - 4.0 / (PI * PI)).abs() < 1e-5);
        assert!((h.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ideal_bins() {
        let h = phase_histogram(&[1.0, 3.0], &[0.25, 0.75], 4, None, QpeKernel::Ideal).unwrap();
        assert!(h.auto_scaled);
        assert_eq!(h.probabilities[15], 0.75);
        assert_eq!(h.probabilities[5], 0.25);
    }

    #[test]
    fn negative_spectrum_rejected() {
        let e = phase_histogram(&[-1.0, 3.0], &[0.5, 0.5], 4, None, QpeKernel::Ideal);
        assert!(matches!(e, Err(Error::PhaseOutOfRange(_))));
        let e = phase_histogram(&[1.0], &[1.0], 4, Some(1.5), QpeKernel::Ideal);
        assert!(matches!(e, Err(Error::PhaseOutOfRange(_))));
    }

    #[test]
    fn block_encoding_trivial_cases() {
        let psi = StateVector::random(2, &mut rng()).unwrap();
        let id = PauliSum::identity(2, 1.0);
        let out = dipole_block_encoding(&id, FRAC_PI_2, &psi).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-12);
        let st = out.state.unwrap();
        assert!((st.inner(&psi).unwrap().norm() - 1.0).abs() < 1e-12);
        let none = dipole_block_encoding(&id, 0.0, &psi).unwrap();
        assert_eq!(none.probability, 0.0);
        assert!(matches!(none.into_state(), Err(Error::LowSuccessProbability(_))));
    }

    #[test]
    fn block_unitary_blocks() {
        let mu = PauliSum::parse_terms(&[("X", C64::new(0.8, 0.0)), ("Z", C64::new(0.3, 0.0))]).unwrap();
        let u = block_encoding_unitary(&mu, 0.7).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
        let psi = sv(&[(0.6, 0.0), (0.0, 0.8)]);
        let mut full = DVector::zeros(4);
        full[0] = psi.amplitudes()[0];
        full[1] = psi.amplitudes()[1];
        let out = u * full;
        let enc = dipole_block_encoding(&mu, 0.7, &psi).unwrap();
        let branch = DVector::from_vec(vec![out[2], out[3]]);
        assert!((branch.norm_squared() - enc.probability).abs() < 1e-12);
        let st = enc.state.unwrap();
        assert!((st.amplitudes().dotc(&branch).norm() - branch.norm()).abs() < 1e-12);
    }
}
