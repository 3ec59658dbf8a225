//! Exact diagonalization, infrared intensities and line broadening.
//!
//! Intensities follow `I_j = Σ_α |⟨ψ₀|μ^(α)|ψ_j⟩|²` with energies measured
//! from the ground state. Encodings that leave unused bit patterns (unary, or
//! binary codes with `d` not a power of two) are diagonalized on the codeword
//! subspace only.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::boson::Encoding;
use crate::error::{Error, Result};
use crate::pauli::{PauliSum, C64};
use crate::vibham::{build_dipole, build_hamiltonian, Axis, Dataset};

/// Eigenvalues closer than this (cm⁻¹) are merged into one peak.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Default Gaussian standard deviation (cm⁻¹).
pub const DEFAULT_SIGMA: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct EigenSolution {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are eigenvectors in the coordinates of `basis`.
    pub vectors: DMatrix<C64>,
    /// Computational basis indices spanned by the solution.
    pub basis: Vec<usize>,
    pub n_qubits: usize,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvector `j` on the full `2^n` register.
    pub fn full_state(&self, j: usize) -> DVector<C64> {
        let mut v = DVector::zeros(1 << self.n_qubits);
        for (k, &b) in self.basis.iter().enumerate() {
            v[b] = self.vectors[(k, j)];
        }
        v
    }

    /// Matrix of `op` in the subspace spanned by `basis`.
    pub fn restrict(&self, op: &PauliSum) -> Result<DMatrix<C64>> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: op.n_qubits(),
            });
        }
        op.restricted_dense(&self.basis)
    }

    /// Largest `‖Hv − λv‖` over all pairs.
    pub fn max_residual(&self, h: &PauliSum) -> Result<f64> {
        let m = self.restrict(h)?;
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            let v = self.vectors.column(j);
            let r = &m * v - v * C64::new(self.values[j], 0.0);
            worst = worst.max(r.norm());
        }
        Ok(worst)
    }
}

/// Full Hermitian eigendecomposition, optionally restricted to `basis`.
pub fn diagonalize(h: &PauliSum, basis: Option<&[usize]>) -> Result<EigenSolution> {
    h.require_hermitian()?;
    let dim = h.dense_dim()?;
    let basis: Vec<usize> = match basis {
        Some(b) => b.to_vec(),
        None => (0..dim).collect(),
    };
    let m = h.restricted_dense(&basis)?;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(basis.len(), basis.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok(EigenSolution {
        values,
        vectors,
        basis,
        n_qubits: h.n_qubits(),
    })
}

/// Codeword basis for `n_modes` modes, or `None` when every bit pattern is
/// a physical state.
pub fn physical_basis(enc: &Encoding, n_modes: usize) -> Option<Vec<usize>> {
    if enc.is_complete() {
        None
    } else {
        Some(enc.codeword_indices(n_modes))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Peak {
    /// Transition energy from the ground state (cm⁻¹).
    pub omega: f64,
    pub intensity: f64,
    /// Contribution per Cartesian axis.
    pub axes: [f64; 3],
}

/// Which excited states contribute peaks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransitionWindow {
    All,
    Lowest(usize),
    MaxEnergy(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Broadening {
    None,
    Gaussian(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Sorted by energy.
    pub peaks: Vec<Peak>,
    pub ground_energy: f64,
    pub broadening: Broadening,
}

/// `|⟨ψ₀|μ|ψ_j⟩|²` for every eigenstate `j`.
pub fn transition_strengths(sol: &EigenSolution, mu: &PauliSum) -> Result<Vec<f64>> {
    let m = sol.restrict(mu)?;
    let v0 = sol.vectors.column(0);
    let mv0 = &m * v0;
    let t = sol.vectors.adjoint() * mv0;
    Ok(t.iter().map(|c| c.norm_sqr()).collect())
}

/// Peaks from the ground state, degenerate multiplets merged.
pub fn ir_spectrum(
    sol: &EigenSolution,
    dipoles: &[(Axis, PauliSum)],
    window: TransitionWindow,
) -> Result<Spectrum> {
    if sol.is_empty() {
        return Err(Error::InvalidArgument("empty eigensolution".into()));
    }
    let mut per_axis = vec![[0.0; 3]; sol.len()];
    for (axis, mu) in dipoles {
        for (j, s) in transition_strengths(sol, mu)?.into_iter().enumerate() {
            per_axis[j][axis.index()] += s;
        }
    }
    let e0 = sol.values[0];
    let mut peaks: Vec<Peak> = Vec::new();
    let mut j = 1;
    let mut emitted = 0;
    while j < sol.len() {
        let start = j;
        let mut axes = [0.0; 3];
        while j < sol.len() && sol.values[j] - sol.values[start] < DEGENERACY_TOL {
            for (a, v) in axes.iter_mut().zip(per_axis[j]) {
                *a += v;
            }
            j += 1;
        }
        let omega = sol.values[start..j].iter().sum::<f64>() / (j - start) as f64 - e0;
        if omega < DEGENERACY_TOL {
            continue;
        }
        match window {
            TransitionWindow::Lowest(n) if emitted >= n => break,
            TransitionWindow::MaxEnergy(e) if omega > e => break,
            _ => {}
        }
        emitted += 1;
        peaks.push(Peak {
            omega,
            intensity: axes.iter().sum(),
            axes,
        });
    }
    Ok(Spectrum {
        peaks,
        ground_energy: e0,
        broadening: Broadening::None,
    })
}

/// Default transition window: 1.2 × twice the largest harmonic frequency.
pub fn default_cutoff(omegas: &[f64]) -> f64 {
    2.4 * omegas.iter().copied().fold(0.0, f64::max)
}

/// Diagonalize a dataset's Hamiltonian and compute its infrared spectrum over
/// all axes with a nonzero dipole.
pub fn molecular_spectrum(
    ds: &Dataset,
    enc: &Encoding,
    harmonic_only: bool,
    window: TransitionWindow,
) -> Result<Spectrum> {
    let ff = if harmonic_only {
        ds.force_field.harmonic()
    } else {
        ds.force_field.clone()
    };
    let m = ff.n_modes();
    let h = build_hamiltonian(&ff, enc)?;
    let basis = physical_basis(enc, m);
    let sol = diagonalize(&h, basis.as_deref())?;
    let dipoles = ds
        .dipole
        .active_axes()
        .into_iter()
        .map(|a| build_dipole(&ds.dipole, a, m, enc).map(|mu| (a, mu)))
        .collect::<Result<Vec<_>>>()?;
    ir_spectrum(&sol, &dipoles, window)
}

impl Spectrum {
    pub fn max_intensity(&self) -> f64 {
        self.peaks.iter().map(|p| p.intensity).fold(0.0, f64::max)
    }

    /// Scale so the strongest peak has intensity 1.
    pub fn normalized(&self) -> Spectrum {
        let m = self.max_intensity();
        let mut s = self.clone();
        if m > 0.0 {
            for p in &mut s.peaks {
                p.intensity /= m;
                for a in &mut p.axes {
                    *a /= m;
                }
            }
        }
        s
    }

    /// Peaks with relative intensity above `rel`.
    pub fn significant(&self, rel: f64) -> Vec<&Peak> {
        let m = self.max_intensity();
        self.peaks.iter().filter(|p| p.intensity > rel * m).collect()
    }

    /// `omega_cm1,intensity,axis_x,axis_y,axis_z`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_cm1,intensity,axis_x,axis_y,axis_z\n");
        for p in &self.peaks {
            let _ = writeln!(
                s,
                "{:.6},{:.9e},{:.9e},{:.9e},{:.9e}",
                p.omega, p.intensity, p.axes[0], p.axes[1], p.axes[2]
            );
        }
        s
    }
}

/// Uniform grid of `n` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `Σ_j I_j N(ω; ω_j, σ)` on `grid`.
pub fn broaden(s: &Spectrum, sigma: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&w| {
            s.peaks
                .iter()
                .map(|p| {
                    let x = (w - p.omega) / sigma;
                    p.intensity * norm * (-0.5 * x * x).exp()
                })
                .sum()
        })
        .collect())
}

/// `omega_cm1,f`.
pub fn curve_csv(grid: &[f64], f: &[f64]) -> String {
    let mut s = String::from("omega_cm1,f\n");
    for (w, v) in grid.iter().zip(f) {
        let _ = writeln!(s, "{w:.6},{v:.9e}");
    }
    s
}
