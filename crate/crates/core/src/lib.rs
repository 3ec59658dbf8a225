//! Vibrational and fermionic Hamiltonians on qubits.
//!
//! The crate maps truncated bosonic modes and fermionic orbitals onto sums of
//! Pauli strings, reports resource metrics for the resulting operators and
//! validates simulation subroutines against dense linear algebra.
//!
//! | module | contents |
//! |--------|----------|
//! | [`pauli`] | Pauli strings and sums, products, W, dense matrices |
//! | [`boson`] | d-level operators and Gray/binary/unary encodings |
//! | [`fermion`] | Jordan–Wigner mapping and term counting |
//! | [`vibham`] | force fields, dipole surfaces, Hamiltonian builders |
//! | [`spectra`] | exact diagonalization and infrared spectra |
//! | [`trotter`] | Trotterized real and imaginary time operators |
//! | [`qsim`] | statevectors, overlap protocols, QPE, block encoding |
//! | [`cli`] | command-line front end |

pub mod boson;
pub mod cli;
pub mod error;
pub mod fermion;
pub mod pauli;
pub mod qsim;
pub mod spectra;
pub mod trotter;
pub mod vibham;

pub use error::{Error, Result};
pub use pauli::{Pauli, PauliString, PauliSum, C64};

/// Hartree to wavenumber conversion.
pub const HARTREE_TO_CM1: f64 = 219474.6313632;
