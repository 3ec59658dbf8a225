//! Browser bindings for the `vibq` demo page.
//!
//! Each export returns a JSON string so the page can `JSON.parse` it and draw
//! on a canvas. The `*_json` functions carry the logic and run natively.

use serde_json::json;
use wasm_bindgen::prelude::*;

use vibq::boson::Encoding;
use vibq::qsim::{dipole_block_encoding, qpe_histogram, QpeKernel, StateVector};
use vibq::spectra::{broaden, default_cutoff, diagonalize, linear_grid, molecular_spectrum, physical_basis, TransitionWindow};
use vibq::trotter::{geometric_grid, phase_cap, scan_imag, scan_real, PowerIteration, TermOrder};
use vibq::vibham::{build_dipole, build_hamiltonian, builtin};
use vibq::Result;

fn to_js(r: Result<String>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Broadened IR spectrum: `{grid, curve, peaks: [[omega, intensity]]}`.
pub fn spectrum_json(molecule: &str, d: usize, harmonic_only: bool, sigma: f64, points: usize) -> Result<String> {
    let ds = builtin(molecule)?;
    let enc = Encoding::gray(d);
    let cutoff = default_cutoff(ds.force_field.omegas());
    let s = molecular_spectrum(&ds, &enc, harmonic_only, TransitionWindow::MaxEnergy(cutoff))?.normalized();
    let grid = linear_grid(0.0, cutoff, points);
    let curve = broaden(&s, sigma, &grid)?;
    let peaks: Vec<[f64; 2]> = s.peaks.iter().map(|p| [p.omega, p.intensity]).collect();
    Ok(json!({ "grid": grid, "curve": curve, "peaks": peaks }).to_string())
}

/// Trotter errors of the three lowest states over four decades of step:
/// `{steps, states, errors}` with `errors[i][k]` in cm⁻¹.
pub fn trotter_json(molecule: &str, d: usize, imaginary: bool, points: usize) -> Result<String> {
    let ds = builtin(molecule)?;
    let enc = Encoding::gray(d);
    let h = build_hamiltonian(&ds.force_field, &enc)?;
    let levels = d.pow(ds.force_field.n_modes() as u32);
    let states: Vec<usize> = (0..levels.min(3)).collect();
    let scan = if imaginary {
        let n = h.one_norm();
        let basis = physical_basis(&enc, ds.force_field.n_modes());
        let steps = geometric_grid(3e-4 / n, 3.0 / n, points);
        scan_imag(&h, &steps, &states, TermOrder::Lex, basis.as_deref(), PowerIteration::default())?
    } else {
        let hi = 0.95 * phase_cap(&h);
        scan_real(&h, &geometric_grid(hi * 1e-4, hi, points), &states, TermOrder::Lex)?
    };
    Ok(json!({ "steps": scan.steps, "states": scan.states, "errors": scan.errors }).to_string())
}

/// Phase histogram of the dipole-excited ground state:
/// `{phase, probability, t, success_probability}`.
pub fn qpe_json(molecule: &str, d: usize, bits: usize, exact_kernel: bool, gamma: f64) -> Result<String> {
    let ds = builtin(molecule)?;
    let enc = Encoding::gray(d);
    let m = ds.force_field.n_modes();
    let h = build_hamiltonian(&ds.force_field, &enc)?;
    let basis = physical_basis(&enc, m);
    let sol = diagonalize(&h, basis.as_deref())?;
    let ground = StateVector::normalized(sol.full_state(0))?;
    let axis = ds.dipole.active_axes().first().copied().unwrap_or(vibq::vibham::Axis::X);
    let mu = build_dipole(&ds.dipole, axis, m, &enc)?;
    let out = dipole_block_encoding(&mu, gamma, &ground)?;
    let p = out.probability;
    let kernel = if exact_kernel { QpeKernel::Exact } else { QpeKernel::Ideal };
    let hist = qpe_histogram(&h, &out.into_state()?, bits, None, kernel, basis.as_deref())?;
    let phase: Vec<f64> = (0..hist.probabilities.len()).map(|m| hist.phase(m)).collect();
    Ok(json!({
        "phase": phase,
        "probability": hist.probabilities,
        "t": hist.t,
        "success_probability": p,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn spectrum(molecule: &str, d: usize, harmonic_only: bool, sigma: f64, points: usize) -> std::result::Result<String, JsValue> {
    to_js(spectrum_json(molecule, d, harmonic_only, sigma, points))
}

#[wasm_bindgen]
pub fn trotter(molecule: &str, d: usize, imaginary: bool, points: usize) -> std::result::Result<String, JsValue> {
    to_js(trotter_json(molecule, d, imaginary, points))
}

#[wasm_bindgen]
pub fn qpe(molecule: &str, d: usize, bits: usize, exact_kernel: bool, gamma: f64) -> std::result::Result<String, JsValue> {
    to_js(qpe_json(molecule, d, bits, exact_kernel, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn spectrum_peak_position() {
        let v: Value = serde_json::from_str(&spectrum_json("co", 4, true, 10.0, 101).unwrap()).unwrap();
        assert_eq!(v["grid"].as_array().unwrap().len(), 101);
        assert!((v["peaks"][0][0].as_f64().unwrap() - 2157.96).abs() < 1e-9);
    }

    #[test]
    fn trotter_scan_shapes() {
        let v: Value = serde_json::from_str(&trotter_json("fermi_resonance", 4, false, 5).unwrap()).unwrap();
        assert_eq!(v["steps"].as_array().unwrap().len(), 5);
        assert_eq!(v["errors"][0].as_array().unwrap().len(), 3);
        let v: Value = serde_json::from_str(&trotter_json("co", 4, true, 4).unwrap()).unwrap();
        assert_eq!(v["errors"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn qpe_is_normalized() {
        let v: Value = serde_json::from_str(&qpe_json("co", 8, 6, true, 1e-3).unwrap()).unwrap();
        let total: f64 = v["probability"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_molecule_is_an_error() {
        assert!(spectrum_json("h2o", 4, false, 10.0, 10).is_err());
    }
}
