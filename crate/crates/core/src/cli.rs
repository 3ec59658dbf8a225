//! Command-line front end.
//!
//! Every data-producing subcommand writes CSV files plus a `manifest.json`
//! echoing the resolved configuration into `--out-dir`. Failures print one
//! JSON object on stderr and exit with 2 (configuration), 3 (numerical) or
//! 4 (protocol consistency).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::boson::{Encoding, EncodingKind};
use crate::error::{Error, Result};
use crate::fermion::{es_pauli_count_analytic, es_pauli_count_bruteforce};
use crate::pauli::{dense_limit, PauliSum};
use crate::qsim::{
    apply_normalized, direct_transition_amplitude, dipole_block_encoding, ibe_transition_amplitude_checked,
    ibe_transition_amplitude_sampled, qpe_histogram, QpeKernel, Shots, StateVector,
};
use crate::spectra::{
    broaden, curve_csv, default_cutoff, diagonalize, linear_grid, molecular_spectrum, physical_basis,
    transition_strengths, TransitionWindow, DEFAULT_SIGMA,
};
use crate::trotter::{geometric_grid, phase_cap, scan_imag, scan_real, PowerIteration, ScanMode, TermOrder};
use crate::vibham::{build_dipole, build_hamiltonian, builtin, pessimistic_model, Axis, Dataset};
use crate::HARTREE_TO_CM1;

/// Precision targets for `W/ε`: (label in cm⁻¹, value in Ha).
pub const EPSILON_ANCHORS: [(f64, f64); 3] = [(100.0, 455e-6), (10.0, 45.5e-6), (1.0, 4.55e-6)];

const THREADS_VAR: &str = "VIBQ_THREADS";

#[derive(Debug, Parser)]
#[command(name = "vibq", version, about = "Vibrational Hamiltonians on qubits: resources, spectra and protocol checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pauli-term census with locality, W and W/ε per problem class.
    Resources(ResourcesArgs),
    /// Exact infrared spectrum: peak list and broadened curve.
    Spectrum(SpectrumArgs),
    /// Trotter error scan over step sizes.
    Trotter(TrotterArgs),
    /// Transition amplitude by direct algebra or overlap reconstruction.
    Transition(TransitionArgs),
    /// Phase-estimation response histogram.
    Qpe(QpeArgs),
    /// Write a force field in canonical file form.
    ForceField(ForceFieldArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Source {
    /// Built-in dataset: co, coh, fermi_resonance.
    #[arg(long, conflicts_with = "ff")]
    pub molecule: Option<String>,
    /// Force-field file.
    #[arg(long)]
    pub ff: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EncodingArgs {
    /// Levels per mode.
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    /// gray, binary or unary.
    #[arg(long, default_value = "gray")]
    pub encoding: String,
}

impl EncodingArgs {
    fn resolve(&self) -> Result<Encoding> {
        Encoding::new(self.encoding.parse::<EncodingKind>()?, self.d)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ResourcesArgs {
    /// Classes: vib2-d4, vib3-d4, vib2-d8, vib3-d8, fermion.
    #[arg(long, value_delimiter = ',', default_value = "vib2-d4,vib3-d4,vib2-d8,vib3-d8,fermion")]
    pub classes: Vec<String>,
    /// Register sizes.
    #[arg(long, value_delimiter = ',', default_value = "24,36,48")]
    pub qubits: Vec<usize>,
    /// Bosonic encoding for vibrational classes.
    #[arg(long, default_value = "gray")]
    pub encoding: String,
    /// Also enumerate fermionic strings explicitly up to this many spatial orbitals.
    #[arg(long, default_value_t = 0)]
    pub bruteforce_max: usize,
    #[arg(long, default_value = "vibq-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    #[command(flatten)]
    #[serde(flatten)]
    pub encoding: EncodingArgs,
    /// Drop cubic and quartic constants.
    #[arg(long)]
    pub harmonic_only: bool,
    /// Gaussian width (cm⁻¹).
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Largest transition energy kept (cm⁻¹); default 2.4 × largest frequency.
    #[arg(long, conflicts_with = "lowest")]
    pub cutoff: Option<f64>,
    /// Keep only the lowest N transitions.
    #[arg(long)]
    pub lowest: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub grid_min: f64,
    /// Default: cutoff, or highest peak + 5σ.
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    pub grid_points: usize,
    #[arg(long, default_value = "vibq-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrotterArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    #[command(flatten)]
    #[serde(flatten)]
    pub encoding: EncodingArgs,
    /// real or imag.
    #[arg(long, default_value = "real")]
    pub mode: String,
    /// Geometric grid LO:HI:N (cm); default four decades below the phase cap
    /// (real) or of Δβ·‖H‖₁ ending at 3 (imag).
    #[arg(long)]
    pub steps: Option<String>,
    /// Tracked eigenstates; default ground plus the upper states of the
    /// three most intense transitions.
    #[arg(long, value_delimiter = ',')]
    pub states: Option<Vec<usize>>,
    /// lex, magnitude-desc or seeded-shuffle[:seed].
    #[arg(long, default_value = "lex")]
    pub order: String,
    /// Seed for seeded-shuffle without an explicit seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "vibq-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransitionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    #[command(flatten)]
    #[serde(flatten)]
    pub encoding: EncodingArgs,
    #[arg(long, default_value = "x")]
    pub axis: String,
    #[arg(long, default_value_t = 0)]
    pub from: usize,
    #[arg(long, default_value_t = 1)]
    pub to: usize,
    /// direct or ibe.
    #[arg(long, default_value = "direct")]
    pub protocol: String,
    /// Allowed reconstruction error per term.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Estimate each overlap from this many seeded shots.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "vibq-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QpeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    #[command(flatten)]
    #[serde(flatten)]
    pub encoding: EncodingArgs,
    /// Phase-register bits.
    #[arg(long, default_value_t = 8)]
    pub bits: usize,
    /// ideal or exact.
    #[arg(long, default_value = "ideal")]
    pub kernel: String,
    /// ground, dipole-excited or uniform.
    #[arg(long, default_value = "dipole-excited")]
    pub initial: String,
    /// Dipole axis for dipole-excited; default the first nonzero axis.
    #[arg(long)]
    pub axis: Option<String>,
    /// Block-encoding angle.
    #[arg(long, default_value_t = 1e-3)]
    pub gamma: f64,
    /// Energy-to-phase scale (cm); default places the top level in the last bin.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value = "vibq-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ForceFieldArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    #[arg(long, default_value = "vibq-out")]
    pub out_dir: PathBuf,
}

/// Files written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
}

/// A census problem class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensusClass {
    Vibrational { three_body: bool, d: usize },
    Fermionic,
}

impl FromStr for CensusClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::Unknown {
            kind: "problem class",
            name: s.to_string(),
        };
        if s == "fermion" {
            return Ok(CensusClass::Fermionic);
        }
        let rest = s.strip_prefix("vib").ok_or_else(unknown)?;
        let (body, d) = rest.split_once("-d").ok_or_else(unknown)?;
        let three_body = match body {
            "2" => false,
            "3" => true,
            _ => return Err(unknown()),
        };
        let d = d.parse().map_err(|_| unknown())?;
        Ok(CensusClass::Vibrational { three_body, d })
    }
}

impl std::fmt::Display for CensusClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CensusClass::Vibrational { three_body, d } => {
                write!(f, "vib{}-d{d}", if *three_body { 3 } else { 2 })
            }
            CensusClass::Fermionic => f.write_str("fermion"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusRow {
    pub class: CensusClass,
    pub n_qubits: usize,
    /// Modes or spatial orbitals.
    pub units: usize,
    pub terms: usize,
    pub locality: Vec<(usize, usize)>,
    /// Largest non-identity coefficient magnitude (Ha).
    pub max_coeff: Option<f64>,
    /// `W` in Ha.
    pub w: Option<f64>,
    pub bruteforce_terms: Option<usize>,
}

impl CensusRow {
    /// `W/ε` for each anchor of [`EPSILON_ANCHORS`].
    pub fn w_over_eps(&self) -> Option<[f64; 3]> {
        self.w.map(|w| EPSILON_ANCHORS.map(|(_, e)| w / e))
    }
}

/// Census rows for every class and register size, in argument order.
pub fn census(
    classes: &[CensusClass],
    qubits: &[usize],
    kind: EncodingKind,
    bruteforce_max: usize,
) -> Result<Vec<CensusRow>> {
    let mut rows = Vec::new();
    for &class in classes {
        for &nq in qubits {
            rows.push(census_row(class, nq, kind, bruteforce_max)?);
        }
    }
    Ok(rows)
}

fn census_row(class: CensusClass, nq: usize, kind: EncodingKind, bruteforce_max: usize) -> Result<CensusRow> {
    match class {
        CensusClass::Fermionic => {
            if nq == 0 || !nq.is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!(
                    "fermionic census needs an even positive qubit count, got {nq}"
                )));
            }
            let n = nq / 2;
            let bruteforce_terms = if n <= bruteforce_max {
                Some(es_pauli_count_bruteforce(n)?)
            } else {
                None
            };
            Ok(CensusRow {
                class,
                n_qubits: nq,
                units: n,
                terms: es_pauli_count_analytic(n),
                locality: Vec::new(),
                max_coeff: None,
                w: None,
                bruteforce_terms,
            })
        }
        CensusClass::Vibrational { three_body, d } => {
            let enc = Encoding::new(kind, d)?;
            let w = enc.qubits_per_mode();
            if nq == 0 || !nq.is_multiple_of(w) {
                return Err(Error::InvalidArgument(format!(
                    "{nq} qubits is not a whole number of {w}-qubit modes"
                )));
            }
            let modes = nq / w;
            let h = build_hamiltonian(&pessimistic_model(modes, three_body), &enc)?;
            Ok(CensusRow {
                class,
                n_qubits: nq,
                units: modes,
                terms: h.len(),
                locality: h.locality_histogram().into_iter().collect(),
                max_coeff: Some(h.max_abs_non_identity() / HARTREE_TO_CM1),
                w: Some(h.w_magnitude()? / HARTREE_TO_CM1),
                bruteforce_terms: None,
            })
        }
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9e}")).unwrap_or_default()
}

/// CSV with one row per census entry.
pub fn census_csv(rows: &[CensusRow]) -> String {
    let mut s = String::from(
        "class,n_qubits,units,terms,locality,max_coeff_ha,w_ha,w_over_eps_100cm1,w_over_eps_10cm1,w_over_eps_1cm1,bruteforce_terms\n",
    );
    for r in rows {
        let loc = r
            .locality
            .iter()
            .map(|(k, n)| format!("{k}:{n}"))
            .collect::<Vec<_>>()
            .join(";");
        let ratios = r.w_over_eps();
        let q = |i: usize| sci(ratios.map(|x| x[i]));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.class,
            r.n_qubits,
            r.units,
            r.terms,
            loc,
            sci(r.max_coeff),
            sci(r.w),
            q(0),
            q(1),
            q(2),
            opt(r.bruteforce_terms)
        );
    }
    s
}

fn load_source(src: &Source) -> Result<(String, Dataset)> {
    let (label, ds) = match (&src.molecule, &src.ff) {
        (Some(name), None) => (name.clone(), builtin(name)?),
        (None, Some(path)) => (path.display().to_string(), Dataset::load(path)?),
        _ => {
            return Err(Error::InvalidArgument(
                "exactly one of --molecule or --ff is required".into(),
            ))
        }
    };
    if Dataset::parse(&ds.dump())? != ds {
        return Err(Error::InvalidForceField(format!("{label} does not survive a dump/load round trip")));
    }
    Ok((label, ds))
}

fn parse_axis(s: &str) -> Result<Axis> {
    s.parse()
}

fn write_outputs(out_dir: &Path, command: &str, config: Value, resolved: Value, files: &[(&str, String)]) -> Result<RunOutput> {
    std::fs::create_dir_all(out_dir)?;
    for (name, body) in files {
        std::fs::write(out_dir.join(name), body)?;
    }
    let names: Vec<String> = files.iter().map(|(n, _)| n.to_string()).collect();
    let manifest = json!({
        "tool": "vibq",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "resolved": resolved,
        "environment": {
            "dense_limit": dense_limit(),
            "threads": std::env::var(THREADS_VAR).ok(),
        },
        "outputs": names,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(out_dir.join("manifest.json"), text + "\n")?;
    let mut files = names;
    files.push("manifest.json".into());
    Ok(RunOutput {
        out_dir: out_dir.to_path_buf(),
        files,
    })
}

fn config_json<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

fn cmd_resources(a: &ResourcesArgs) -> Result<RunOutput> {
    let classes = a
        .classes
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<CensusClass>>>()?;
    let kind: EncodingKind = a.encoding.parse()?;
    let rows = census(&classes, &a.qubits, kind, a.bruteforce_max)?;
    let resolved = json!({
        "classes": classes.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "epsilon_ha": EPSILON_ANCHORS.map(|(_, e)| e),
        "rows": rows.len(),
    });
    write_outputs(&a.out_dir, "resources", config_json(a), resolved, &[("resources.csv", census_csv(&rows))])
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<RunOutput> {
    let (label, ds) = load_source(&a.source)?;
    let enc = a.encoding.resolve()?;
    let window = match (a.lowest, a.cutoff) {
        (Some(n), _) => TransitionWindow::Lowest(n),
        (None, Some(c)) => TransitionWindow::MaxEnergy(c),
        (None, None) => TransitionWindow::MaxEnergy(default_cutoff(ds.force_field.omegas())),
    };
    let spec = molecular_spectrum(&ds, &enc, a.harmonic_only, window)?.normalized();
    let grid_max = match (a.grid_max, window) {
        (Some(g), _) => g,
        (None, TransitionWindow::MaxEnergy(c)) => c,
        _ => spec.peaks.iter().map(|p| p.omega).fold(a.grid_min, f64::max) + 5.0 * a.sigma,
    };
    let grid = linear_grid(a.grid_min, grid_max, a.grid_points);
    let curve = broaden(&spec, a.sigma, &grid)?;
    let strongest = spec
        .peaks
        .iter()
        .max_by(|x, y| x.intensity.total_cmp(&y.intensity))
        .map(|p| p.omega);
    let resolved = json!({
        "source": label,
        "window": format!("{window:?}"),
        "grid_max": grid_max,
        "ground_energy_cm1": spec.ground_energy,
        "peaks": spec.peaks.len(),
        "strongest_peak_cm1": strongest,
    });
    write_outputs(
        &a.out_dir,
        "spectrum",
        config_json(a),
        resolved,
        &[("peaks.csv", spec.to_csv()), ("curve.csv", curve_csv(&grid, &curve))],
    )
}

/// Parse `LO:HI:N` into a geometric grid.
pub fn parse_geometric(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("steps must be LO:HI:N, got '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && n >= 1) {
        return Err(bad());
    }
    Ok(geometric_grid(lo, hi, n))
}

/// Ground state plus the upper states of the `count` most intense
/// transitions, ascending.
pub fn intense_states(ds: &Dataset, enc: &Encoding, h: &PauliSum, count: usize) -> Result<Vec<usize>> {
    let m = ds.force_field.n_modes();
    let basis = physical_basis(enc, m);
    let sol = diagonalize(h, basis.as_deref())?;
    let mut total = vec![0.0; sol.len()];
    for axis in ds.dipole.active_axes() {
        let mu = build_dipole(&ds.dipole, axis, m, enc)?;
        for (t, s) in total.iter_mut().zip(transition_strengths(&sol, &mu)?) {
            *t += s;
        }
    }
    let mut ranked: Vec<usize> = (1..sol.len()).collect();
    ranked.sort_by(|&x, &y| total[y].total_cmp(&total[x]).then(x.cmp(&y)));
    let mut states: Vec<usize> = std::iter::once(0).chain(ranked.into_iter().take(count)).collect();
    states.sort_unstable();
    Ok(states)
}

fn cmd_trotter(a: &TrotterArgs) -> Result<RunOutput> {
    let (label, ds) = load_source(&a.source)?;
    let enc = a.encoding.resolve()?;
    let mode: ScanMode = a.mode.parse()?;
    let order = match a.order.parse::<TermOrder>()? {
        TermOrder::SeededShuffle(0) if a.order == "seeded-shuffle" => TermOrder::SeededShuffle(a.seed),
        o => o,
    };
    let h = build_hamiltonian(&ds.force_field, &enc)?;
    let norm = h.one_norm();
    let states = match &a.states {
        Some(s) => s.clone(),
        None => intense_states(&ds, &enc, &h, 3)?,
    };
    let steps = match (&a.steps, mode) {
        (Some(s), _) => parse_geometric(s)?,
        (None, ScanMode::Real) => {
            let hi = 0.95 * phase_cap(&h);
            geometric_grid(hi * 1e-4, hi, 17)
        }
        (None, ScanMode::Imag) => geometric_grid(3e-4 / norm, 3.0 / norm, 17),
    };
    let scan = match mode {
        ScanMode::Real => {
            if !enc.is_complete() {
                return Err(Error::InvalidArgument(
                    "real-time scans need an encoding without unused bit patterns".into(),
                ));
            }
            scan_real(&h, &steps, &states, order)?
        }
        ScanMode::Imag => {
            let basis = physical_basis(&enc, ds.force_field.n_modes());
            scan_imag(&h, &steps, &states, order, basis.as_deref(), PowerIteration::default())?
        }
    };
    let slopes: Vec<Option<f64>> = (0..states.len())
        .map(|k| {
            let (lo, hi) = (scan.steps.first().copied(), scan.steps.last().copied());
            lo.zip(hi).and_then(|(lo, hi)| scan.loglog_slope(k, lo, hi))
        })
        .collect();
    let resolved = json!({
        "source": label,
        "order": order.to_string(),
        "states": states,
        "one_norm_cm1": norm,
        "phase_cap": scan.cap,
        "steps_kept": scan.steps.len(),
        "loglog_slopes": slopes,
        "crossings": scan.crossing.iter().flatten().filter(|c| **c).count(),
    });
    write_outputs(&a.out_dir, "trotter", config_json(a), resolved, &[("trotter.csv", scan.to_csv())])
}

fn cmd_transition(a: &TransitionArgs) -> Result<RunOutput> {
    let (label, ds) = load_source(&a.source)?;
    let enc = a.encoding.resolve()?;
    let axis = parse_axis(&a.axis)?;
    let m = ds.force_field.n_modes();
    let h = build_hamiltonian(&ds.force_field, &enc)?;
    let mu = build_dipole(&ds.dipole, axis, m, &enc)?;
    let basis = physical_basis(&enc, m);
    let sol = diagonalize(&h, basis.as_deref())?;
    for s in [a.from, a.to] {
        if s >= sol.len() {
            return Err(Error::InvalidArgument(format!("state {s} out of range for {} levels", sol.len())));
        }
    }
    let psi_i = StateVector::normalized(sol.full_state(a.from))?;
    let psi_j = StateVector::normalized(sol.full_state(a.to))?;
    let direct = direct_transition_amplitude(&psi_i, &psi_j, &mu)?;
    let (value, primitives) = match a.protocol.as_str() {
        "direct" => (direct, 0),
        "ibe" => {
            let est = match a.shots {
                Some(shots) => ibe_transition_amplitude_sampled(&psi_i, &psi_j, &mu, Shots { shots, seed: a.seed })?,
                None => ibe_transition_amplitude_checked(&psi_i, &psi_j, &mu, a.tol)?,
            };
            (est.value, est.primitives)
        }
        other => {
            return Err(Error::Unknown {
                kind: "protocol",
                name: other.to_string(),
            })
        }
    };
    if a.shots.is_none() && (value - direct).abs() > a.tol {
        return Err(Error::ProtocolMismatch {
            k: 0,
            l: 0,
            reconstructed: value,
            direct,
        });
    }
    let csv = format!(
        "protocol,axis,from,to,value,direct,abs_diff,primitives\n{},{axis},{},{},{value:.12e},{direct:.12e},{:.3e},{primitives}\n",
        a.protocol,
        a.from,
        a.to,
        (value - direct).abs()
    );
    let resolved = json!({
        "source": label,
        "dipole_terms": mu.len(),
        "transition_cm1": sol.values[a.to] - sol.values[a.from],
    });
    write_outputs(&a.out_dir, "transition", config_json(a), resolved, &[("transition.csv", csv)])
}

fn cmd_qpe(a: &QpeArgs) -> Result<RunOutput> {
    let (label, ds) = load_source(&a.source)?;
    let enc = a.encoding.resolve()?;
    let kernel: QpeKernel = a.kernel.parse()?;
    let m = ds.force_field.n_modes();
    let h = build_hamiltonian(&ds.force_field, &enc)?;
    let basis = physical_basis(&enc, m);
    let sol = diagonalize(&h, basis.as_deref())?;
    let ground = StateVector::normalized(sol.full_state(0))?;
    let mut extra = json!({});
    let eta = match a.initial.as_str() {
        "ground" => ground,
        "uniform" => StateVector::normalized(crate::trotter::uniform_state(h.n_qubits(), basis.as_deref()))?,
        "dipole-excited" => {
            let axis = match &a.axis {
                Some(s) => parse_axis(s)?,
                None => *ds
                    .dipole
                    .active_axes()
                    .first()
                    .ok_or_else(|| Error::InvalidArgument("dataset has no dipole surface".into()))?,
            };
            let mu = build_dipole(&ds.dipole, axis, m, &enc)?;
            let out = dipole_block_encoding(&mu, a.gamma, &ground)?;
            let fidelity = out
                .state
                .as_ref()
                .map(|s| apply_normalized(&mu, &ground).and_then(|t| t.inner(s)).map(|c| c.norm_sqr()))
                .transpose()?;
            extra = json!({
                "axis": axis.to_string(),
                "success_probability": out.probability,
                "fidelity_to_mu_psi": fidelity,
            });
            out.into_state()?
        }
        other => {
            return Err(Error::Unknown {
                kind: "initial state",
                name: other.to_string(),
            })
        }
    };
    let hist = qpe_histogram(&h, &eta, a.bits, a.t, kernel, basis.as_deref())?;
    let resolved = json!({
        "source": label,
        "t": hist.t,
        "auto_scaled": hist.auto_scaled,
        "total_probability": hist.total(),
        "initial": extra,
    });
    write_outputs(&a.out_dir, "qpe", config_json(a), resolved, &[("qpe.csv", hist.to_csv())])
}

fn cmd_force_field(a: &ForceFieldArgs) -> Result<RunOutput> {
    let (label, ds) = load_source(&a.source)?;
    let name = match &a.source.molecule {
        Some(n) => format!("{n}.ff"),
        None => "force_field.ff".to_string(),
    };
    let resolved = json!({
        "source": label,
        "modes": ds.force_field.n_modes(),
        "cubic": ds.force_field.cubic().len(),
        "quartic": ds.force_field.quartic().len(),
    });
    write_outputs(&a.out_dir, "force-field", config_json(a), resolved, &[(name.as_str(), ds.dump())])
}

/// Execute a parsed command line.
pub fn run(cli: &Cli) -> Result<RunOutput> {
    match &cli.command {
        Command::Resources(a) => cmd_resources(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Trotter(a) => cmd_trotter(a),
        Command::Transition(a) => cmd_transition(a),
        Command::Qpe(a) => cmd_qpe(a),
        Command::ForceField(a) => cmd_force_field(a),
    }
}

fn error_json(kind: &str, message: &str, code: i32) -> String {
    json!({ "error": { "kind": kind, "message": message, "exit_code": code } }).to_string()
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_VAR} must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Parse arguments, run, report; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", error_json("usage", e.to_string().trim(), 2));
            return 2;
        }
    };
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(out) => {
            for f in &out.files {
                println!("{}", out.out_dir.join(f).display());
            }
            0
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}", error_json(e.kind(), &e.to_string(), code));
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_names_round_trip() {
        for s in ["vib2-d4", "vib3-d8", "fermion"] {
            assert_eq!(s.parse::<CensusClass>().unwrap().to_string(), s);
        }
        assert!("vib4-d4".parse::<CensusClass>().is_err());
        assert!("vib2".parse::<CensusClass>().is_err());
    }

    #[test]
    fn empty_census_has_header() {
        let rows = census(&[], &[24], EncodingKind::Gray, 0).unwrap();
        assert_eq!(census_csv(&rows).lines().count(), 1);
    }

    #[test]
    fn single_orbital_counts_agree() {
        let rows = census(&[CensusClass::Fermionic], &[2], EncodingKind::Gray, 1).unwrap();
        assert_eq!(rows[0].terms, 4);
        assert_eq!(rows[0].bruteforce_terms, Some(4));
    }

    #[test]
    fn infeasible_sizes() {
        let c = CensusClass::Vibrational { three_body: false, d: 8 };
        assert!(census(&[c], &[25], EncodingKind::Gray, 0).is_err());
        assert!(census(&[CensusClass::Fermionic], &[7], EncodingKind::Gray, 0).is_err());
    }

    #[test]
    fn geometric_steps() {
        let g = parse_geometric("1e-4:1e-2:3").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[1] - 1e-3).abs() < 1e-15);
        assert!(parse_geometric("1:0.5:3").is_err());
        assert!(parse_geometric("1:2").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(main_with_args(["vibq", "spectrum", "--bogus"]), 2);
        assert_eq!(main_with_args(["vibq", "resources", "--classes", "vib9-d4"]), 2);
    }
}
