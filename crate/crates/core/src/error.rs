use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Variants are grouped so the CLI can map them onto exit codes:
/// configuration/input problems, numerical problems and protocol
/// consistency failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("dense limit exceeded: {n_qubits} qubits requested, limit is {limit}")]
    DenseLimit { n_qubits: usize, limit: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("level {level} out of range for d = {d}")]
    LevelOutOfRange { level: usize, d: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mode {0} appears more than once in a product")]
    RepeatedMode(usize),

    #[error("unsupported truncation d = {0}")]
    UnsupportedTruncation(usize),

    #[error("orbital index {index} out of range for {n_orbitals} orbitals")]
    OrbitalOutOfRange { index: usize, n_orbitals: usize },

    #[error("enumeration limit exceeded: {0}")]
    EnumerationLimit(String),

    #[error("invalid force field: {0}")]
    InvalidForceField(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigenphase aliasing: step {step:.3e} times 1-norm {norm:.3e} is not below pi")]
    PhaseAliasing { step: f64, norm: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last change {change:.3e})")]
    NoConvergence { iterations: usize, change: f64 },

    #[error("dominant eigenvalue is degenerate (ratio {ratio:.6})")]
    DegenerateDominant { ratio: f64 },

    #[error("phase out of range: {0}")]
    PhaseOutOfRange(String),

    #[error("block-encoding success probability {0:.3e} is below threshold")]
    LowSuccessProbability(f64),

    #[error("protocol inconsistency at term pair ({k}, {l}): reconstructed {reconstructed:.6e}, direct {direct:.6e}")]
    ProtocolMismatch {
        k: usize,
        l: usize,
        reconstructed: f64,
        direct: f64,
    },

    #[error("protocol precondition violated: {0}")]
    ProtocolPrecondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code used by the command-line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PhaseAliasing { .. }
            | Error::NoConvergence { .. }
            | Error::DegenerateDominant { .. }
            | Error::Numerical(_)
            | Error::LowSuccessProbability(_)
            | Error::PhaseOutOfRange(_) => 3,
            Error::ProtocolMismatch { .. } | Error::ProtocolPrecondition(_) => 4,
            _ => 2,
        }
    }

    /// Short machine-readable tag for error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::QubitMismatch { .. } => "qubit_mismatch",
            Error::DenseLimit { .. } => "dense_limit",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::LevelOutOfRange { .. } => "level_out_of_range",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::RepeatedMode(_) => "repeated_mode",
            Error::UnsupportedTruncation(_) => "unsupported_truncation",
            Error::OrbitalOutOfRange { .. } => "orbital_out_of_range",
            Error::EnumerationLimit(_) => "enumeration_limit",
            Error::InvalidForceField(_) => "invalid_force_field",
            Error::Parse { .. } => "parse",
            Error::Unknown { .. } => "unknown",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::PhaseAliasing { .. } => "phase_aliasing",
            Error::NoConvergence { .. } => "no_convergence",
            Error::DegenerateDominant { .. } => "degenerate_dominant",
            Error::PhaseOutOfRange(_) => "phase_out_of_range",
            Error::LowSuccessProbability(_) => "low_success_probability",
            Error::ProtocolMismatch { .. } => "protocol_mismatch",
            Error::ProtocolPrecondition(_) => "protocol_precondition",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
