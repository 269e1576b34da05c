use thiserror::Error;

/// Errors raised by lattice, index, channel and certification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{n_sites} sites exceeds the {mode} cap of {cap} (override with MQS_MAX_QUBITS)")]
    CapExceeded {
        n_sites: usize,
        cap: usize,
        mode: &'static str,
    },

    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("site {site} operator norm {norm} exceeds 1")]
    SiteNormExceeded { site: usize, norm: f64 },

    #[error("invalid subsystem support: {0}")]
    InvalidSupport(String),

    #[error("Schatten order must satisfy k >= 1, got {0}")]
    InvalidNormOrder(f64),

    #[error("null outcome: success probability {0:e} below threshold")]
    NullOutcome(f64),

    #[error("invalid channel: sum of E_k^dagger E_k has eigenvalue {0} > 1")]
    InvalidChannel(f64),

    #[error("expected a single Kraus operator, channel has {0}")]
    NotSingleKraus(usize),

    #[error("invalid exponent fit input: {0}")]
    InvalidFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed document: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
