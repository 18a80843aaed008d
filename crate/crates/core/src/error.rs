use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis with {n_sites} sites and photon cutoff {photon_cutoff} does not fit in memory")]
    BasisTooLarge { n_sites: usize, photon_cutoff: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("detuning {0} must be nonzero")]
    ZeroDetuning(&'static str),

    #[error("value is not finite: {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("requested {requested} levels but the sector only has {available}")]
    TooManyLevels { requested: usize, available: usize },

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("couplings sum to zero, anisotropy is undefined")]
    DegenerateCouplings,

    #[error("integration produced non-finite amplitudes at t = {t}")]
    NumericalBreakdown { t: f64 },

    #[error("time step {dt:e} violates the stability guard dt*|H| <= 0.1 (|H| = {norm:e})")]
    StabilityGuard { dt: f64, norm: f64 },

    #[error("even-parity ground state is degenerate at the start of the sweep (gap {gap:e}); shift the starting parameters")]
    DegenerateGroundState { gap: f64 },

    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
