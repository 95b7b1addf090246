use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
///
/// Variants are split into two families: validation failures (bad input,
/// under-resolved grids, not enough data) and numerical failures (overflow of
/// the coupling flow, invariant breaches detected during linear algebra).
/// [`Error::is_numerical`] tells them apart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid coupling: exchange {exchange} must be > 0 and field {field} must be >= 0")]
    InvalidCoupling { exchange: f64, field: f64 },

    #[error("coupling flow overflows at RG step {step} (field {field})")]
    FlowOverflow { step: usize, field: f64 },

    #[error("effective system size 2^(n+1) does not fit in 64 bits for n = {step}")]
    SizeOverflow { step: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("spectrum of rho * rho_tilde has an imaginary part {imag:e} above tolerance")]
    ComplexSpectrum { imag: f64 },

    #[error("time grid under-resolved: {per_period:.1} samples per period, need at least {required}")]
    UnderResolvedGrid { per_period: f64, required: usize },

    #[error("insufficient peaks: requested peak {requested} but only {found} found in range")]
    InsufficientPeaks { requested: usize, found: usize },

    #[error("minimum lies on the boundary of the field range at g = {field}; widen range")]
    MinimumOnBoundary { field: f64 },

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("sample {index} has non-positive value {value}")]
    NonPositiveSample { index: usize, value: f64 },

    #[error("sample {index} has g_m = {field} >= g_c = 1")]
    NotBelowCritical { index: usize, field: f64 },

    #[error("collapse curves do not overlap in the scaling variable")]
    NonOverlapping,

    #[error("projected Hamiltonian is not of transverse-Ising form (residual {residual:e})")]
    PatternMismatch { residual: f64 },

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerics (overflow, invariant breach) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FlowOverflow { .. }
                | Error::SizeOverflow { .. }
                | Error::InvalidDensityMatrix(_)
                | Error::ComplexSpectrum { .. }
                | Error::PatternMismatch { .. }
        )
    }
}
