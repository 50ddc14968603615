use thiserror::Error;

/// Errors raised by the polariton toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("both control Rabi frequencies are zero; the mixing angle is undefined")]
    ZeroControlField,
    #[error("group velocity underflows to zero (cos^2 theta = {cos2_theta:e})")]
    DegenerateGroupVelocity { cos2_theta: f64 },
    #[error("longitudinal mass is undefined for zero single-photon detuning")]
    UndefinedMass,
    #[error("effective magnetic field is zero (no rotation); quantity undefined")]
    UndefinedField,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field contains NaN or infinite values")]
    NonFiniteField,
    #[error("{fraction:e} of the norm lies outside the safety disk (tolerance {tolerance:e})")]
    EdgeLeakage { fraction: f64, tolerance: f64 },
    #[error("field has zero norm")]
    ZeroNorm,
    #[error("snapshot magic bytes do not read SLPF")]
    BadMagic,
    #[error("snapshot version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("snapshot truncated: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },
    #[error("snapshot has {extra} trailing bytes after the payload")]
    TrailingData { extra: usize },
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("split-step integration does not support the rotational loss term")]
    UnsupportedLoss,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("operator is not Hermitian for this configuration (loss enabled)")]
    NonHermitianConfig,
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient samples: {0}")]
    InsufficientSamples(&'static str),
    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(&'static str),
    #[error("rotation angle is ambiguous (overlap landscape has competing maxima)")]
    AmbiguousRotation,
    #[error("norm must be strictly positive for a logarithmic fit")]
    NonPositiveNorm,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
