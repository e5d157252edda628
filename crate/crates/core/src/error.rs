use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(&'static str),

    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: &'static str },

    #[error("density positivity violated: min(1 + rho) = {min_density:e}")]
    Positivity { min_density: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("zero frequency has no mode decomposition; the zero mode is constant in time")]
    ZeroFrequency,

    #[error("negative time {0} passed to the semigroup")]
    NegativeTime(f64),

    #[error("quadrature did not converge: achieved relative error {achieved:e} (requested {requested:e})")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("fit needs at least {required} samples in the window, found {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("nonpositive value {value:e} at sample {index} (t = {time})")]
    NonPositiveSample { index: usize, time: f64, value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    #[error("window [{start}, {end}] spans less than one decade (need end >= {required_end})")]
    WindowTooShort { start: f64, end: f64, required_end: f64 },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },

    #[error("amplitude {amplitude} violates the density floor; max admissible amplitude is {max_admissible}")]
    AmplitudeTooLarge { amplitude: f64, max_admissible: f64 },

    #[error("low-frequency level {level:e} is below the requested floor c0 = {c0:e}")]
    FloorNotMet { level: f64, c0: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
