use thiserror::Error;

/// Errors raised by the shaping and rate-evaluation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("constellation order {0} is not a power of two >= 2")]
    InvalidOrder(usize),
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A numerical target that cannot be reached, e.g. a power constraint
    /// outside the range spanned by the Maxwell-Boltzmann family.
    #[error("numerically infeasible: {0}")]
    Infeasible(String),
    /// Uniform MI is within the saturation margin of `log2(M^2)` at this
    /// SNR, so required-SNR inversion is ill-conditioned.
    #[error("uniform input saturated at {snr_db} dB")]
    Saturated { snr_db: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
