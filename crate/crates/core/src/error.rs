use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model parameter (distance, power, rate) is outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A function argument is outside its domain, e.g. a negative SNR level.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation does not apply to the current regime.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Adaptive quadrature ran out of subdivisions before reaching the tolerance.
    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e} (partial value {partial})")]
    NumericFailure {
        achieved: f64,
        requested: f64,
        partial: f64,
    },

    /// Two routes that must agree did not; indicates a bug upstream.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
