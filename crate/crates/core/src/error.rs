use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("no root bracketed in [{lo_hz:e}, {hi_hz:e}] Hz for target length {target_m:e} m")]
    NoConvergence { lo_hz: f64, hi_hz: f64, target_m: f64 },

    #[error("phase step {phase_step} rad exceeds k0*d = {limit} rad; no real steering angle")]
    UnreachableAngle { phase_step: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
