use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("delay unresolvable at this step size (tau/2 = {half_tau} < dt = {dt})")]
    DelayUnresolvable { half_tau: f64, dt: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported excitation number {0} (at most 3)")]
    UnsupportedExcitation(usize),
    #[error("dephasing unsupported at n=3")]
    DephasingUnsupported,
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("refused: {0}")]
    Refused(String),
}

pub type Result<T> = std::result::Result<T, Error>;
