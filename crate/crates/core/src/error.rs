use thiserror::Error;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("no cutoff radius found before r = {r_max}; k too close to 7/2 or kappa pathological")]
    NoCutoffFound { r_max: f64 },

    #[error("ODE integrator failed: {0}")]
    IntegratorFailure(String),

    #[error("no sign change when bracketing root of {context} on ({lo}, {hi})")]
    BracketFailure { context: &'static str, lo: f64, hi: f64 },

    #[error("root of {0} not bracketed; profile may be corrupt")]
    RootNotBracketed(&'static str),

    #[error("quadrature did not converge: {context} (last change {change:e})")]
    QuadratureNotConverged { context: &'static str, change: f64 },

    #[error("r = {r} outside orbit range [{r_minus}, {r_plus}]")]
    OutOfRange { r: f64, r_minus: f64, r_plus: f64 },

    #[error("spectral parameter {lambda} hits the essential band: k^2 omega1^2 - lambda <= 0")]
    SpectrumHit { lambda: f64 },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
