use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid config: {key}: {constraint} (got {value})")]
    Validation {
        key: String,
        value: String,
        constraint: String,
    },

    #[error("wave-plate angle {theta} rad outside the domain cos(theta) <= 0")]
    AngleDomain { theta: f64 },

    #[error("frequency {omega} rad/fs outside tabulated band [{lo}, {hi}]")]
    OutOfBand { omega: f64, lo: f64, hi: f64 },

    #[error("{path}: line {line}: {msg}")]
    Table {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("kernel singular at rho = 0 (coincidence limit)")]
    Coincidence,

    #[error("point (rho = {rho} um, tau = {tau} fs) lies on the light cone")]
    LightCone { rho: f64, tau: f64 },

    #[error("grid cannot resolve {feature}: {samples:.1} samples per feature, need at least 8")]
    GridResolution { feature: &'static str, samples: f64 },

    #[error("boundary formula undefined: radicand {radicand} < 0")]
    BoundaryDomain { radicand: f64 },

    #[error("quadrature did not converge: estimated error {error:e} > tolerance {tolerance:e}")]
    Convergence { error: f64, tolerance: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("scan window too narrow: edge/peak ratio {ratio:.3} exceeds 0.05")]
    WindowTooNarrow { ratio: f64 },

    #[error("series needs at least {min} uniform samples, got {got}")]
    GridTooCoarse { min: usize, got: usize },

    #[error("could not bracket region extrema: {0}")]
    UnresolvedSupport(String),
}

impl Error {
    pub fn validation(key: &str, value: impl ToString, constraint: &str) -> Self {
        Error::Validation {
            key: key.to_string(),
            value: value.to_string(),
            constraint: constraint.to_string(),
        }
    }

    /// Errors that stem from bad input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Validation { .. }
                | Error::AngleDomain { .. }
                | Error::Table { .. }
                | Error::Io { .. }
                | Error::Unsupported(_)
        )
    }
}
