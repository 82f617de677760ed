use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fixed-point solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("PD detuning {delta_eg:.3e} rad/s is below the degeneracy threshold {eps:.3e} rad/s")]
    DegenerateDetuning { delta_eg: f64, eps: f64 },

    #[error("drift matrix is not Hurwitz (spectral abscissa {abscissa:.3e})")]
    UnstableDrift { abscissa: f64 },

    #[error("Lyapunov system is singular")]
    SingularLyapunov,

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    #[error("covariance matrix is not physical: {0}")]
    NonPhysicalCm(String),

    #[error("unknown mode pair `{0}`")]
    InvalidPair(String),

    #[error("target transmissivity is zero, no return signal")]
    AbsorbingTarget,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
