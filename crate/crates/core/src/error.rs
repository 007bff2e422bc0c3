// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge: partial value {value}, error bound {error:e}")]
    NonConvergence { value: Complex64, error: f64 },

    #[error("transition rate is zero; transfer distribution is undefined")]
    ZeroRate,

    #[error("probability leaked off the momentum grid: {leaked:e} exceeds bound {bound:e}")]
    GridLeak { leaked: f64, bound: f64 },

    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
