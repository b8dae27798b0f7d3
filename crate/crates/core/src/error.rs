use std::fmt;

use thiserror::Error;

/// One violated scenario invariant, addressed by its field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{} {}", self.path, self.message)
        }
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("validation failed: {}", join(.0))]
    Validation(Vec<Violation>),

    #[error("degenerate scenario: {0}")]
    Degenerate(String),

    #[error("user index {index} out of range for {len} users")]
    IndexOutOfRange { index: usize, len: usize },

    /// The closed-form follower solution left [0,1] for at least one user.
    #[error("closed-form equilibrium at price {price} is not interior (sum_alpha = {sum_alpha})")]
    NotInterior {
        price: f64,
        raw_alphas: Vec<f64>,
        sum_alpha: f64,
    },

    #[error("follower dynamics at price {price} did not converge after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence {
        price: f64,
        sweeps: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
