//! Named inequality checks.

use serde::{Deserialize, Serialize};

use crate::real::Real;

/// Outcome of a single inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Check<T> {
    pub name: String,
    pub lhs: T,
    pub rhs: T,
    pub pass: bool,
}

impl<T: Real> Check<T> {
    /// `lhs <= rhs` up to `rel_tol |rhs|`.
    pub fn le(name: &str, lhs: T, rhs: T, rel_tol: T) -> Self {
        Check {
            name: name.to_string(),
            lhs,
            rhs,
            pass: lhs <= rhs + rel_tol * rhs.abs(),
        }
    }

    /// `lhs == rhs` up to `rel_tol max(|lhs|, |rhs|, 1)`.
    pub fn eq(name: &str, lhs: T, rhs: T, rel_tol: T) -> Self {
        Check {
            name: name.to_string(),
            lhs,
            rhs,
            pass: (lhs - rhs).abs() <= rel_tol * lhs.abs().max(rhs.abs()).max(T::one()),
        }
    }

    /// `rhs - lhs`.
    pub fn slack(&self) -> T {
        self.rhs - self.lhs
    }
}

