//! Model-based estimators of the reference source.
//!
//! None of these form an explicit inverse: every `[·]⁻¹` is applied through a
//! cached Cholesky factor.

mod bank;
mod lmmse;

pub use bank::{required_bytes, BankOptions, FilterBank, MmseStats, OracleFilter, PosteriorTable, Triple};
pub use lmmse::LmmseFilter;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) fn check_len(expected: usize, y: &[Complex64]) -> Result<()> {
    if y.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: y.len(),
        });
    }
    Ok(())
}

/// Per-sample squared error `‖a − b‖² / N`.
pub fn per_sample_error(estimate: &[Complex64], truth: &[Complex64]) -> f64 {
    assert_eq!(estimate.len(), truth.len());
    estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / truth.len() as f64
}
