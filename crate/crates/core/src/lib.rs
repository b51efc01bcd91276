//! Simulation, estimation and benchmarking for single-channel separation of two
//! cyclostationary complex Gaussian sources observed as
//! `y = s + κ·b + σ·z`.
//!
//! * [`models`]: block-covariance, RRC single-carrier and OFDM source processes
//!   with exact conditional and marginal covariances.
//! * [`mixture`]: mixture synthesis with random offsets and SIR levels.
//! * [`estimators`]: LMMSE, oracle-synchronized MMSE and posterior-weighted MMSE.
//! * [`benchmark`]: Monte Carlo MSE-vs-SIR sweeps and curve files.
//! * [`dataset`] / [`matrix_io`]: binary exchange formats.

// `!(x > t)` deliberately rejects NaN along with values at or below `t`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod curves;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod matrix_io;
pub mod mixture;
pub mod models;

pub use error::{Error, Result};
