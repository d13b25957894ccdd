//! Extended cross-data-matrix (ECDM) inference on the cross-covariance
//! between two blocks of high-dimensional variables.
//!
//! The central quantity is `Δ = ||Σ*||_F^2`, the squared Frobenius norm of
//! the `p1 x p2` cross-covariance. [`kernel`] holds an exactly unbiased
//! estimator of it computed in `O(n² p)`, together with unbiased estimates
//! of `tr(Σ1²)` and `tr(Σ2²)`. [`inference`] turns those into a test of
//! `Δ = 0`, a confidence interval, the RV-coefficient and a test against a
//! candidate cross-covariance. [`simulation`] reproduces size, power and
//! normality studies with reproducible parallel Monte Carlo.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod normal;
pub mod sample;
pub mod simulation;

pub use error::{EcdmError, Result};
pub use inference::{
    analyze, confidence_interval, correlation_test, kappa_hat, rv_hat, structure_stat, structure_test,
    Analysis, ConfidenceInterval, Diagnostics, Sidedness, StructureHypothesis, TestOutcome,
};
pub use kernel::{estimate_bundle, index_sets, t_hat, w_stat, EstimateBundle, SplitTable};
pub use normal::{normal_cdf, normal_quantile};
pub use sample::PairedSample;
