//! Sample-covariance based comparison estimators (Srivastava and Reid).
//!
//! Traces of products of sample covariance matrices are computed from the
//! `n x n` Gram matrices of the centered blocks, never from `p x p` products.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, EcdmError, Result};
use crate::inference::{confidence_interval, TestOutcome};
use crate::normal::{normal_quantile, normal_sf};
use crate::sample::PairedSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrBundle {
    pub delta_sr: f64,
    pub w1_sr: f64,
    pub w2_sr: f64,
    /// `sqrt(2 W1 W2) / n`, `None` when `W1 W2 <= 0`.
    pub delta_scale_sr: Option<f64>,
}

/// Gram matrix of the column-centered block.
fn centered_gram(block: ArrayView2<'_, f64>) -> Array2<f64> {
    let mean = block.mean_axis(Axis(0)).expect("n >= 1");
    let centered = &block - &mean;
    centered.dot(&centered.t())
}

fn bias_factor(n: usize) -> f64 {
    let n = n as f64;
    (n - 1.0).powi(2) / ((n - 2.0) * (n + 1.0))
}

fn trace(g: &Array2<f64>) -> f64 {
    g.diag().sum()
}

fn frobenius_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Trace and trace-of-square of the sample covariance of one block.
fn cov_traces(gram: &Array2<f64>, n: usize) -> (f64, f64) {
    let d = (n - 1) as f64;
    (trace(gram) / d, frobenius_inner(gram, gram) / (d * d))
}

/// Bias-corrected estimate of `tr(Σ²)` for one block (may be negative).
pub fn sr_w(block: ArrayView2<'_, f64>) -> Result<f64> {
    let n = block.nrows();
    if n < 4 {
        return Err(invalid(format!("need n >= 4, got {n}")));
    }
    let (tr, tr2) = cov_traces(&centered_gram(block), n);
    Ok(bias_factor(n) * (tr2 - tr * tr / (n - 1) as f64))
}

pub fn sr_bundle(sample: &PairedSample) -> SrBundle {
    let n = sample.n();
    let g1 = centered_gram(sample.block1().view());
    let g2 = centered_gram(sample.block2().view());
    let d = (n - 1) as f64;
    let c = bias_factor(n);
    let (tr1, tr1sq) = cov_traces(&g1, n);
    let (tr2, tr2sq) = cov_traces(&g2, n);
    let cross = frobenius_inner(&g1, &g2) / (d * d);
    let delta_sr = c * (cross - tr1 * tr2 / d);
    let w1_sr = c * (tr1sq - tr1 * tr1 / d);
    let w2_sr = c * (tr2sq - tr2 * tr2 / d);
    let delta_scale_sr = (w1_sr * w2_sr > 0.0).then(|| (2.0 * w1_sr * w2_sr).sqrt() / n as f64);
    SrBundle { delta_sr, w1_sr, w2_sr, delta_scale_sr }
}

/// Estimate of the squared Frobenius norm of the cross-covariance,
/// unbiased under Gaussian data.
pub fn sr_delta(sample: &PairedSample) -> f64 {
    sr_bundle(sample).delta_sr
}

pub fn sr_test_from_bundle(b: &SrBundle, alpha: f64) -> Result<TestOutcome> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(invalid(format!("alpha = {alpha} must lie in (0, 0.5)")));
    }
    let scale = b
        .delta_scale_sr
        .ok_or(EcdmError::NonpositiveScale(b.w1_sr * b.w2_sr))?;
    let statistic = b.delta_sr / scale;
    let z = normal_quantile(alpha)?;
    Ok(TestOutcome {
        statistic,
        critical_value: z,
        p_value: normal_sf(statistic),
        reject: statistic > z,
        alpha,
        sidedness: crate::inference::Sidedness::Upper,
        ci: confidence_interval(b.delta_sr, scale, alpha)?,
    })
}

/// The same one-sided rule as the cross-data-matrix test, applied to
/// `Δ_SR / δ_SR`.
pub fn sr_test(sample: &PairedSample, alpha: f64) -> Result<TestOutcome> {
    sr_test_from_bundle(&sr_bundle(sample), alpha)
}
