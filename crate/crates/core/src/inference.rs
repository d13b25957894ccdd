//! Tests, intervals and diagnostics built on the kernel estimates.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, EcdmError, Result};
use crate::kernel::{self, EstimateBundle, SplitTable};
use crate::normal::{normal_quantile, normal_sf};
use crate::sample::PairedSample;

/// Default κ̂ cutoff below which the strong-signal regime is reported.
pub const DEFAULT_KAPPA_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    /// Reject when the statistic exceeds `z_alpha`.
    #[default]
    Upper,
    /// Reject when `|statistic|` exceeds `z_{alpha/2}`.
    TwoSided,
}

/// Two-sided interval for a nonnegative squared norm, clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Set when the unclamped upper end was negative; the interval is
    /// then reported as `[0, 0]` but is empty as a set.
    pub degenerate: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        !self.degenerate && self.lower <= value && value <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub ci: ConfidenceInterval,
}

impl TestOutcome {
    fn decide(statistic: f64, alpha: f64, sidedness: Sidedness, ci: ConfidenceInterval) -> Result<Self> {
        let (critical_value, p_value, reject) = match sidedness {
            Sidedness::Upper => {
                let z = normal_quantile(alpha)?;
                (z, normal_sf(statistic), statistic > z)
            }
            Sidedness::TwoSided => {
                let z = normal_quantile(alpha / 2.0)?;
                let p = (2.0 * normal_sf(statistic.abs())).min(1.0);
                (z, p, statistic.abs() > z)
            }
        };
        Ok(Self { statistic, critical_value, p_value, reject, alpha, sidedness, ci })
    }
}

fn check_test_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(invalid(format!("alpha = {alpha} must lie in (0, 0.5)")))
    }
}

/// `[max(t - z_{α/2} δ, 0), t + z_{α/2} δ]`.
pub fn confidence_interval(t_hat: f64, delta_scale: f64, alpha: f64) -> Result<ConfidenceInterval> {
    if !(delta_scale > 0.0) || !delta_scale.is_finite() {
        return Err(invalid(format!("scale {delta_scale} must be positive and finite")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let half = normal_quantile(alpha / 2.0)? * delta_scale;
    let upper = t_hat + half;
    if upper < 0.0 {
        return Ok(ConfidenceInterval { lower: 0.0, upper: 0.0, degenerate: true });
    }
    Ok(ConfidenceInterval { lower: (t_hat - half).max(0.0), upper, degenerate: false })
}

/// The one-sided correlation test from precomputed estimates.
pub fn correlation_test_from_bundle(bundle: &EstimateBundle, alpha: f64) -> Result<TestOutcome> {
    check_test_alpha(alpha)?;
    if !(bundle.delta_scale > 0.0) {
        return Err(EcdmError::DegenerateScale {
            block: if bundle.w1 > 0.0 { 2 } else { 1 },
            constant_columns: Vec::new(),
        });
    }
    let ci = confidence_interval(bundle.t_hat, bundle.delta_scale, alpha)?;
    TestOutcome::decide(bundle.t_hat / bundle.delta_scale, alpha, Sidedness::Upper, ci)
}

/// Test of zero cross-covariance between the two blocks: reject when
/// `T / δ̂ > z_alpha`.
pub fn correlation_test(sample: &PairedSample, alpha: f64) -> Result<TestOutcome> {
    check_test_alpha(alpha)?;
    let bundle = kernel::estimate_bundle(sample)?;
    correlation_test_from_bundle(&bundle, alpha)
}

/// `κ̂ = W1 W2 / (n T)^2`.
pub fn kappa_hat(bundle: &EstimateBundle, n: usize) -> Result<f64> {
    if bundle.t_hat == 0.0 {
        return Err(EcdmError::UndefinedDiagnostic("kappa needs T != 0".into()));
    }
    let nt = n as f64 * bundle.t_hat;
    Ok(bundle.w1 * bundle.w2 / (nt * nt))
}

/// Sample RV-coefficient `T / sqrt(W1 W2)`, unclamped.
pub fn rv_hat(bundle: &EstimateBundle) -> Result<f64> {
    if !(bundle.w1 > 0.0) || !(bundle.w2 > 0.0) {
        return Err(EcdmError::DegenerateScale {
            block: if bundle.w1 > 0.0 { 2 } else { 1 },
            constant_columns: Vec::new(),
        });
    }
    Ok(bundle.t_hat / (bundle.w1 * bundle.w2).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `None` when `T = 0`.
    pub kappa: Option<f64>,
    pub kappa_threshold: f64,
    /// κ̂ below the threshold, suggesting the strong-signal regime.
    pub kappa_small: bool,
    pub rv: f64,
    pub rv_clamped: f64,
}

pub fn diagnostics(bundle: &EstimateBundle, kappa_threshold: f64) -> Result<Diagnostics> {
    let kappa = match kappa_hat(bundle, bundle.n) {
        Ok(k) => Some(k),
        Err(EcdmError::UndefinedDiagnostic(_)) => None,
        Err(e) => return Err(e),
    };
    let rv = rv_hat(bundle)?;
    Ok(Diagnostics {
        kappa,
        kappa_threshold,
        kappa_small: kappa.is_some_and(|k| k < kappa_threshold),
        rv,
        rv_clamped: rv.clamp(0.0, 1.0),
    })
}

/// Estimates, test and diagnostics for one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub bundle: EstimateBundle,
    pub test: TestOutcome,
    pub diagnostics: Diagnostics,
}

pub fn analyze(sample: &PairedSample, alpha: f64, kappa_threshold: f64) -> Result<Analysis> {
    check_test_alpha(alpha)?;
    let bundle = kernel::estimate_bundle(sample)?;
    let test = correlation_test_from_bundle(&bundle, alpha)?;
    let diagnostics = diagnostics(&bundle, kappa_threshold)?;
    Ok(Analysis { bundle, test, diagnostics })
}

/// A candidate `p1 x p2` cross-covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureHypothesis {
    sigma0: Array2<f64>,
    norm_sq: f64,
}

impl StructureHypothesis {
    pub fn new(sigma0: Array2<f64>) -> Result<Self> {
        if sigma0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("candidate cross-covariance has non-finite entries"));
        }
        let sigma0 = sigma0.as_standard_layout().into_owned();
        let norm_sq = sigma0.iter().map(|v| v * v).sum();
        Ok(Self { sigma0, norm_sq })
    }

    pub fn zeros(p1: usize, p2: usize) -> Self {
        Self { sigma0: Array2::zeros((p1, p2)), norm_sq: 0.0 }
    }

    pub fn sigma0(&self) -> ArrayView2<'_, f64> {
        self.sigma0.view()
    }

    /// Squared Frobenius norm of the candidate.
    pub fn sigma0_norm_sq(&self) -> f64 {
        self.norm_sq
    }

    fn check(&self, sample: &PairedSample) -> Result<()> {
        if self.sigma0.dim() != (sample.p1(), sample.p2()) {
            return Err(EcdmError::DimensionMismatch(format!(
                "candidate is {} x {}, sample blocks are {} and {} wide",
                self.sigma0.nrows(),
                self.sigma0.ncols(),
                sample.p1(),
                sample.p2()
            )));
        }
        Ok(())
    }
}

/// Unbiased estimate of `||Σ* - Σ0||_F^2`, together with the plain estimates.
pub fn structure_estimates(
    sample: &PairedSample,
    hyp: &StructureHypothesis,
) -> Result<(f64, EstimateBundle)> {
    hyp.check(sample)?;
    let table = SplitTable::build(sample);
    let bundle = kernel::raw_bundle(sample, &table, kernel::Evaluation::Sequential);
    let n = sample.n() as f64;
    let correction = table.structure_correction(sample, hyp.sigma0());
    let t0 = bundle.t_hat - 2.0 / (n * (n - 1.0)) * correction + hyp.norm_sq;
    Ok((t0, bundle))
}

pub fn structure_stat(sample: &PairedSample, hyp: &StructureHypothesis) -> Result<f64> {
    structure_estimates(sample, hyp).map(|(t0, _)| t0)
}

/// Test of `Σ* = Σ0` using `T0 / δ̂`.
pub fn structure_test(
    sample: &PairedSample,
    hyp: &StructureHypothesis,
    alpha: f64,
    sidedness: Sidedness,
) -> Result<(f64, TestOutcome)> {
    check_test_alpha(alpha)?;
    let (t0, bundle) = structure_estimates(sample, hyp)?;
    kernel::check_scale(sample, &bundle)?;
    let ci = confidence_interval(t0, bundle.delta_scale, alpha)?;
    let outcome = TestOutcome::decide(t0 / bundle.delta_scale, alpha, sidedness, ci)?;
    Ok((t0, outcome))
}
