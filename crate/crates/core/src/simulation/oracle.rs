//! Population quantities for a scenario, computed from its covariances.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{EcdmError, Result};
use crate::normal::{normal_cdf, normal_quantile};
use crate::simulation::generate::Model;
use crate::simulation::scenario::{Coupling, SimScenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleQuantities {
    pub n: usize,
    /// `||Σ*||_F^2`.
    pub delta: f64,
    pub tr_sigma1_sq: f64,
    pub tr_sigma2_sq: f64,
    /// `sqrt(2 tr(Σ1²) tr(Σ2²)) / n`.
    pub delta_scale_pop: f64,
    /// Asymptotic standard deviation of the estimator; needs independent
    /// latent coordinates with known fourth moments.
    pub k_pop: Option<f64>,
    /// Asymptotic power `Φ(Δ/K - z_α δ/K)`.
    pub l_pop: Option<f64>,
    /// Population RV-coefficient.
    pub rho_pop: f64,
    /// `tr(Σi⁴)/tr(Σi²)²`.
    pub a3_ratio_1: f64,
    pub a3_ratio_2: f64,
    /// `tr(Σ1²) tr(Σ2²) / (n² Δ²)`; `None` when `Δ = 0`.
    pub a45_ratio: Option<f64>,
}

impl OracleQuantities {
    pub fn k(&self) -> Result<f64> {
        self.k_pop.ok_or_else(unsupported)
    }

    pub fn l(&self) -> Result<f64> {
        self.l_pop.ok_or_else(unsupported)
    }
}

fn unsupported() -> EcdmError {
    EcdmError::UnsupportedAssumption(
        "K and L need independent latent coordinates; the multivariate t family does not have them".into(),
    )
}

fn quad(v: ArrayView1<'_, f64>, m: &Array2<f64>, u: ArrayView1<'_, f64>) -> f64 {
    v.dot(&m.dot(&u))
}

fn power_sums(eigenvalues: &Array1<f64>) -> (f64, f64) {
    eigenvalues.iter().fold((0.0, 0.0), |(s2, s4), l| {
        let l2 = l * l;
        (s2 + l2, s4 + l2 * l2)
    })
}

/// Population truths for a prebuilt model.
pub fn oracle_for_model(model: &Model) -> Result<OracleQuantities> {
    let scenario = &model.scenario;
    let n = model.n as f64;
    let (tr1, tr1_4) = power_sums(&model.eig1.eigenvalues);
    let (tr2, tr2_4) = power_sums(&model.eig2.eigenvalues);
    let psi = tr1 * tr2;

    // Σ* = c a b^T with unit a, b in the shared case.
    let (delta, variance_terms) = match scenario.coupling {
        Coupling::NullCaseA => (0.0, 0.0),
        Coupling::SharedCoordinateCaseB => {
            let a = model.eig1.eigenvectors.column(2);
            let b = model.eig2.eigenvectors.column(2);
            let c = (model.eig1.eigenvalues[2] * model.eig2.eigenvalues[2]).max(0.0).sqrt();
            let norm_ab = a.dot(&a) * b.dot(&b);
            let delta = c * c * norm_ab;
            // tr(Σ1 Σ* Σ2 Σ*^T) and tr((Σ* Σ*^T)^2)
            let cross = c * c * quad(a, &model.sigma1, a) * quad(b, &model.sigma2, b);
            let fourth = delta * delta;
            // Only the shared coordinate has both loadings nonzero.
            let g1 = model.gamma1.column(2);
            let g2 = model.gamma2.column(2);
            let gamma_form = c * g1.dot(&a) * b.dot(&g2);
            let excess = scenario
                .distribution
                .fourth_moment_excess()
                .map(|m| (m - 2.0) * gamma_form * gamma_form);
            (delta, cross + fourth + excess.unwrap_or(f64::NAN))
        }
    };

    let k_pop = scenario.distribution.fourth_moment_excess().map(|_| {
        (4.0 * variance_terms / n + 2.0 * (psi + delta * delta) / (n * n)).sqrt()
    });
    let delta_scale_pop = (2.0 * psi).sqrt() / n;
    let z = normal_quantile(scenario.alpha)?;
    let l_pop = k_pop.map(|k| normal_cdf(delta / k - z * delta_scale_pop / k));

    Ok(OracleQuantities {
        n: model.n,
        delta,
        tr_sigma1_sq: tr1,
        tr_sigma2_sq: tr2,
        delta_scale_pop,
        k_pop,
        l_pop,
        rho_pop: delta / psi.sqrt(),
        a3_ratio_1: tr1_4 / (tr1 * tr1),
        a3_ratio_2: tr2_4 / (tr2 * tr2),
        a45_ratio: (delta > 0.0).then(|| psi / (n * n * delta * delta)),
    })
}

pub fn oracle_quantities(scenario: &SimScenario) -> Result<OracleQuantities> {
    oracle_for_model(&Model::new(scenario)?)
}
