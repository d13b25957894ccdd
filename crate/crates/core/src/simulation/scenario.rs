use serde::{Deserialize, Serialize};

use crate::error::{invalid, EcdmError, Result};
use crate::simulation::covariance::CovSpec;

/// How the two blocks share latent coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Disjoint latent coordinates: zero cross-covariance.
    #[serde(alias = "null", alias = "a")]
    NullCaseA,
    /// Block 2's third eigen-coordinate reuses block 1's third latent
    /// coordinate, giving a rank-one cross-covariance.
    #[serde(alias = "shared", alias = "b")]
    SharedCoordinateCaseB,
}

/// Law of the standardized latent coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Independent N(0, 1).
    #[serde(rename = "gaussian_i", alias = "gaussian", alias = "i")]
    GaussianI,
    /// Independent `(v - 1)/sqrt(2)` with `v ~ χ²_1`.
    #[serde(rename = "chisq_ii", alias = "chisq", alias = "ii")]
    ChisqII,
    /// Multivariate t with 10 degrees of freedom and identity covariance.
    #[serde(rename = "t10_iii", alias = "t10", alias = "iii")]
    T10III,
}

impl Distribution {
    /// `Var(w^2)` of one latent coordinate, when coordinates are independent.
    pub fn fourth_moment_excess(self) -> Option<f64> {
        match self {
            Distribution::GaussianI => Some(2.0),
            Distribution::ChisqII => Some(14.0),
            Distribution::T10III => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedRule {
    /// `n = 4 ceil(sqrt(p1))`.
    FourSqrtP1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NRule {
    Explicit(usize),
    Rule(NamedRule),
}

fn default_alpha() -> f64 {
    0.05
}

fn default_n_rule() -> NRule {
    NRule::Rule(NamedRule::FourSqrtP1)
}

/// A complete Monte Carlo case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub covariance: CovSpec,
    pub coupling: Coupling,
    pub distribution: Distribution,
    #[serde(default = "default_n_rule")]
    pub n: NRule,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl SimScenario {
    /// Equal blocks of size `p/2`, standard covariances and `n = 4 ceil(sqrt(p1))`.
    pub fn standard(p: usize, coupling: Coupling, distribution: Distribution, replications: usize, seed: u64) -> Self {
        Self {
            covariance: CovSpec::standard(p / 2, p - p / 2),
            coupling,
            distribution,
            n: default_n_rule(),
            replications,
            seed,
            alpha: 0.05,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = NRule::Explicit(n);
        self
    }

    pub fn p(&self) -> usize {
        self.covariance.p1 + self.covariance.p2
    }

    pub fn sample_size(&self) -> usize {
        match self.n {
            NRule::Explicit(n) => n,
            NRule::Rule(NamedRule::FourSqrtP1) => {
                4 * (self.covariance.p1 as f64).sqrt().ceil() as usize
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.covariance.validate()?;
        if self.coupling == Coupling::SharedCoordinateCaseB
            && (self.covariance.p1 < 3 || self.covariance.p2 < 3)
        {
            return Err(invalid(format!(
                "coupling: shared_coordinate_case_b needs p1 >= 3 and p2 >= 3 (got p1 = {}, p2 = {})",
                self.covariance.p1, self.covariance.p2
            )));
        }
        let n = self.sample_size();
        if n < 4 {
            return Err(invalid(format!("n: sample size {n} must be at least 4")));
        }
        if self.replications == 0 {
            return Err(invalid("replications: must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(invalid(format!("alpha: {} must lie in (0, 0.5)", self.alpha)));
        }
        Ok(())
    }

    /// Parse and validate a TOML scenario.
    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Self = toml::from_str(text).map_err(|e| EcdmError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}
