//! Sample generation from the latent-factor model `x_j = Γ w_j`.

use ndarray::{s, Array1, Array2};
use rand::Rng;
use rand_distr::{ChiSquared, StandardNormal};

use crate::error::Result;
use crate::sample::PairedSample;
use crate::simulation::covariance::build_sigma;
use crate::simulation::eigen::{sym_eig, SymEigen};
use crate::simulation::rng::replication_stream;
use crate::simulation::scenario::{Coupling, Distribution, SimScenario};

const T_DOF: f64 = 10.0;

/// Everything about a scenario that does not change between replications.
#[derive(Debug, Clone)]
pub struct Model {
    pub scenario: SimScenario,
    pub n: usize,
    pub sigma1: Array2<f64>,
    pub sigma2: Array2<f64>,
    pub eig1: SymEigen,
    pub eig2: SymEigen,
    /// `H_i Λ_i^(1/2)`, `p_i x p_i`.
    pub gamma1: Array2<f64>,
    pub gamma2: Array2<f64>,
}

fn loading(e: &SymEigen) -> Array2<f64> {
    let root: Array1<f64> = e.eigenvalues.mapv(|l| l.max(0.0).sqrt());
    &e.eigenvectors * &root
}

impl Model {
    pub fn new(scenario: &SimScenario) -> Result<Self> {
        scenario.validate()?;
        let (sigma1, sigma2) = build_sigma(&scenario.covariance)?;
        let eig1 = sym_eig(sigma1.view())?;
        let eig2 = sym_eig(sigma2.view())?;
        let gamma1 = loading(&eig1);
        let gamma2 = loading(&eig2);
        Ok(Self {
            scenario: scenario.clone(),
            n: scenario.sample_size(),
            sigma1,
            sigma2,
            eig1,
            eig2,
            gamma1,
            gamma2,
        })
    }

    pub fn p1(&self) -> usize {
        self.sigma1.nrows()
    }

    pub fn p2(&self) -> usize {
        self.sigma2.nrows()
    }

    /// Latent coordinate feeding block 2's eigen-coordinate `r` (0-based).
    pub fn block2_coordinate(&self, r: usize) -> usize {
        match self.scenario.coupling {
            Coupling::SharedCoordinateCaseB if r == 2 => 2,
            _ => self.p1() + r,
        }
    }

    /// True cross-covariance `Γ1 Γ2^T` restricted to shared coordinates.
    pub fn sigma_star(&self) -> Array2<f64> {
        match self.scenario.coupling {
            Coupling::NullCaseA => Array2::zeros((self.p1(), self.p2())),
            Coupling::SharedCoordinateCaseB => {
                let g1 = self.gamma1.column(2).to_owned().insert_axis(ndarray::Axis(1));
                let g2 = self.gamma2.column(2).to_owned().insert_axis(ndarray::Axis(0));
                g1.dot(&g2)
            }
        }
    }

    /// Latent `n x p` matrix of standardized coordinates.
    pub fn latent<R: Rng + ?Sized>(&self, rng: &mut R) -> Array2<f64> {
        let q = self.p1() + self.p2();
        let dist = self.scenario.distribution;
        let chi = ChiSquared::new(T_DOF).expect("positive degrees of freedom");
        let t_scale = ((T_DOF - 2.0) / T_DOF).sqrt();
        let mut w = Array2::<f64>::zeros((self.n, q));
        for mut row in w.rows_mut() {
            match dist {
                Distribution::GaussianI => {
                    row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                }
                Distribution::ChisqII => {
                    row.iter_mut().for_each(|v| {
                        let z: f64 = rng.sample(StandardNormal);
                        *v = (z * z - 1.0) / std::f64::consts::SQRT_2;
                    });
                }
                Distribution::T10III => {
                    row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                    let u: f64 = rng.sample(chi);
                    let factor = t_scale / (u / T_DOF).sqrt();
                    row.mapv_inplace(|v| v * factor);
                }
            }
        }
        w
    }

    /// Map latent coordinates to a paired sample.
    pub fn sample_from_latent(&self, w: &Array2<f64>) -> Result<PairedSample> {
        let w1 = w.slice(s![.., ..self.p1()]);
        let mut w2 = w.slice(s![.., self.p1()..]).to_owned();
        if self.scenario.coupling == Coupling::SharedCoordinateCaseB {
            let shared = w.column(self.block2_coordinate(2));
            w2.column_mut(2).assign(&shared);
        }
        let x1 = w1.dot(&self.gamma1.t());
        let x2 = w2.dot(&self.gamma2.t());
        PairedSample::from_blocks(x1, x2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PairedSample> {
        let w = self.latent(rng);
        self.sample_from_latent(&w)
    }

    /// The sample for replication `r` of this scenario's seed.
    pub fn replication(&self, r: u64) -> Result<PairedSample> {
        let mut rng = replication_stream(self.scenario.seed, r);
        self.sample(&mut rng)
    }
}

/// Generate one paired sample for `scenario` from `rng`.
pub fn gen_sample<R: Rng + ?Sized>(scenario: &SimScenario, rng: &mut R) -> Result<PairedSample> {
    Model::new(scenario)?.sample(rng)
}
