//! Generative models, population oracles and the Monte Carlo engine.

pub mod covariance;
pub mod eigen;
pub mod generate;
pub mod monte_carlo;
pub mod oracle;
pub mod rng;
pub mod scenario;

pub use covariance::{build_sigma, CovSpec};
pub use eigen::{sym_eig, SymEigen};
pub use generate::{gen_sample, Model};
pub use monte_carlo::{run_model, run_monte_carlo, ReplicationRecord, SimReport, SimRun};
pub use oracle::{oracle_quantities, OracleQuantities};
pub use rng::replication_stream;
pub use scenario::{Coupling, Distribution, NRule, SimScenario};
