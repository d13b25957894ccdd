use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn default_base1() -> f64 {
    0.3
}

fn default_base2() -> f64 {
    0.4
}

fn default_scaled() -> bool {
    true
}

/// Block covariances `Σ_i[j,k] = b_j b_k base_i^(|j-k|^(1/3))`, with
/// `b_j = sqrt(0.5 + j/(p_i+1))` when scaled and `b_j = 1` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovSpec {
    pub p1: usize,
    pub p2: usize,
    #[serde(default = "default_base1")]
    pub base1: f64,
    #[serde(default = "default_base2")]
    pub base2: f64,
    #[serde(default = "default_scaled")]
    pub scaled: bool,
}

impl CovSpec {
    /// The standard setting: bases 0.3 and 0.4, scaled diagonal.
    pub fn standard(p1: usize, p2: usize) -> Self {
        Self { p1, p2, base1: 0.3, base2: 0.4, scaled: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p1 == 0 || self.p2 == 0 {
            return Err(invalid("covariance.p1 and covariance.p2 must be positive"));
        }
        for (name, b) in [("base1", self.base1), ("base2", self.base2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(invalid(format!("covariance.{name} = {b} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// One decaying-correlation block of dimension `p`.
pub fn decay_block(p: usize, base: f64, scaled: bool) -> Array2<f64> {
    let b: Vec<f64> = (1..=p)
        .map(|j| if scaled { (0.5 + j as f64 / (p as f64 + 1.0)).sqrt() } else { 1.0 })
        .collect();
    Array2::from_shape_fn((p, p), |(j, k)| {
        let lag = j.abs_diff(k) as f64;
        b[j] * b[k] * base.powf(lag.cbrt())
    })
}

pub fn build_sigma(spec: &CovSpec) -> Result<(Array2<f64>, Array2<f64>)> {
    spec.validate()?;
    Ok((
        decay_block(spec.p1, spec.base1, spec.scaled),
        decay_block(spec.p2, spec.base2, spec.scaled),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_unscaled_block() {
        let s = decay_block(2, 0.3, false);
        assert_eq!(s, ndarray::array![[1.0, 0.3], [0.3, 1.0]]);
    }

    #[test]
    fn perfect_cube_lag() {
        let s = decay_block(9, 0.3, false);
        assert!((s[[0, 8]] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn scaled_trace_equals_dimension() {
        for p in [1, 2, 3, 10, 64, 257] {
            let s = decay_block(p, 0.4, true);
            assert!((s.diag().sum() - p as f64).abs() < 1e-10 * p as f64, "p = {p}");
            assert_eq!(s, s.t());
        }
    }

    #[test]
    fn rejects_bad_bases() {
        assert!(build_sigma(&CovSpec { base1: 1.0, ..CovSpec::standard(3, 3) }).is_err());
        assert!(build_sigma(&CovSpec::standard(0, 3)).is_err());
    }
}
