//! Cross-data-matrix estimator kernel.
//!
//! For every index sum `k = i + j` the sample is split into two disjoint
//! halves of sizes `n1 = ceil(n/2)` and `n2 = n - n1`, with `i` always in the
//! first half and `j` in the second. Observation `i` is centered by the mean
//! of the first half and `j` by the mean of the second, so the two centered
//! vectors are independent and the product estimator is exactly unbiased
//! after the `u_n` correction.
//!
//! Sample indices in the public API are 1-based. Storage is 0-based.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, EcdmError, Result};
use crate::sample::PairedSample;

/// Sizes of the two halves: `(ceil(n/2), n - ceil(n/2))`.
pub fn half_sizes(n: usize) -> (usize, usize) {
    let n1 = n.div_ceil(2);
    (n1, n - n1)
}

/// Bias correction `u_n = n1 n2 / ((n1 - 1)(n2 - 1))`.
pub fn u_n(n: usize) -> f64 {
    let (n1, n2) = half_sizes(n);
    (n1 * n2) as f64 / ((n1 - 1) * (n2 - 1)) as f64
}

/// The two index sets for index sum `k`, as 1-based ascending sample indices.
pub fn index_sets(n: usize, k: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 4 {
        return Err(invalid(format!("need n >= 4, got {n}")));
    }
    if k < 3 || k > 2 * n - 1 {
        return Err(invalid(format!("k = {k} outside [3, {}]", 2 * n - 1)));
    }
    let (n1, n2) = half_sizes(n);
    let h = k / 2;
    let v1: Vec<usize> = if h >= n1 {
        (h - n1 + 1..=h).collect()
    } else {
        (1..=h).chain(h + n2 + 1..=n).collect()
    };
    let v2: Vec<usize> = if h <= n1 {
        (h + 1..=h + n2).collect()
    } else {
        (1..=h - n1).chain(h + 1..=n).collect()
    };
    Ok((v1, v2))
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Index sets and cached half-sample means for every `k` in `3..=2n-1`.
#[derive(Debug, Clone)]
pub struct SplitTable {
    n: usize,
    n1: usize,
    n2: usize,
    v1: Vec<Vec<usize>>,
    v2: Vec<Vec<usize>>,
    // means[block][half]: row k - 3 holds the mean over that half for index sum k
    means: [[Array2<f64>; 2]; 2],
}

impl SplitTable {
    pub fn build(sample: &PairedSample) -> Self {
        let n = sample.n();
        let (n1, n2) = half_sizes(n);
        let ks = 2 * n - 3;
        let mut v1 = Vec::with_capacity(ks);
        let mut v2 = Vec::with_capacity(ks);
        for k in 3..=2 * n - 1 {
            let (a, b) = index_sets(n, k).expect("n >= 4 is enforced by PairedSample");
            v1.push(a.into_iter().map(|i| i - 1).collect::<Vec<_>>());
            v2.push(b.into_iter().map(|i| i - 1).collect::<Vec<_>>());
        }
        let block_means = |x: &Array2<f64>, sets: &[Vec<usize>]| {
            let p = x.ncols();
            let mut out = Array2::<f64>::zeros((ks, p));
            for (row, set) in sets.iter().enumerate() {
                let mut acc = out.row_mut(row);
                for &idx in set {
                    acc += &x.row(idx);
                }
                acc /= set.len() as f64;
            }
            out
        };
        let means = [
            [block_means(sample.block1(), &v1), block_means(sample.block1(), &v2)],
            [block_means(sample.block2(), &v1), block_means(sample.block2(), &v2)],
        ];
        Self { n, n1, n2, v1, v2, means }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_sizes(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// First index set for `k`, 1-based.
    pub fn v1(&self, k: usize) -> Vec<usize> {
        self.v1[self.slot(k)].iter().map(|i| i + 1).collect()
    }

    /// Second index set for `k`, 1-based.
    pub fn v2(&self, k: usize) -> Vec<usize> {
        self.v2[self.slot(k)].iter().map(|i| i + 1).collect()
    }

    /// Mean of `block` (1 or 2) over half `half` (1 or 2) for index sum `k`.
    pub fn mean(&self, block: usize, half: usize, k: usize) -> ArrayView1<'_, f64> {
        self.means[block - 1][half - 1].row(self.slot(k))
    }

    fn slot(&self, k: usize) -> usize {
        assert!(
            (3..=2 * self.n - 1).contains(&k),
            "k = {k} outside [3, {}]",
            2 * self.n - 1
        );
        k - 3
    }

    /// Centered inner product `(x_i - mean_1(k))^T (x_j - mean_2(k))` for
    /// block `block`, with 0-based `i < j` and `k = i + j + 2` in 1-based terms.
    #[inline]
    fn cross(&self, x: ArrayView2<'_, f64>, block: usize, i: usize, j: usize) -> f64 {
        let slot = i + j - 1;
        let m1 = self.means[block][0].row(slot);
        let m2 = self.means[block][1].row(slot);
        let xi = x.row(i);
        let xj = x.row(j);
        centered_dot(
            xi.as_slice().expect("standard layout"),
            m1.as_slice().expect("standard layout"),
            xj.as_slice().expect("standard layout"),
            m2.as_slice().expect("standard layout"),
        )
    }

    /// The pairwise term for 1-based `i < j`.
    pub fn pair_term(&self, sample: &PairedSample, i: usize, j: usize) -> Result<f64> {
        self.check_pair(i, j)?;
        let a = self.cross(sample.block1().view(), 0, i - 1, j - 1);
        let b = self.cross(sample.block2().view(), 1, i - 1, j - 1);
        Ok(a * b)
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || i >= j || j > self.n {
            return Err(invalid(format!("need 1 <= i < j <= {}, got ({i}, {j})", self.n)));
        }
        Ok(())
    }

    /// `W` for one block.
    pub fn w_stat(&self, block: ArrayView2<'_, f64>, block_id: usize) -> Result<f64> {
        if !(1..=2).contains(&block_id) {
            return Err(invalid(format!("block id must be 1 or 2, got {block_id}")));
        }
        let expected = self.means[block_id - 1][0].ncols();
        if block.dim() != (self.n, expected) {
            return Err(EcdmError::DimensionMismatch(format!(
                "block {block_id} should be {} x {expected}, got {} x {}",
                self.n,
                block.nrows(),
                block.ncols()
            )));
        }
        let block = block.as_standard_layout();
        let rows: Vec<f64> = (0..self.n)
            .map(|i| {
                let mut acc = CompensatedSum::default();
                for j in i + 1..self.n {
                    let a = self.cross(block.view(), block_id - 1, i, j);
                    acc.add(a * a);
                }
                acc.value()
            })
            .collect();
        Ok(self.scale() * merge_rows(&rows))
    }

    /// `2 u_n / (n (n - 1))`.
    fn scale(&self) -> f64 {
        let n = self.n as f64;
        2.0 * u_n(self.n) / (n * (n - 1.0))
    }

    /// Per-row compensated sums of `(Δ_ij, a_ij^2, b_ij^2)` over `j > i`.
    fn row_sums(&self, sample: &PairedSample, i: usize) -> [f64; 3] {
        let x1 = sample.block1().view();
        let x2 = sample.block2().view();
        let mut acc = [CompensatedSum::default(); 3];
        for j in i + 1..self.n {
            let a = self.cross(x1, 0, i, j);
            let b = self.cross(x2, 1, i, j);
            acc[0].add(a * b);
            acc[1].add(a * a);
            acc[2].add(b * b);
        }
        acc.map(|s| s.value())
    }

    fn bundle_from_rows(&self, rows: &[[f64; 3]]) -> [f64; 3] {
        let scale = self.scale();
        [0, 1, 2].map(|c| {
            let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            scale * merge_rows(&col)
        })
    }

    /// Sum over pairs of the structure-test corrections
    /// `n1/(n1-1) c1i^T S0 c2i + n2/(n2-1) c1j^T S0 c2j`, where `c` are the
    /// half-centered observations for index sum `i + j`.
    pub(crate) fn structure_correction(
        &self,
        sample: &PairedSample,
        sigma0: ArrayView2<'_, f64>,
    ) -> f64 {
        let ks = 2 * self.n - 3;
        // Rows of X1 S0 and of M1(k) S0 so each pair costs O(p2).
        let x1s = sample.block1().dot(&sigma0);
        let m1s = [self.means[0][0].dot(&sigma0), self.means[0][1].dot(&sigma0)];
        let x2 = sample.block2();
        let f1 = self.n1 as f64 / (self.n1 - 1) as f64;
        let f2 = self.n2 as f64 / (self.n2 - 1) as f64;
        debug_assert_eq!(m1s[0].nrows(), ks);
        let rows: Vec<f64> = (0..self.n)
            .map(|i| {
                let mut acc = CompensatedSum::default();
                for j in i + 1..self.n {
                    let slot = i + j - 1;
                    let qi = centered_dot(
                        x1s.row(i).as_slice().unwrap(),
                        m1s[0].row(slot).as_slice().unwrap(),
                        x2.row(i).as_slice().unwrap(),
                        self.means[1][0].row(slot).as_slice().unwrap(),
                    );
                    let qj = centered_dot(
                        x1s.row(j).as_slice().unwrap(),
                        m1s[1].row(slot).as_slice().unwrap(),
                        x2.row(j).as_slice().unwrap(),
                        self.means[1][1].row(slot).as_slice().unwrap(),
                    );
                    acc.add(f1 * qi + f2 * qj);
                }
                acc.value()
            })
            .collect();
        merge_rows(&rows)
    }
}

#[inline]
fn centered_dot(xi: &[f64], mi: &[f64], xj: &[f64], mj: &[f64]) -> f64 {
    xi.iter()
        .zip(mi)
        .zip(xj.iter().zip(mj))
        .map(|((a, b), (c, d))| (a - b) * (c - d))
        .sum()
}

fn merge_rows(rows: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for &r in rows {
        acc.add(r);
    }
    acc.value()
}

/// Point estimates from one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateBundle {
    pub n: usize,
    /// Unbiased estimate of the squared Frobenius norm of the cross-covariance.
    pub t_hat: f64,
    /// Unbiased estimate of tr(Σ1²).
    pub w1: f64,
    /// Unbiased estimate of tr(Σ2²).
    pub w2: f64,
    /// `sqrt(2 w1 w2) / n`.
    pub delta_scale: f64,
    pub u_n: f64,
}

impl EstimateBundle {
    fn from_parts(n: usize, [t_hat, w1, w2]: [f64; 3]) -> Self {
        Self {
            n,
            t_hat,
            w1,
            w2,
            delta_scale: (2.0 * w1 * w2).sqrt() / n as f64,
            u_n: u_n(n),
        }
    }
}

/// How to evaluate the pairwise sums. Both give bitwise identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    #[default]
    Sequential,
    Parallel,
}

/// The unbiased cross-covariance estimate alone.
pub fn t_hat(sample: &PairedSample) -> f64 {
    raw_bundle(sample, &SplitTable::build(sample), Evaluation::Sequential).t_hat
}

/// `W` for block 1 or 2 of `sample`.
pub fn w_stat(sample: &PairedSample, block_id: usize) -> Result<f64> {
    let table = SplitTable::build(sample);
    if !(1..=2).contains(&block_id) {
        return Err(invalid(format!("block id must be 1 or 2, got {block_id}")));
    }
    table.w_stat(sample.block(block_id).view(), block_id)
}

/// All estimates without the degeneracy check.
pub fn raw_bundle(sample: &PairedSample, table: &SplitTable, eval: Evaluation) -> EstimateBundle {
    let n = sample.n();
    let rows: Vec<[f64; 3]> = match eval {
        Evaluation::Sequential => (0..n).map(|i| table.row_sums(sample, i)).collect(),
        Evaluation::Parallel => (0..n).into_par_iter().map(|i| table.row_sums(sample, i)).collect(),
    };
    EstimateBundle::from_parts(n, table.bundle_from_rows(&rows))
}

/// `T`, `W1`, `W2`, the null scale and `u_n`, from one pass over all pairs.
///
/// Fails with [`EcdmError::DegenerateScale`] when either `W` is zero.
pub fn estimate_bundle(sample: &PairedSample) -> Result<EstimateBundle> {
    estimate_bundle_with(sample, Evaluation::Sequential)
}

pub fn estimate_bundle_with(sample: &PairedSample, eval: Evaluation) -> Result<EstimateBundle> {
    let table = SplitTable::build(sample);
    let bundle = raw_bundle(sample, &table, eval);
    check_scale(sample, &bundle)?;
    Ok(bundle)
}

pub(crate) fn check_scale(sample: &PairedSample, bundle: &EstimateBundle) -> Result<()> {
    for (block, w) in [(1, bundle.w1), (2, bundle.w2)] {
        if w <= 0.0 {
            return Err(EcdmError::DegenerateScale {
                block,
                constant_columns: sample.constant_columns(block),
            });
        }
    }
    Ok(())
}
