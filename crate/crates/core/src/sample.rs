use ndarray::{s, Array2, ArrayView2};

use crate::error::{invalid, EcdmError, Result};

/// An `n x p` observation matrix whose columns are split into a leading
/// block of `p1` variables and a trailing block of `p2 = p - p1` variables.
///
/// The two blocks are stored as separate row-major matrices so the
/// estimator kernels can walk contiguous rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x1: Array2<f64>,
    x2: Array2<f64>,
}

impl PairedSample {
    /// Split `data` after its first `p1` columns.
    pub fn new(data: ArrayView2<'_, f64>, p1: usize) -> Result<Self> {
        let (n, p) = data.dim();
        if p1 == 0 || p1 >= p {
            return Err(invalid(format!("p1 = {p1} must satisfy 1 <= p1 <= p - 1 (p = {p})")));
        }
        let x1 = data.slice(s![.., ..p1]).as_standard_layout().into_owned();
        let x2 = data.slice(s![.., p1..]).as_standard_layout().into_owned();
        Self::validate(n, &x1, &x2)?;
        Ok(Self { x1, x2 })
    }

    /// Build from two blocks with the same number of rows.
    pub fn from_blocks(x1: Array2<f64>, x2: Array2<f64>) -> Result<Self> {
        if x1.nrows() != x2.nrows() {
            return Err(EcdmError::DimensionMismatch(format!(
                "block 1 has {} rows, block 2 has {}",
                x1.nrows(),
                x2.nrows()
            )));
        }
        if x1.ncols() == 0 || x2.ncols() == 0 {
            return Err(invalid("both blocks need at least one column"));
        }
        let n = x1.nrows();
        let x1 = x1.as_standard_layout().into_owned();
        let x2 = x2.as_standard_layout().into_owned();
        Self::validate(n, &x1, &x2)?;
        Ok(Self { x1, x2 })
    }

    /// Build from a row-major buffer of length `n * p`.
    pub fn from_row_major(n: usize, p: usize, values: Vec<f64>, p1: usize) -> Result<Self> {
        if values.len() != n * p {
            return Err(EcdmError::DimensionMismatch(format!(
                "expected {} values for a {n} x {p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        let data = Array2::from_shape_vec((n, p), values).map_err(|e| invalid(e.to_string()))?;
        Self::new(data.view(), p1)
    }

    fn validate(n: usize, x1: &Array2<f64>, x2: &Array2<f64>) -> Result<()> {
        if n < 4 {
            return Err(invalid(format!("need n >= 4 samples, got {n}")));
        }
        for (block, x) in [(1, x1), (2, x2)] {
            if let Some(((r, c), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(invalid(format!(
                    "non-finite value {v} in block {block} at row {}, column {}",
                    r + 1,
                    c + 1
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x1.nrows()
    }

    pub fn p1(&self) -> usize {
        self.x1.ncols()
    }

    pub fn p2(&self) -> usize {
        self.x2.ncols()
    }

    pub fn p(&self) -> usize {
        self.p1() + self.p2()
    }

    pub fn block1(&self) -> &Array2<f64> {
        &self.x1
    }

    pub fn block2(&self) -> &Array2<f64> {
        &self.x2
    }

    /// Block by 1-based id.
    pub fn block(&self, id: usize) -> &Array2<f64> {
        match id {
            1 => &self.x1,
            2 => &self.x2,
            _ => panic!("block id must be 1 or 2, got {id}"),
        }
    }

    /// The full `n x p` matrix, block 1 columns first.
    pub fn to_matrix(&self) -> Array2<f64> {
        ndarray::concatenate(ndarray::Axis(1), &[self.x1.view(), self.x2.view()])
            .expect("blocks share the row count")
    }

    /// 1-based full-matrix indices of columns in `block` that take one value.
    pub fn constant_columns(&self, block: usize) -> Vec<usize> {
        let x = self.block(block);
        let offset = if block == 1 { 0 } else { self.p1() };
        x.columns()
            .into_iter()
            .enumerate()
            .filter(|(_, col)| col.iter().all(|&v| v == col[0]))
            .map(|(c, _)| offset + c + 1)
            .collect()
    }
}
