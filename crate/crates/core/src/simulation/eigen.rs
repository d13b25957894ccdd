//! Symmetric eigendecomposition by the cyclic Jacobi method.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{invalid, Result};

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// `Σ = H diag(λ) H^T` with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub eigenvalues: Array1<f64>,
    /// Column `r` is the eigenvector for `eigenvalues[r]`.
    pub eigenvectors: Array2<f64>,
}

/// Eigenvalues (descending) and orthonormal eigenvectors of a symmetric
/// matrix. Each eigenvector is signed so its largest-magnitude entry is
/// positive.
pub fn sym_eig(sigma: ArrayView2<'_, f64>) -> Result<SymEigen> {
    let (n, m) = sigma.dim();
    if n != m {
        return Err(invalid(format!("matrix is {n} x {m}, not square")));
    }
    let scale = sigma.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for i in 0..n {
        for j in i + 1..n {
            if (sigma[[i, j]] - sigma[[j, i]]).abs() > 1e-12 * scale.max(1e-300) {
                return Err(invalid(format!("matrix is not symmetric at ({}, {})", i + 1, j + 1)));
            }
        }
    }

    let mut a: Vec<f64> = sigma.iter().copied().collect();
    // Rows of `vt` are eigenvectors, so rotations touch contiguous memory.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };

    for _ in 0..MAX_SWEEPS {
        if off(&a) <= OFF_DIAGONAL_TOL * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    a[p * n + k] = a[k * n + p];
                    a[q * n + k] = a[k * n + q];
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                let (head, tail) = vt.split_at_mut(q * n);
                let vp = &mut head[p * n..p * n + n];
                let vq = &mut tail[..n];
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| a[i * n + i]));
    let mut eigenvectors = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        let v = &vt[i * n..i * n + n];
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (k, x)| if x.abs() > v[best].abs() { k } else { best });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (k, x) in v.iter().enumerate() {
            eigenvectors[[k, col]] = sign * x;
        }
    }
    Ok(SymEigen { eigenvalues, eigenvectors })
}
