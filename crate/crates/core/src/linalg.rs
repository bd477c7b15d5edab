//! Small dense linear-algebra helpers: PSD factorization, symmetric square
//! root, operator norm. Everything here is desk-scale (d up to a few
//! thousand), so plain O(d^3) routines are fine.

use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

/// Lower-triangular factor `L` with `L L^T = a` for a symmetric PSD matrix.
///
/// Zero pivots are tolerated (the whole column is set to zero), so singular
/// covariances such as a matrix with a zero row/column factor cleanly.
/// A pivot below `-tol` rejects the matrix as not PSD.
pub fn psd_cholesky(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.ncols(),
            context: "psd_cholesky: square matrix required",
        });
    }
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-10 * scale;
    let mut l = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut pivot = a[[j, j]];
        for k in 0..j {
            pivot -= l[[j, k]] * l[[j, k]];
        }
        if pivot < -tol {
            return Err(Error::NotPsd { column: j, pivot });
        }
        if pivot <= tol {
            // exact PSD implies the remainder of this column is zero
            continue;
        }
        let root = pivot.sqrt();
        l[[j, j]] = root;
        for i in (j + 1)..d {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / root;
        }
    }
    Ok(l)
}

/// Symmetric PSD square root via cyclic Jacobi eigendecomposition.
///
/// Used where the *set* `Sigma^{1/2} B` matters (Gaussian widths), not just
/// the quadratic form; any factor would do for sampling, but the width of
/// the image set depends on the symmetric root specifically.
pub fn sym_sqrt(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.ncols(),
            context: "sym_sqrt: square matrix required",
        });
    }
    if is_diagonal(a) {
        let mut s = Array2::<f64>::zeros((d, d));
        for j in 0..d {
            let v = a[[j, j]];
            if v < -1e-12 {
                return Err(Error::NotPsd {
                    column: j,
                    pivot: v,
                });
            }
            s[[j, j]] = v.max(0.0).sqrt();
        }
        return Ok(s);
    }
    let (vals, vecs) = jacobi_eigh(a);
    let mut s = Array2::<f64>::zeros((d, d));
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    for (k, &lam) in vals.iter().enumerate() {
        if lam < -1e-8 * scale {
            return Err(Error::NotPsd {
                column: k,
                pivot: lam,
            });
        }
        let root = lam.max(0.0).sqrt();
        for i in 0..d {
            for j in 0..d {
                s[[i, j]] += root * vecs[[i, k]] * vecs[[j, k]];
            }
        }
    }
    Ok(s)
}

fn is_diagonal(a: ArrayView2<f64>) -> bool {
    let d = a.nrows();
    for i in 0..d {
        for j in 0..d {
            if i != j && a[[i, j]] != 0.0 {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues and eigenvectors of a symmetric matrix (cyclic Jacobi sweeps).
fn jacobi_eigh(a: ArrayView2<f64>) -> (Vec<f64>, Array2<f64>) {
    let d = a.nrows();
    let mut m = a.to_owned();
    let mut v = Array2::<f64>::eye(d);
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off.sqrt() < 1e-13 * (1.0 + frob(&m)) {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let vals = (0..d).map(|i| m[[i, i]]).collect();
    (vals, v)
}

fn frob(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solve `a x = b` for symmetric positive semidefinite `a` via Cholesky.
/// Coordinates hitting a zero pivot get a zero solution component.
pub fn solve_spd(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    let l = psd_cholesky(a)?;
    let d = b.len();
    // L z = b
    let mut z = Array1::<f64>::zeros(d);
    for i in 0..d {
        if l[[i, i]] == 0.0 {
            continue;
        }
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[[i, k]] * z[k];
        }
        z[i] = acc / l[[i, i]];
    }
    // L^T x = z
    let mut x = Array1::<f64>::zeros(d);
    for i in (0..d).rev() {
        if l[[i, i]] == 0.0 {
            continue;
        }
        let mut acc = z[i];
        for k in (i + 1)..d {
            acc -= l[[k, i]] * x[k];
        }
        x[i] = acc / l[[i, i]];
    }
    Ok(x)
}

/// Squared operator norm of `x` (largest singular value squared), by power
/// iteration on `X^T X`. Deterministic: the start vector is drawn from a
/// fixed-seed stream.
pub fn op_norm_sq(x: ArrayView2<f64>, steps: usize) -> f64 {
    let d = x.ncols();
    if d == 0 || x.nrows() == 0 {
        return 0.0;
    }
    let mut rng = seeded_rng(0x6f70_6e6f_726d); // "opnorm"
    let mut v = Array1::<f64>::from_shape_fn(d, |_| rng.gen::<f64>() - 0.5);
    let mut norm = l2_norm(v.view());
    if norm == 0.0 {
        v[0] = 1.0;
        norm = 1.0;
    }
    v.mapv_inplace(|t| t / norm);
    let mut lambda = 0.0;
    for _ in 0..steps {
        let xv = x.dot(&v);
        let w = x.t().dot(&xv);
        lambda = v.dot(&w);
        let n = l2_norm(w.view());
        if n == 0.0 {
            return 0.0;
        }
        v = w / n;
    }
    lambda.max(0.0)
}

pub fn l1_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|t| t.abs()).sum()
}

pub fn l2_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

pub fn linf_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, t| m.max(t.abs()))
}

/// Median of a slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median: NaN"));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}
