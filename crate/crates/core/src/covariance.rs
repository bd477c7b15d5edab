//! Design covariance `Sigma`: structured families plus explicit matrices.

use crate::error::{Error, Result};
use crate::linalg::{psd_cholesky, sym_sqrt};
use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

/// Covariance family for the rows of the design matrix.
///
/// Structured kinds (`Identity`, `Equicorrelated`, `Toeplitz`) evaluate
/// quadratic forms without materializing the matrix; `Explicit` stores a
/// dense symmetric PSD matrix.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Covariance {
    Identity { dim: usize },
    /// `Sigma_ij = r + (1 - r) * 1{i = j}` (unit diagonal).
    Equicorrelated { dim: usize, r: f64 },
    /// `Sigma_ij = r^{|i - j|}`.
    Toeplitz { dim: usize, r: f64 },
    Explicit { matrix: Vec<Vec<f64>> },
}

impl Covariance {
    pub fn identity(dim: usize) -> Self {
        Covariance::Identity { dim }
    }

    pub fn explicit(matrix: Array2<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
                context: "covariance must be square",
            });
        }
        for i in 0..matrix.nrows() {
            for j in 0..i {
                if (matrix[[i, j]] - matrix[[j, i]]).abs() > 1e-9 * (1.0 + matrix[[i, j]].abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Covariance::Explicit {
            matrix: matrix.outer_iter().map(|row| row.to_vec()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Covariance::Identity { dim }
            | Covariance::Equicorrelated { dim, .. }
            | Covariance::Toeplitz { dim, .. } => *dim,
            Covariance::Explicit { matrix } => matrix.len(),
        }
    }

    /// Checks the correlation-parameter ranges; PSD of explicit matrices is
    /// established by factorization.
    pub fn validate(&self) -> Result<()> {
        match self {
            Covariance::Equicorrelated { r, .. } | Covariance::Toeplitz { r, .. }
                if !(r.abs() < 1.0) =>
            {
                Err(Error::InvalidParameter(format!(
                    "correlation parameter |r| < 1 required, got {r}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let d = self.dim();
        match self {
            Covariance::Identity { .. } => Array2::eye(d),
            Covariance::Equicorrelated { r, .. } => {
                Array2::from_shape_fn((d, d), |(i, j)| if i == j { 1.0 } else { *r })
            }
            Covariance::Toeplitz { r, .. } => {
                Array2::from_shape_fn((d, d), |(i, j)| r.powi((i as i32 - j as i32).abs()))
            }
            Covariance::Explicit { matrix } => {
                Array2::from_shape_fn((d, d), |(i, j)| matrix[i][j])
            }
        }
    }

    /// `rho^2 = max_i Sigma_ii`.
    pub fn rho_sq(&self) -> f64 {
        match self {
            Covariance::Identity { .. }
            | Covariance::Equicorrelated { .. }
            | Covariance::Toeplitz { .. } => 1.0,
            Covariance::Explicit { matrix } => matrix
                .iter()
                .enumerate()
                .fold(0.0_f64, |m, (i, row)| m.max(row[i])),
        }
    }

    /// `v^T Sigma v` without forming the matrix for structured kinds.
    pub fn quad_form(&self, v: ArrayView1<f64>) -> f64 {
        match self {
            Covariance::Identity { .. } => v.dot(&v),
            Covariance::Equicorrelated { r, .. } => {
                let sum: f64 = v.sum();
                (1.0 - r) * v.dot(&v) + r * sum * sum
            }
            _ => {
                let dense = self.to_dense();
                v.dot(&dense.dot(&v))
            }
        }
    }

    /// `|Sigma^{1/2} v|_2 = sqrt(v^T Sigma v)`; independent of the factor used.
    pub fn sigma_norm(&self, v: ArrayView1<f64>) -> f64 {
        self.quad_form(v).max(0.0).sqrt()
    }

    /// Any factor `L` with `L L^T = Sigma` (lower Cholesky, zero pivots allowed).
    pub fn factor(&self) -> Result<Array2<f64>> {
        match self {
            Covariance::Identity { dim } => Ok(Array2::eye(*dim)),
            _ => psd_cholesky(self.to_dense().view()),
        }
    }

    /// The symmetric PSD square root `Sigma^{1/2}`.
    pub fn symmetric_sqrt(&self) -> Result<Array2<f64>> {
        match self {
            Covariance::Identity { dim } => Ok(Array2::eye(*dim)),
            _ => sym_sqrt(self.to_dense().view()),
        }
    }

    pub fn matvec(&self, v: ArrayView1<f64>) -> Array1<f64> {
        match self {
            Covariance::Identity { .. } => v.to_owned(),
            Covariance::Equicorrelated { r, .. } => {
                let sum: f64 = v.sum();
                v.mapv(|t| (1.0 - r) * t) + r * sum
            }
            _ => self.to_dense().dot(&v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn quad_form_matches_dense() {
        let cov = Covariance::Equicorrelated { dim: 4, r: 0.3 };
        let v = array![1.0, -2.0, 0.5, 3.0];
        let dense = cov.to_dense();
        let direct = v.dot(&dense.dot(&v));
        assert!((cov.quad_form(v.view()) - direct).abs() < 1e-12);
    }

    #[test]
    fn toeplitz_entries() {
        let cov = Covariance::Toeplitz { dim: 3, r: 0.5 };
        let dense = cov.to_dense();
        assert_eq!(dense[[0, 2]], 0.25);
        assert_eq!(dense[[1, 1]], 1.0);
    }

    #[test]
    fn explicit_rejects_asymmetric() {
        let m = array![[1.0, 0.2], [0.4, 1.0]];
        assert!(Covariance::explicit(m).is_err());
    }

    #[test]
    fn factor_roundtrip() {
        let cov = Covariance::Toeplitz { dim: 5, r: -0.4 };
        let l = cov.factor().unwrap();
        let back = l.dot(&l.t());
        let dense = cov.to_dense();
        for (a, b) in back.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
