//! Domain types shared across the crate: problem instances, penalty pairs,
//! and fit results.

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// A regression problem with known ground truth.
///
/// The observed outputs follow `y = X beta_star + sqrt(n) theta_star + xi`,
/// where `theta_star` is the (o-sparse, `sqrt(n)`-normalized) adversarial
/// contamination and `xi` the Gaussian noise. Instances are immutable after
/// construction and safe to share across workers.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    /// n x d design matrix, rows `x_i^T`.
    pub x: Array2<f64>,
    /// Uncontaminated outputs `X beta_star + xi`.
    pub y_clean: Array1<f64>,
    /// Observed outputs `y_clean + sqrt(n) theta_star`.
    pub y: Array1<f64>,
    pub beta_star: Array1<f64>,
    pub theta_star: Array1<f64>,
    pub xi: Array1<f64>,
    /// Noise standard deviation.
    pub sigma: f64,
    pub covariance: Covariance,
    /// Contaminated row indices `I_o`, sorted ascending.
    pub outlier_index: Vec<usize>,
}

impl ProblemInstance {
    pub fn samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn outlier_count(&self) -> usize {
        self.outlier_index.len()
    }

    /// Verifies the construction invariants: dimensions, reconstruction of
    /// `y` from its parts, and that `theta_star`'s support is exactly the
    /// outlier index set.
    pub fn validate(&self) -> Result<()> {
        let n = self.samples();
        let d = self.dim();
        for (len, context) in [
            (self.y.len(), "y"),
            (self.y_clean.len(), "y_clean"),
            (self.theta_star.len(), "theta_star"),
            (self.xi.len(), "xi"),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                    context,
                });
            }
        }
        if self.beta_star.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.beta_star.len(),
                context: "beta_star",
            });
        }
        if self.covariance.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.covariance.dim(),
                context: "covariance",
            });
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        let sqrt_n = (n as f64).sqrt();
        let fitted = self.x.dot(&self.beta_star);
        for i in 0..n {
            let expect = fitted[i] + sqrt_n * self.theta_star[i] + self.xi[i];
            let scale = 1.0_f64.max(expect.abs()).max(self.y[i].abs());
            if (self.y[i] - expect).abs() > 1e-12 * scale {
                return Err(Error::InvalidParameter(format!(
                    "reconstruction fails at row {i}: y={} expected={expect}",
                    self.y[i]
                )));
            }
            let clean = fitted[i] + self.xi[i];
            if (self.y_clean[i] - clean).abs() > 1e-12 * 1.0_f64.max(clean.abs()) {
                return Err(Error::InvalidParameter(format!(
                    "y_clean reconstruction fails at row {i}"
                )));
            }
        }
        let support: Vec<usize> = (0..n).filter(|&i| self.theta_star[i] != 0.0).collect();
        if support != self.outlier_index {
            return Err(Error::InvalidParameter(
                "support(theta_star) differs from outlier_index".into(),
            ));
        }
        Ok(())
    }

    /// `|Sigma^{1/2}(beta_star - beta)|_2`, the error the main bound controls.
    pub fn sigma_error(&self, beta: &Array1<f64>) -> f64 {
        let diff = &self.beta_star - beta;
        self.covariance.sigma_norm(diff.view())
    }
}

/// How a penalty pair was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PaperRecipe,
    NguyenTran,
    Manual,
}

/// The two tuning parameters of the extended Lasso.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PenaltyPair {
    pub lambda_s: f64,
    pub lambda_o: f64,
    pub provenance: Provenance,
}

impl PenaltyPair {
    pub fn new(lambda_s: f64, lambda_o: f64, provenance: Provenance) -> Result<Self> {
        if !(lambda_s > 0.0) || !(lambda_o > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "penalties must be strictly positive: lambda_s={lambda_s}, lambda_o={lambda_o}"
            )));
        }
        Ok(PenaltyPair {
            lambda_s,
            lambda_o,
            provenance,
        })
    }

    pub fn manual(lambda_s: f64, lambda_o: f64) -> Result<Self> {
        Self::new(lambda_s, lambda_o, Provenance::Manual)
    }
}

/// Output of a solver run.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub beta_hat: Array1<f64>,
    /// In the `sqrt(n) theta` normalization of the joint objective.
    pub theta_hat: Array1<f64>,
    /// Objective value per outer iteration; nonincreasing.
    pub objective_trace: Vec<f64>,
    /// `max(gradient_supnorm - lambda_s, support_violation, 0)`.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Count of uncontaminated rows whose scaled residual exceeds the Huber
    /// threshold; present when the instance carries ground truth.
    pub c_cut: Option<usize>,
}
