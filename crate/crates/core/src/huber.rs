//! The Huber function with threshold fixed at 1 and the scaled residual map.
//!
//! `H(t) = t^2/2` for `|t| <= 1` and `|t| - 1/2` beyond; its derivative
//! `psi(t)` is the clamp of `t` to `[-1, 1]`. The scale of the problem is
//! carried entirely by `lambda_o * sqrt(n)` inside the residuals, which keeps
//! `H` parameter-free and the stationarity identity exact.

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use ndarray::{Array1, ArrayView1};

/// `H(t)`: quadratic inside the unit interval, linear outside.
pub fn huber_value(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::NonFinite(t));
    }
    Ok(value_raw(t))
}

/// `psi(t) = H'(t) = clamp(t, -1, 1)`.
pub fn huber_psi(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::NonFinite(t));
    }
    Ok(psi_raw(t))
}

#[inline]
pub(crate) fn value_raw(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        0.5 * t * t
    } else {
        a - 0.5
    }
}

#[inline]
pub(crate) fn psi_raw(t: f64) -> f64 {
    t.clamp(-1.0, 1.0)
}

/// Scaled residuals `r_i(beta) = (y_i - x_i^T beta) / (lambda_o sqrt(n))`.
pub fn residual_scaled(
    instance: &ProblemInstance,
    beta: ArrayView1<f64>,
    lambda_o: f64,
) -> Result<Array1<f64>> {
    if lambda_o <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda_o must be positive, got {lambda_o}"
        )));
    }
    if beta.len() != instance.dim() {
        return Err(Error::DimensionMismatch {
            expected: instance.dim(),
            got: beta.len(),
            context: "residual_scaled: beta",
        });
    }
    let scale = lambda_o * (instance.samples() as f64).sqrt();
    let fitted = instance.x.dot(&beta);
    Ok((&instance.y - &fitted) / scale)
}
