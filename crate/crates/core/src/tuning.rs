//! Closed-form tuning constants and feasibility conditions.
//!
//! Everything here is deterministic arithmetic in the problem parameters
//! `(n, d, s, o, delta, sigma, rho, kappa)`: the two penalty recipes (the
//! refined one and the Nguyen-Tran baseline), the rate quantities
//! `r_1, r_21, r_22, r_2`, the `g(m)` envelope, and the conditions
//! (c1)-(c5), the iso-cone ratio, (cond0) and the positivity of `C_>`.
//! Condition checks report both evaluated sides, not just booleans: at desk
//! scale several of them fail and the margin is the useful output.

use crate::error::{Error, Result};
use crate::instance::{PenaltyPair, Provenance};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

/// Shared validated parameter set for the tuning computations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TuningInputs {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub o: usize,
    pub delta: f64,
    pub sigma: f64,
    /// `rho^2 = max_i Sigma_ii`; pass `rho = sqrt(rho^2)`.
    pub rho: f64,
    /// Restricted-eigenvalue constant; an input, not something this module
    /// can certify (see the verify module's heuristic estimator).
    pub kappa: f64,
    /// Cone-opening constant of the RE condition; 5 unless overridden.
    pub c0: f64,
    /// Numerical constant in the lambda_o recipe; 2 unless overridden.
    pub c_lambda_o: f64,
}

impl TuningInputs {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        d: usize,
        s: usize,
        o: usize,
        delta: f64,
        sigma: f64,
        rho: f64,
        kappa: f64,
    ) -> Self {
        TuningInputs {
            n,
            d,
            s,
            o,
            delta,
            sigma,
            rho,
            kappa,
            c0: 5.0,
            c_lambda_o: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.d < 3 {
            return Err(Error::InvalidParameter(format!(
                "need n >= 3 and d >= 3, got n={}, d={}",
                self.n, self.d
            )));
        }
        if self.s < 1 || self.s > self.d {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= s <= d, got s={}, d={}",
                self.s, self.d
            )));
        }
        if self.o >= self.n {
            return Err(Error::InvalidParameter(format!(
                "need o < n, got o={}, n={}",
                self.o, self.n
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need delta in (0,1), got {}",
                self.delta
            )));
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("kappa", self.kappa),
            ("c0", self.c0),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `c_kappa = (c0 + 1)/kappa + 1`.
    pub fn c_kappa(&self) -> f64 {
        (self.c0 + 1.0) / self.kappa + 1.0
    }
}

/// The rate quantities `r_1 + r_2` split into their factors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateConstants {
    /// `sqrt(s log d / n)`.
    pub r1: f64,
    /// `sqrt((o/n) log(n/o))`.
    pub r21: f64,
    /// `sqrt((o/n) log n)`.
    pub r22: f64,
    /// `r21 * r22 = (o/n) sqrt(log(n/o) log n)`.
    pub r2: f64,
    pub r_total: f64,
    /// `sqrt(log(n/delta) / log n)`, at least 1 for delta <= 1.
    pub eta_delta: f64,
    /// `sqrt((4 + log(n/o)) / log(n/o))`; absent when o = 0.
    pub eta_4: Option<f64>,
}

/// Evaluate the rate quantities. `delta = 1` is accepted here (it collapses
/// `eta_delta` to 1); the tuning recipes themselves require `delta < 1`.
pub fn rate_constants(n: usize, d: usize, s: usize, o: usize, delta: f64) -> Result<RateConstants> {
    if n < 3 || d < 3 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 3 and d >= 3, got n={n}, d={d}"
        )));
    }
    if s < 1 || s > d {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s <= d, got s={s}, d={d}"
        )));
    }
    if o >= n {
        return Err(Error::InvalidParameter(format!("need o < n, got o={o}, n={n}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need delta in (0,1], got {delta}"
        )));
    }
    let nf = n as f64;
    let r1 = ((s as f64) * (d as f64).ln() / nf).sqrt();
    let (r21, r22, eta_4) = if o == 0 {
        (0.0, 0.0, None)
    } else {
        let of = o as f64;
        let log_no = (nf / of).ln();
        let r21 = (of / nf * log_no).sqrt();
        let r22 = (of / nf * nf.ln()).sqrt();
        let eta_4 = if log_no > 0.0 {
            Some(((4.0 + log_no) / log_no).sqrt())
        } else {
            None // o = n is rejected above; log(n/o) = 0 cannot happen
        };
        (r21, r22, eta_4)
    };
    let r2 = r21 * r22;
    Ok(RateConstants {
        r1,
        r21,
        r22,
        r2,
        r_total: r1 + r2,
        eta_delta: ((nf / delta).ln() / nf.ln()).sqrt(),
        eta_4,
    })
}

/// `g(m) = g1 + g2(m)` with
/// `g1 = sqrt(2/n)(4.8 + sqrt(log(81/delta))) + 1.2 c_kappa sqrt(2 rho^2 s log d / n)`
/// and `g2(m) = 4.8 sqrt(e) sqrt(m/n) sqrt(4 + log(n/m))`.
pub fn g_function(
    m: usize,
    n: usize,
    s: usize,
    d: usize,
    delta: f64,
    rho: f64,
    c_kappa: f64,
) -> Result<f64> {
    if m < 1 || m > n {
        return Err(Error::InvalidParameter(format!(
            "g(m) requires 1 <= m <= n, got m={m}, n={n}"
        )));
    }
    Ok(g1_term(n, s, d, delta, rho, c_kappa) + g2_term(m, n))
}

fn g1_term(n: usize, s: usize, d: usize, delta: f64, rho: f64, c_kappa: f64) -> f64 {
    let nf = n as f64;
    (2.0 / nf).sqrt() * (4.8 + (81.0_f64 / delta).ln().sqrt())
        + 1.2 * c_kappa * (2.0 * rho * rho * (s as f64) * (d as f64).ln() / nf).sqrt()
}

fn g2_term(m: usize, n: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let (mf, nf) = (m as f64, n as f64);
    4.8 * E.sqrt() * (mf / nf).sqrt() * (4.0 + (nf / mf).ln()).sqrt()
}

/// Every computable constant of the main theorem for a concrete penalty pair.
#[derive(Debug, Clone, Serialize)]
pub struct TuningBundle {
    pub inputs: TuningInputs,
    pub lambda_o: f64,
    pub lambda_s: f64,
    /// `sqrt(3 rho^2 sigma^2 log(d/delta) / (lambda_o^2 n))`.
    pub c_z: f64,
    pub g1: f64,
    pub g2_at_o: f64,
    pub g_at_o: f64,
    /// `C_z + sqrt(2 o / s) g(o)`.
    pub c_lambda_s: f64,
    /// `1 - (4.3 + sqrt(2 log(9/delta))) / sqrt(n)`.
    pub a1: f64,
    /// `sqrt(2/n)(4.8 + sqrt(log(81/delta)))`.
    pub b1: f64,
    /// `sqrt(a1^2 + b1 + 1/4) - sqrt(2(b1 + 1/4))`.
    pub c_n_delta: f64,
    /// `(6 / C_{n,delta}^2) sqrt(lambda_s^2 s / kappa^2 + 6.25 lambda_o^2 o)`.
    pub nu_e: f64,
    pub c_kappa: f64,
    /// `1 / (1 - 2 sigma^2 log(n/delta) / (lambda_o^2 n))`; positive only
    /// when the subtracted ratio is below 1.
    pub c_r: f64,
    /// `9/32 - 2 * 9.6^2 e etabar_4 C_lo / (C_lo^2 - 1)`.
    pub c_gt: f64,
}

impl TuningBundle {
    /// `g(m)` with this bundle's `(n, s, d, delta, rho, c_kappa)`.
    pub fn g(&self, m: usize) -> Result<f64> {
        g_function(
            m,
            self.inputs.n,
            self.inputs.s,
            self.inputs.d,
            self.inputs.delta,
            self.inputs.rho,
            self.c_kappa,
        )
    }
}

/// `C_{n,delta}` from its two ingredients.
pub fn c_n_delta(a1: f64, b1: f64) -> f64 {
    (a1 * a1 + b1 + 0.25).sqrt() - (2.0 * (b1 + 0.25)).sqrt()
}

/// Upper bound on `eta_4` used by `C_>`; a fixed numerical constant.
pub fn eta4_bar() -> f64 {
    let c_upper = (5.0_f64.sqrt() - 2.0_f64.sqrt()) / 2.0;
    let c_on = (19.2 * 12.5_f64.sqrt()).powi(2) * 100.0_f64.ln() / c_upper;
    ((4.0 + c_on.ln()) / c_on.ln()).sqrt()
}

/// `C_> = 9/32 - 2 * 9.6^2 e etabar_4 c / (c^2 - 1)`, negative infinity at
/// `c <= 1` where the expression is meaningless.
pub fn c_gt(c_lambda_o: f64) -> f64 {
    if c_lambda_o <= 1.0 {
        return f64::NEG_INFINITY;
    }
    9.0 / 32.0 - 2.0 * 9.6 * 9.6 * E * eta4_bar() * c_lambda_o / (c_lambda_o * c_lambda_o - 1.0)
}

/// Smallest `C_lambda_o >= 2` with `C_> > 0`, by bisection.
pub fn min_c_lambda_o_for_positive_c_gt() -> f64 {
    let mut lo = 2.0;
    if c_gt(lo) > 0.0 {
        return lo;
    }
    let mut hi = 4.0;
    while c_gt(hi) <= 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if c_gt(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// All constants of the main theorem evaluated at an explicit penalty pair.
pub fn bundle_for_penalties(inputs: &TuningInputs, penalties: &PenaltyPair) -> Result<TuningBundle> {
    inputs.validate()?;
    let nf = inputs.n as f64;
    let (lambda_o, lambda_s) = (penalties.lambda_o, penalties.lambda_s);
    let c_kappa = inputs.c_kappa();
    let c_z = (3.0 * inputs.rho * inputs.rho * inputs.sigma * inputs.sigma
        * (inputs.d as f64 / inputs.delta).ln()
        / (lambda_o * lambda_o * nf))
        .sqrt();
    let g1 = g1_term(inputs.n, inputs.s, inputs.d, inputs.delta, inputs.rho, c_kappa);
    let g2_at_o = g2_term(inputs.o, inputs.n);
    let g_at_o = g1 + g2_at_o;
    let c_lambda_s = if inputs.o == 0 {
        c_z
    } else {
        c_z + (2.0 * inputs.o as f64 / inputs.s as f64).sqrt() * g_at_o
    };
    let a1 = 1.0 - (4.3 + (2.0 * (9.0_f64 / inputs.delta).ln()).sqrt()) / nf.sqrt();
    let b1 = (2.0 / nf).sqrt() * (4.8 + (81.0_f64 / inputs.delta).ln().sqrt());
    let cnd = c_n_delta(a1, b1);
    let nu_e = if cnd > 0.0 {
        6.0 / (cnd * cnd)
            * (lambda_s * lambda_s * inputs.s as f64 / (inputs.kappa * inputs.kappa)
                + 6.25 * lambda_o * lambda_o * inputs.o as f64)
                .sqrt()
    } else {
        f64::INFINITY
    };
    let ratio = 2.0 * inputs.sigma * inputs.sigma * (nf / inputs.delta).ln() / (lambda_o * lambda_o * nf);
    let c_r = if ratio < 1.0 {
        1.0 / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    Ok(TuningBundle {
        inputs: *inputs,
        lambda_o,
        lambda_s,
        c_z,
        g1,
        g2_at_o,
        g_at_o,
        c_lambda_s,
        a1,
        b1,
        c_n_delta: cnd,
        nu_e,
        c_kappa,
        c_r,
        c_gt: c_gt(inputs.c_lambda_o),
    })
}

/// The refined recipe: `lambda_o = C_lo sqrt(2 sigma^2 log(n/delta) / n)`,
/// `lambda_s = (4 sqrt(2)/sqrt(3)) C_ls lambda_o`, with `C_ls` computed in
/// dependency order (`lambda_o`, then `C_z`, then `g(o)`).
pub fn paper_tuning(inputs: &TuningInputs) -> Result<(PenaltyPair, TuningBundle)> {
    inputs.validate()?;
    if !(inputs.c_lambda_o > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "c_lambda_o must be positive, got {}",
            inputs.c_lambda_o
        )));
    }
    let nf = inputs.n as f64;
    let lambda_o =
        inputs.c_lambda_o * (2.0 * inputs.sigma * inputs.sigma * (nf / inputs.delta).ln() / nf).sqrt();
    if !(lambda_o > 0.0) {
        return Err(Error::DegenerateTuning(format!(
            "lambda_o = {lambda_o} (sigma = {})",
            inputs.sigma
        )));
    }
    let c_z = (3.0 * inputs.rho * inputs.rho * inputs.sigma * inputs.sigma
        * (inputs.d as f64 / inputs.delta).ln()
        / (lambda_o * lambda_o * nf))
        .sqrt();
    let g_at_o = if inputs.o == 0 {
        0.0
    } else {
        g_function(
            inputs.o,
            inputs.n,
            inputs.s,
            inputs.d,
            inputs.delta,
            inputs.rho,
            inputs.c_kappa(),
        )?
    };
    let c_lambda_s = if inputs.o == 0 {
        c_z
    } else {
        c_z + (2.0 * inputs.o as f64 / inputs.s as f64).sqrt() * g_at_o
    };
    let lambda_s = 4.0 * 2.0_f64.sqrt() / 3.0_f64.sqrt() * c_lambda_s * lambda_o;
    let penalties = PenaltyPair::new(lambda_s, lambda_o, Provenance::PaperRecipe)?;
    let bundle = bundle_for_penalties(inputs, &penalties)?;
    Ok((penalties, bundle))
}

/// The Nguyen-Tran baseline recipe.
pub fn nguyen_tran_tuning(n: usize, d: usize, sigma: f64, rho: f64, gamma: f64) -> Result<PenaltyPair> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if n < 3 || d < 3 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 3 and d >= 3, got n={n}, d={d}"
        )));
    }
    let nf = n as f64;
    let df = d as f64;
    let lambda_o = 2.0 * (2.0 * sigma * sigma * nf.ln() / nf).sqrt();
    let lambda_s = 2.0 / gamma
        * (2.0 * sigma * sigma * rho * rho * df.ln() / nf).sqrt()
        * (1.0 + (2.0 * df.ln() / nf).sqrt());
    if lambda_o == 0.0 || lambda_s == 0.0 {
        return Err(Error::DegenerateTuning(format!(
            "degenerate penalties (sigma = {sigma}): lambda_o = {lambda_o}, lambda_s = {lambda_s}"
        )));
    }
    PenaltyPair::new(lambda_s, lambda_o, Provenance::NguyenTran)
}

/// One evaluated inequality; `holds` is `lhs <= rhs` (strict where the
/// source condition is strict).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn leq(lhs: f64, rhs: f64) -> Self {
        Inequality {
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }

    fn lt(lhs: f64, rhs: f64) -> Self {
        Inequality {
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }
}

/// The feasibility conditions of the main theorem, each with its evaluated
/// sides.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    /// `delta <= 1/7`.
    pub c1_delta: Inequality,
    /// `100 <= n`.
    pub c1_n: Inequality,
    pub c1: bool,
    /// `sqrt(log(d/delta)/n) <= sqrt(3) - sqrt(2)`.
    pub c2: Inequality,
    /// `2 sqrt(n log(1/delta)) + 2 log(1/delta) <= n`.
    pub c3: Inequality,
    /// `3/4 < a1`.
    pub c4: Inequality,
    /// `b1 < 1/4`.
    pub c5: Inequality,
    /// `(lambda_s + C_ls lambda_o)/(lambda_s - C_ls lambda_o) <= c0`.
    pub cond_iso: Inequality,
    /// `8 max(...) sqrt(s/kappa^2 + 6.25 o lambda_o^2/lambda_s^2) <= C_{n,delta}`.
    pub cond0: Inequality,
    /// `0 < C_>`.
    pub cond_cgt_positive: Inequality,
    pub all_satisfied: bool,
}

/// Evaluate every condition for the bundle's parameters.
pub fn condition_report(bundle: &TuningBundle) -> ConditionReport {
    let p = &bundle.inputs;
    let nf = p.n as f64;
    let c1_delta = Inequality::leq(p.delta, 1.0 / 7.0);
    let c1_n = Inequality::leq(100.0, nf);
    let c1 = c1_delta.holds && c1_n.holds;
    let c2 = Inequality::leq(
        ((p.d as f64 / p.delta).ln() / nf).sqrt(),
        3.0_f64.sqrt() - 2.0_f64.sqrt(),
    );
    let log_inv_delta = (1.0 / p.delta).ln();
    let c3 = Inequality::leq(2.0 * (nf * log_inv_delta).sqrt() + 2.0 * log_inv_delta, nf);
    let c4 = Inequality::lt(0.75, bundle.a1);
    let c5 = Inequality::lt(bundle.b1, 0.25);
    let denom = bundle.lambda_s - bundle.c_lambda_s * bundle.lambda_o;
    let cond_iso = if denom > 0.0 {
        Inequality::leq(
            (bundle.lambda_s + bundle.c_lambda_s * bundle.lambda_o) / denom,
            p.c0,
        )
    } else {
        Inequality {
            lhs: f64::INFINITY,
            rhs: p.c0,
            holds: false,
        }
    };
    let lhs0 = 8.0
        * f64::max(
            3.6 * (2.0 * p.rho * p.rho * (p.d as f64).ln() / nf).sqrt(),
            2.4 * bundle.lambda_s / bundle.lambda_o * (2.0 * nf.ln() / nf).sqrt(),
        )
        * (p.s as f64 / (p.kappa * p.kappa)
            + 6.25 * p.o as f64 * bundle.lambda_o * bundle.lambda_o
                / (bundle.lambda_s * bundle.lambda_s))
            .sqrt();
    let cond0 = Inequality::leq(lhs0, bundle.c_n_delta);
    let cond_cgt_positive = Inequality::lt(0.0, bundle.c_gt);
    let all_satisfied = c1
        && c2.holds
        && c3.holds
        && c4.holds
        && c5.holds
        && cond_iso.holds
        && cond0.holds
        && cond_cgt_positive.holds;
    ConditionReport {
        c1_delta,
        c1_n,
        c1,
        c2,
        c3,
        c4,
        c5,
        cond_iso,
        cond0,
        cond_cgt_positive,
        all_satisfied,
    }
}

/// The four products bounding the left side of (cond0):
/// `A1 = log d / n`, `A2 = (lambda_s/lambda_o)^2 log n / n`, `B1 = s`,
/// `B2 = o (lambda_o/lambda_s)^2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Cond0Decomposition {
    /// `s log d / n = r1^2`.
    pub a1b1: f64,
    pub a1b2: f64,
    pub a2b1: f64,
    /// `o log n / n = r22^2`.
    pub a2b2: f64,
}

pub fn cond0_decomposition(
    n: usize,
    d: usize,
    s: usize,
    o: usize,
    penalties: &PenaltyPair,
) -> Cond0Decomposition {
    let nf = n as f64;
    let a1 = (d as f64).ln() / nf;
    let ratio_sq = (penalties.lambda_s / penalties.lambda_o).powi(2);
    let a2 = ratio_sq * nf.ln() / nf;
    let b1 = s as f64;
    let b2 = o as f64 / ratio_sq;
    Cond0Decomposition {
        a1b1: a1 * b1,
        a1b2: a1 * b2,
        a2b1: a2 * b1,
        a2b2: a2 * b2,
    }
}
