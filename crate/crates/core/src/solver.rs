//! Solvers for the extended Lasso and its Huber reformulation.
//!
//! The primary algorithm is accelerated proximal gradient (FISTA) on the
//! penalized Huber objective
//!
//! ```text
//! L(beta) = lambda_o^2 sum_i H((y_i - x_i^T beta)/(lambda_o sqrt(n))) + lambda_s |beta|_1
//! ```
//!
//! whose smooth part has a globally Lipschitz gradient with constant
//! `|X|_op^2 / n`. Momentum restarts whenever a step would increase the
//! objective, so the recorded trace is nonincreasing. The joint formulation
//! over `(beta, theta)` is solved by exact alternating minimization: a Lasso
//! step in `beta` and a closed-form soft-threshold step in `theta`. The two
//! routes minimize the same function of `beta` and are cross-checked in the
//! tests.

use crate::error::{Error, Result};
use crate::huber::{psi_raw, value_raw};
use crate::instance::{FitResult, PenaltyPair, ProblemInstance};
use crate::linalg::{l1_norm, linf_norm, op_norm_sq, solve_spd};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

const POWER_ITERATION_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Fixed,
    Backtracking,
}

/// Solver knobs; `Default` matches the documented defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative objective-decrease threshold for declaring a plateau.
    pub tolerance: f64,
    /// Absolute sup-norm slack for the stationarity check; `None` means
    /// `1e-6 * lambda_s`.
    pub kkt_tolerance: Option<f64>,
    pub step_rule: StepRule,
    /// Momentum (with restart on objective increase) on or off.
    pub acceleration: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 10_000,
            tolerance: 1e-9,
            kkt_tolerance: None,
            step_rule: StepRule::Backtracking,
            acceleration: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    pub fn resolved_kkt_tolerance(&self, lambda_s: f64) -> f64 {
        self.kkt_tolerance.unwrap_or(1e-6 * lambda_s)
    }
}

/// First-order optimality report for the Huber objective.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KktReport {
    /// `|(lambda_o / sqrt(n)) X^T psi(r(beta))|_inf`.
    pub gradient_supnorm: f64,
    /// Worst deviation of the gradient from `lambda_s * sign(beta_j)` over
    /// the support of `beta`.
    pub support_violation: f64,
    pub satisfied: bool,
}

/// Soft-thresholding, the proximal operator of `threshold * |.|_1`.
///
/// Components landing exactly on the threshold map to zero.
pub fn prox_l1(v: ArrayView1<f64>, threshold: f64) -> Result<Array1<f64>> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "prox_l1 threshold must be nonnegative, got {threshold}"
        )));
    }
    Ok(v.mapv(|t| soft_scalar(t, threshold)))
}

#[inline]
pub(crate) fn soft_scalar(t: f64, threshold: f64) -> f64 {
    if t > threshold {
        t - threshold
    } else if t < -threshold {
        t + threshold
    } else {
        0.0
    }
}

/// The penalized Huber objective `L(beta)` of the reformulated problem.
pub fn objective_huber(
    instance: &ProblemInstance,
    beta: ArrayView1<f64>,
    penalties: &PenaltyPair,
) -> Result<f64> {
    if beta.len() != instance.dim() {
        return Err(Error::DimensionMismatch {
            expected: instance.dim(),
            got: beta.len(),
            context: "objective_huber: beta",
        });
    }
    Ok(huber_objective_raw(
        instance.x.view(),
        instance.y.view(),
        beta,
        penalties.lambda_s,
        penalties.lambda_o,
    ))
}

fn huber_objective_raw(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    lambda_s: f64,
    lambda_o: f64,
) -> f64 {
    let n = x.nrows() as f64;
    let scale = lambda_o * n.sqrt();
    let fitted = x.dot(&beta);
    let smooth: f64 = y
        .iter()
        .zip(fitted.iter())
        .map(|(yi, fi)| value_raw((yi - fi) / scale))
        .sum();
    lambda_o * lambda_o * smooth + lambda_s * l1_norm(beta)
}

/// Gradient of the smooth Huber part: `-(lambda_o / sqrt(n)) X^T psi(r(beta))`.
pub fn huber_smooth_gradient(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    lambda_o: f64,
) -> Array1<f64> {
    let n = x.nrows() as f64;
    let scale = lambda_o * n.sqrt();
    let fitted = x.dot(&beta);
    let psi = Array1::from_shape_fn(x.nrows(), |i| psi_raw((y[i] - fitted[i]) / scale));
    x.t().dot(&psi) * (-(lambda_o / n.sqrt()))
}

struct PgRun {
    beta: Array1<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Monotone FISTA on `f(beta) + lambda_s |beta|_1`.
///
/// When the objective plateaus, the optional `polish` hook (active-set
/// Newton) is given a chance to finish the job; convergence is only declared
/// once `kkt_ok` holds at the candidate, otherwise iteration continues with
/// a momentum restart until the budget runs out.
#[allow(clippy::too_many_arguments)]
fn prox_gradient_l1<F, G, K, P>(
    f_value: F,
    f_grad: G,
    lambda_s: f64,
    lipschitz0: f64,
    beta0: Array1<f64>,
    config: &SolverConfig,
    kkt_ok: K,
    polish: P,
) -> PgRun
where
    F: Fn(ArrayView1<f64>) -> f64,
    G: Fn(ArrayView1<f64>) -> Array1<f64>,
    K: Fn(ArrayView1<f64>) -> bool,
    P: Fn(&Array1<f64>) -> Option<(Array1<f64>, f64)>,
{
    let mut lip = lipschitz0.max(1e-12);
    let objective = |b: ArrayView1<f64>| f_value(b) + lambda_s * l1_norm(b);

    // one backtracked prox step from `point`; `f_point` is f(point)
    let step = |point: &Array1<f64>, f_point: f64, grad: &Array1<f64>, lip: &mut f64| -> Array1<f64> {
        loop {
            let cand = (point - &(grad / *lip)).mapv(|t| soft_scalar(t, lambda_s / *lip));
            if matches!(config.step_rule, StepRule::Fixed) {
                return cand;
            }
            let diff = &cand - point;
            let quad = f_point + grad.dot(&diff) + 0.5 * *lip * diff.dot(&diff);
            let actual = f_value(cand.view());
            if actual <= quad + 1e-12 * (1.0 + actual.abs()) {
                return cand;
            }
            *lip *= 2.0;
        }
    };

    let mut x = beta0;
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut fx = objective(x.view());
    let mut trace = vec![fx];
    let mut converged = false;
    let mut iterations = 0;
    let mut last_poll = 0_usize;

    for k in 1..=config.max_iterations {
        iterations = k;
        let f_y = f_value(y.view());
        let grad = f_grad(y.view());
        let mut z = step(&y, f_y, &grad, &mut lip);
        let mut fz = objective(z.view());
        if fz > fx + 1e-15 * (1.0 + fx.abs()) {
            // momentum overshot: restart from the last accepted iterate
            t = 1.0;
            let f_x = f_value(x.view());
            let grad_x = f_grad(x.view());
            z = step(&x, f_x, &grad_x, &mut lip);
            fz = objective(z.view());
            if fz > fx {
                // at the numerical floor
                z = x.clone();
                fz = fx;
            }
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = if config.acceleration {
            &z + &((&z - &x) * ((t - 1.0) / t_next))
        } else {
            z.clone()
        };
        t = t_next;

        let prev = fx;
        x = z;
        fx = fz;
        trace.push(fx);

        let rel_decrease = (prev - fx) / 1.0_f64.max(prev.abs());
        if rel_decrease <= config.tolerance && k >= last_poll + 5 {
            last_poll = k;
            if let Some((polished, f_polished)) = polish(&x) {
                if f_polished <= fx + 1e-12 * (1.0 + fx.abs()) {
                    x = polished;
                    fx = f_polished.min(fx);
                    trace.push(fx);
                }
            }
            if kkt_ok(x.view()) {
                converged = true;
                break;
            }
            // plateau without stationarity: drop momentum and keep going
            t = 1.0;
            y = x.clone();
        }
    }

    PgRun {
        beta: x,
        trace,
        iterations,
        converged,
    }
}

/// Active-set Newton polish for objectives `f(beta) + lambda_s |beta|_1`
/// with piecewise-quadratic `f`: fixes the signs on the current support,
/// takes damped Newton steps on that face (dropping coordinates that hit
/// zero), and returns the improved point with its full objective value.
///
/// `grad` evaluates the full gradient of `f`; `hessian_on` builds the
/// support-restricted Hessian.
fn active_set_polish<F, G, H>(
    f_value: F,
    grad: G,
    hessian_on: H,
    lambda_s: f64,
    beta: &Array1<f64>,
    tol: f64,
) -> Option<(Array1<f64>, f64)>
where
    F: Fn(ArrayView1<f64>) -> f64,
    G: Fn(ArrayView1<f64>) -> Array1<f64>,
    H: Fn(ArrayView1<f64>, &[usize]) -> Array2<f64>,
{
    let objective = |b: ArrayView1<f64>| f_value(b) + lambda_s * l1_norm(b);
    let mut x = beta.clone();
    let mut fx = objective(x.view());
    let mut improved = false;

    for _ in 0..40 {
        let support: Vec<usize> = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| j)
            .collect();
        if support.is_empty() {
            break;
        }
        let g_full = grad(x.view());
        let mut g_face = Array1::<f64>::zeros(support.len());
        let mut face_norm = 0.0_f64;
        for (idx, &j) in support.iter().enumerate() {
            g_face[idx] = g_full[j] + lambda_s * x[j].signum();
            face_norm = face_norm.max(g_face[idx].abs());
        }
        if face_norm <= 0.25 * tol {
            break;
        }
        let mut h = hessian_on(x.view(), &support);
        let ridge = 1e-10 * (1.0 + h.diag().iter().fold(0.0_f64, |m, v| m.max(*v)));
        for i in 0..support.len() {
            h[[i, i]] += ridge;
        }
        let dir = match solve_spd(h.view(), g_face.view()) {
            Ok(d) => d,
            Err(_) => break,
        };
        // descent step with sign truncation: a coordinate crossing zero is
        // clipped out of the support
        let mut t = 1.0_f64;
        let mut stepped = false;
        for _ in 0..30 {
            let mut cand = x.clone();
            for (idx, &j) in support.iter().enumerate() {
                let new = x[j] - t * dir[idx];
                cand[j] = if new.signum() != x[j].signum() { 0.0 } else { new };
            }
            let fc = objective(cand.view());
            if fc <= fx - 1e-14 * (1.0 + fx.abs()) {
                x = cand;
                fx = fc;
                stepped = true;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !stepped {
            break;
        }
    }
    if improved {
        Some((x, fx))
    } else {
        None
    }
}

/// Support-restricted Hessian of the smooth Huber part: `(1/n)` times the
/// Gram matrix of the quadratic-zone rows.
fn huber_hessian_on(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    lambda_o: f64,
    support: &[usize],
) -> Array2<f64> {
    let n = x.nrows();
    let nf = n as f64;
    let scale = lambda_o * nf.sqrt();
    let fitted = x.dot(&beta);
    let k = support.len();
    let mut h = Array2::<f64>::zeros((k, k));
    for i in 0..n {
        if ((y[i] - fitted[i]) / scale).abs() > 1.0 {
            continue;
        }
        for (a, &ja) in support.iter().enumerate() {
            let xa = x[[i, ja]];
            if xa == 0.0 {
                continue;
            }
            for (c, &jc) in support.iter().enumerate().skip(a) {
                h[[a, c]] += xa * x[[i, jc]];
            }
        }
    }
    for a in 0..k {
        for c in 0..a {
            h[[a, c]] = h[[c, a]];
        }
    }
    h / nf
}

fn kkt_from_gradient(gradient: &Array1<f64>, beta: &Array1<f64>, lambda_s: f64, tol: f64) -> KktReport {
    let gradient_supnorm = linf_norm(gradient.view());
    let mut support_violation = 0.0_f64;
    for (g, b) in gradient.iter().zip(beta.iter()) {
        if *b != 0.0 {
            support_violation = support_violation.max((g - lambda_s * b.signum()).abs());
        }
    }
    KktReport {
        gradient_supnorm,
        support_violation,
        satisfied: gradient_supnorm <= lambda_s + tol && support_violation <= tol,
    }
}

/// Stationarity check for the Huber objective at `beta_hat`.
pub fn kkt_check(
    instance: &ProblemInstance,
    beta_hat: ArrayView1<f64>,
    penalties: &PenaltyPair,
    kkt_tolerance: f64,
) -> KktReport {
    let grad = huber_smooth_gradient(
        instance.x.view(),
        instance.y.view(),
        beta_hat,
        penalties.lambda_o,
    )
    .mapv(|g| -g); // Eq. form: (lambda_o/sqrt(n)) X^T psi = lambda_s * sign
    kkt_from_gradient(
        &grad,
        &beta_hat.to_owned(),
        penalties.lambda_s,
        kkt_tolerance,
    )
}

fn backfill_theta(instance: &ProblemInstance, beta: &Array1<f64>, lambda_o: f64) -> Array1<f64> {
    let sqrt_n = (instance.samples() as f64).sqrt();
    let fitted = instance.x.dot(beta);
    Array1::from_shape_fn(instance.samples(), |i| {
        soft_scalar((instance.y[i] - fitted[i]) / sqrt_n, lambda_o)
    })
}

pub(crate) fn count_c_cut_at(instance: &ProblemInstance, beta: &Array1<f64>, lambda_o: f64) -> usize {
    let scale = lambda_o * (instance.samples() as f64).sqrt();
    let fitted = instance.x.dot(beta);
    let mut outliers = instance.outlier_index.iter().copied().peekable();
    let mut count = 0;
    for i in 0..instance.samples() {
        if outliers.peek() == Some(&i) {
            outliers.next();
            continue;
        }
        if ((instance.y[i] - fitted[i]) / scale).abs() > 1.0 {
            count += 1;
        }
    }
    count
}

/// Minimize the penalized Huber objective by accelerated proximal gradient.
pub fn solve_huber_lasso(
    instance: &ProblemInstance,
    penalties: &PenaltyPair,
    config: &SolverConfig,
) -> Result<FitResult> {
    config.validate()?;
    let (lambda_s, lambda_o) = (penalties.lambda_s, penalties.lambda_o);
    let x = instance.x.view();
    let y = instance.y.view();
    let lip = op_norm_sq(x, POWER_ITERATION_STEPS) / instance.samples() as f64;
    let kkt_tol = config.resolved_kkt_tolerance(lambda_s);

    let run = prox_gradient_l1(
        |b| huber_objective_raw(x, y, b, 0.0, lambda_o),
        |b| huber_smooth_gradient(x, y, b, lambda_o),
        lambda_s,
        lip,
        Array1::zeros(instance.dim()),
        config,
        |b| kkt_check(instance, b, penalties, kkt_tol).satisfied,
        |b| {
            active_set_polish(
                |v| huber_objective_raw(x, y, v, 0.0, lambda_o),
                |v| huber_smooth_gradient(x, y, v, lambda_o),
                |v, support| huber_hessian_on(x, y, v, lambda_o, support),
                lambda_s,
                b,
                kkt_tol,
            )
        },
    );

    let kkt = kkt_check(instance, run.beta.view(), penalties, kkt_tol);
    let theta_hat = backfill_theta(instance, &run.beta, lambda_o);
    let c_cut = count_c_cut_at(instance, &run.beta, lambda_o);
    Ok(FitResult {
        theta_hat,
        objective_trace: run.trace,
        kkt_residual: (kkt.gradient_supnorm - lambda_s)
            .max(kkt.support_violation)
            .max(0.0),
        iterations: run.iterations,
        converged: run.converged,
        c_cut: Some(c_cut),
        beta_hat: run.beta,
    })
}

/// Result of a plain-Lasso solve.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub beta: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Plain Lasso `argmin (1/2n)|y - X beta|_2^2 + lambda_s |beta|_1`.
pub fn solve_plain_lasso(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambda_s: f64,
    config: &SolverConfig,
) -> Result<LassoFit> {
    solve_plain_lasso_warm(x, y, lambda_s, config, Array1::zeros(x.ncols()))
}

fn solve_plain_lasso_warm(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambda_s: f64,
    config: &SolverConfig,
    beta0: Array1<f64>,
) -> Result<LassoFit> {
    config.validate()?;
    if !(lambda_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_s must be positive, got {lambda_s}"
        )));
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
            context: "solve_plain_lasso: y",
        });
    }
    let n = x.nrows() as f64;
    let lip = op_norm_sq(x, POWER_ITERATION_STEPS) / n;
    let kkt_tol = config.resolved_kkt_tolerance(lambda_s);

    let value = |b: ArrayView1<f64>| {
        let r = &y - &x.dot(&b);
        r.dot(&r) / (2.0 * n)
    };
    let grad = |b: ArrayView1<f64>| {
        let r = &y - &x.dot(&b);
        x.t().dot(&r) * (-1.0 / n)
    };
    let kkt_ok = |b: ArrayView1<f64>| {
        let g = grad(b).mapv(|v| -v);
        kkt_from_gradient(&g, &b.to_owned(), lambda_s, kkt_tol).satisfied
    };
    let polish = |b: &Array1<f64>| {
        active_set_polish(
            value,
            grad,
            |_, support: &[usize]| {
                let k = support.len();
                let mut h = Array2::<f64>::zeros((k, k));
                for i in 0..x.nrows() {
                    for (a, &ja) in support.iter().enumerate() {
                        let xa = x[[i, ja]];
                        if xa == 0.0 {
                            continue;
                        }
                        for (c, &jc) in support.iter().enumerate().skip(a) {
                            h[[a, c]] += xa * x[[i, jc]];
                        }
                    }
                }
                for a in 0..k {
                    for c in 0..a {
                        h[[a, c]] = h[[c, a]];
                    }
                }
                h / n
            },
            lambda_s,
            b,
            kkt_tol,
        )
    };

    let run = prox_gradient_l1(value, grad, lambda_s, lip, beta0, config, kkt_ok, polish);
    Ok(LassoFit {
        beta: run.beta,
        iterations: run.iterations,
        converged: run.converged,
    })
}

fn extended_objective(
    instance: &ProblemInstance,
    beta: &Array1<f64>,
    theta: &Array1<f64>,
    penalties: &PenaltyPair,
) -> f64 {
    let n = instance.samples() as f64;
    let sqrt_n = n.sqrt();
    let fitted = instance.x.dot(beta);
    let resid: f64 = (0..instance.samples())
        .map(|i| {
            let r = instance.y[i] - fitted[i] - sqrt_n * theta[i];
            r * r
        })
        .sum();
    resid / (2.0 * n)
        + penalties.lambda_s * l1_norm(beta.view())
        + penalties.lambda_o * l1_norm(theta.view())
}

/// Solve the joint problem over `(beta, theta)` by exact alternating
/// minimization: Lasso in `beta` on the theta-corrected outputs, then the
/// closed-form soft threshold in `theta`.
pub fn solve_extended_lasso(
    instance: &ProblemInstance,
    penalties: &PenaltyPair,
    config: &SolverConfig,
) -> Result<FitResult> {
    config.validate()?;
    let n = instance.samples();
    let sqrt_n = (n as f64).sqrt();
    let kkt_tol = config.resolved_kkt_tolerance(penalties.lambda_s);

    let mut beta = Array1::<f64>::zeros(instance.dim());
    let mut theta = Array1::<f64>::zeros(n);
    let mut objective = extended_objective(instance, &beta, &theta, penalties);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=config.max_iterations {
        iterations = k;
        let y_eff = &instance.y - &theta.mapv(|t| t * sqrt_n);
        let lasso = solve_plain_lasso_warm(
            instance.x.view(),
            y_eff.view(),
            penalties.lambda_s,
            config,
            beta,
        )?;
        beta = lasso.beta;
        let fitted = instance.x.dot(&beta);
        theta = Array1::from_shape_fn(n, |i| {
            soft_scalar((instance.y[i] - fitted[i]) / sqrt_n, penalties.lambda_o)
        });
        let next = extended_objective(instance, &beta, &theta, penalties);
        trace.push(next);
        let rel_decrease = (objective - next) / 1.0_f64.max(objective.abs());
        objective = next;
        if rel_decrease <= config.tolerance
            && kkt_check(instance, beta.view(), penalties, kkt_tol).satisfied
        {
            converged = true;
            break;
        }
    }

    let kkt = kkt_check(instance, beta.view(), penalties, kkt_tol);
    let c_cut = count_c_cut_at(instance, &beta, penalties.lambda_o);
    Ok(FitResult {
        theta_hat: theta,
        objective_trace: trace,
        kkt_residual: (kkt.gradient_supnorm - penalties.lambda_s)
            .max(kkt.support_violation)
            .max(0.0),
        iterations,
        converged,
        c_cut: Some(c_cut),
        beta_hat: beta,
    })
}
