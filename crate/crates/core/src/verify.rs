//! Monte Carlo verification of the probabilistic ingredients: Gaussian-width
//! lemmas, the design-matrix propositions, the noise/Bernstein/chi-square
//! concentration bounds, the augmented transfer principle, and the
//! overflow-count bound.
//!
//! Universal quantifiers ("for any v, u") are probed over a finite,
//! seed-reproducible adversarial family; Monte Carlo can refute but not
//! prove, and a refutation on any probe is a genuine counterexample. Trials
//! are independent, run in parallel under per-trial derived seeds, and
//! aggregate by order-independent failure counts.

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use crate::instance::{FitResult, ProblemInstance};
use crate::io_util::{csv_field, format_f64};
use crate::linalg::{l1_norm, l2_norm, linf_norm};
use crate::rng::{derive_seed, seeded_rng};
use crate::solver::count_c_cut_at;
use crate::tuning::TuningBundle;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

/// 95% normal quantile for the Wilson interval.
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Monte Carlo verdict for one named inequality.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageRecord {
    pub inequality_id: String,
    pub trials: usize,
    pub failures: usize,
    /// `1 - delta`, or `(1 - delta)^3` for the joint noise bounds.
    pub nominal_level: f64,
    pub empirical_coverage: f64,
    /// 95% Wilson score half-width for the empirical coverage.
    pub wilson_halfwidth: f64,
    pub params: serde_json::Value,
}

impl CoverageRecord {
    fn new(id: &str, trials: usize, failures: usize, nominal: f64, params: serde_json::Value) -> Self {
        let coverage = 1.0 - failures as f64 / trials as f64;
        CoverageRecord {
            inequality_id: id.to_string(),
            trials,
            failures,
            nominal_level: nominal,
            empirical_coverage: coverage,
            wilson_halfwidth: wilson_halfwidth(trials, coverage),
            params,
        }
    }

    pub fn passes(&self) -> bool {
        self.empirical_coverage >= self.nominal_level - self.wilson_halfwidth
    }

    pub fn csv_header() -> &'static str {
        "inequality_id,trials,failures,nominal_level,empirical_coverage,wilson_halfwidth,pass,params"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            csv_field(&self.inequality_id),
            self.trials,
            self.failures,
            format_f64(self.nominal_level),
            format_f64(self.empirical_coverage),
            format_f64(self.wilson_halfwidth),
            self.passes(),
            csv_field(&self.params.to_string()),
        )
    }
}

/// Wilson score interval half-width at 95% for `coverage` out of `trials`.
pub fn wilson_halfwidth(trials: usize, coverage: f64) -> f64 {
    let n = trials as f64;
    let z = WILSON_Z;
    let p = coverage.clamp(0.0, 1.0);
    z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / (1.0 + z * z / n)
}

/// Monte Carlo Gaussian-width estimate next to its closed-form bound.
#[derive(Debug, Clone, Serialize)]
pub struct WidthEstimate {
    pub set_id: String,
    pub estimate: f64,
    pub std_error: f64,
    /// The binding lemma bound for this set.
    pub bound: f64,
    /// `|u|_1 sqrt(2 log n)`, for the intersection sets.
    pub bound_l1: Option<f64>,
    /// `4 sqrt(e) sqrt(m) sqrt(4 + log(n/m)) |u|_2`, for m-sparse `u`.
    pub bound_sparse: Option<f64>,
}

impl WidthEstimate {
    pub fn csv_header() -> &'static str {
        "set_id,estimate,std_error,bound,bound_l1,bound_sparse"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            csv_field(&self.set_id),
            format_f64(self.estimate),
            format_f64(self.std_error),
            format_f64(self.bound),
            opt(self.bound_l1),
            opt(self.bound_sparse),
        )
    }
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Estimate `G(Sigma^{1/2} B_1^d) = E |Sigma^{1/2} g|_inf` by Monte Carlo.
pub fn estimate_width_sigma_ball(
    covariance: &Covariance,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<WidthEstimate> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    let d = covariance.dim();
    let identity = matches!(covariance, Covariance::Identity { .. });
    let root = if identity {
        Array2::<f64>::zeros((0, 0))
    } else {
        covariance.symmetric_sqrt()?
    };
    let master: u64 = rng.gen();
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = seeded_rng(derive_seed(master, t as u64));
            let g = Array1::from_shape_fn(d, |_| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r)
            });
            if identity {
                linf_norm(g.view())
            } else {
                linf_norm(root.dot(&g).view())
            }
        })
        .collect();
    let (estimate, std_error) = mean_and_se(&samples);
    let bound = (2.0 * covariance.rho_sq() * (d as f64).ln()).sqrt();
    Ok(WidthEstimate {
        set_id: format!("sigma_l1_ball(d={d})"),
        estimate,
        std_error,
        bound,
        bound_l1: None,
        bound_sparse: None,
    })
}

/// Exact support function of `{x : |x|_1 <= a, |x|_2 <= b}` at `g`, by
/// sort-based water-filling. `O(n log n)`.
pub fn l1l2_support(g: &[f64], a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let mut m: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    m.sort_by(|x, y| y.partial_cmp(x).expect("l1l2_support: NaN"));
    let norm2 = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm2 == 0.0 {
        return 0.0;
    }
    let norm1: f64 = m.iter().sum();
    // l1 constraint slack: the l2 cap alone decides
    if b * norm1 <= a * norm2 {
        return b * norm2;
    }
    let c = a / b; // target ratio |x|_1 / |x|_2
    let n = m.len();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for k in 1..=n {
        s1 += m[k - 1];
        s2 += m[k - 1] * m[k - 1];
        let kf = k as f64;
        let lo = if k < n { m[k] } else { 0.0 };
        let hi = m[k - 1];
        let qa = kf * (kf - c * c);
        let qb = -2.0 * s1 * (kf - c * c);
        let qc = s1 * s1 - c * c * s2;
        if qa.abs() < 1e-14 * (1.0 + s1 * s1) {
            continue;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            continue;
        }
        let root = disc.sqrt();
        for lambda in [(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)] {
            let eps = 1e-12 * (1.0 + hi);
            if lambda >= -eps && lambda >= lo - eps && lambda <= hi + eps {
                let lam = lambda.max(0.0);
                let den = (s2 - 2.0 * lam * s1 + kf * lam * lam).max(0.0).sqrt();
                if den > 0.0 {
                    let ratio = (s1 - kf * lam) / den;
                    if (ratio - c).abs() <= 1e-6 * (1.0 + c) {
                        return b * (s2 - lam * s1) / den;
                    }
                }
            }
        }
    }
    // numerical fallback: bisection on the monotone ratio
    l1l2_support_bisect(&m, c, b)
}

/// Bisection fallback (and test oracle) for the water-filling solve.
pub fn l1l2_support_bisect(sorted_abs_desc: &[f64], c: f64, b: f64) -> f64 {
    let m = sorted_abs_desc;
    let eval = |lambda: f64| -> (f64, f64, f64) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut k = 0.0;
        for &v in m {
            if v > lambda {
                s1 += v - 0.0;
                s2 += v * v;
                k += 1.0;
            } else {
                break;
            }
        }
        (s1 - k * lambda, (s2 - 2.0 * lambda * s1 + k * lambda * lambda).max(0.0), s2 - lambda * s1)
    };
    let mut lo = 0.0;
    let mut hi = m[0];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (num, den_sq, _) = eval(mid);
        let ratio = if den_sq > 0.0 { num / den_sq.sqrt() } else { 0.0 };
        if ratio > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    let (_, den_sq, inner) = eval(lam);
    if den_sq > 0.0 {
        b * inner / den_sq.sqrt()
    } else {
        0.0
    }
}

/// Estimate `G(|u|_1 B_1^n \cap |u|_2 B_2^n)` and report both lemma bounds.
pub fn estimate_width_l1l2(
    u: &Array1<f64>,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<WidthEstimate> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    let a = l1_norm(u.view());
    let b = l2_norm(u.view());
    if a == 0.0 {
        return Err(Error::InvalidParameter("u must be nonzero".into()));
    }
    let n = u.len();
    let m = u.iter().filter(|v| **v != 0.0).count();
    let master: u64 = rng.gen();
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = seeded_rng(derive_seed(master, t as u64));
            let g: Vec<f64> = (0..n)
                .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r))
                .collect();
            l1l2_support(&g, a, b)
        })
        .collect();
    let (estimate, std_error) = mean_and_se(&samples);
    let bound_l1 = a * (2.0 * (n as f64).ln()).sqrt();
    let bound_sparse = 4.0 * std::f64::consts::E.sqrt()
        * (m as f64).sqrt()
        * (4.0 + (n as f64 / m as f64).ln()).sqrt()
        * b;
    Ok(WidthEstimate {
        set_id: format!("l1_l2_intersection(n={n},m={m})"),
        estimate,
        std_error,
        bound: bound_l1.min(bound_sparse),
        bound_l1: Some(bound_l1),
        bound_sparse: Some(bound_sparse),
    })
}

/// Which concentration statement to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    Prop3,
    Prop4,
    NoiseSupnorm,
    XtxiSupnorm,
    BernsteinZ,
    Chisq,
}

impl InequalityId {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "prop3" => InequalityId::Prop3,
            "prop4" => InequalityId::Prop4,
            "noise_supnorm" => InequalityId::NoiseSupnorm,
            "xtxi_supnorm" => InequalityId::XtxiSupnorm,
            "bernstein_z" => InequalityId::BernsteinZ,
            "chisq" => InequalityId::Chisq,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            InequalityId::Prop3 => "prop3",
            InequalityId::Prop4 => "prop4",
            InequalityId::NoiseSupnorm => "noise_supnorm",
            InequalityId::XtxiSupnorm => "xtxi_supnorm",
            InequalityId::BernsteinZ => "bernstein_z",
            InequalityId::Chisq => "chisq",
        }
    }
}

/// Parameters for [`verify_inequality`] and [`verify_atp`].
#[derive(Debug, Clone)]
pub struct VerifyParams {
    pub n: usize,
    pub d: usize,
    pub delta: f64,
    pub sigma: f64,
    pub covariance: Covariance,
    /// Required by `bernstein_z`.
    pub lambda_o: Option<f64>,
    /// Random probes per family component for the uniform statements.
    pub probes: usize,
    /// Inner Monte Carlo budget for plug-in width estimates.
    pub width_trials: usize,
    /// Additional fixed `v` probes (e.g. an instance-specific
    /// `beta_star - beta_hat`) for prop3/prop4.
    pub extra_probes_v: Vec<Vec<f64>>,
}

impl VerifyParams {
    pub fn new(n: usize, d: usize, delta: f64, sigma: f64) -> Self {
        VerifyParams {
            n,
            d,
            delta,
            sigma,
            covariance: Covariance::identity(d),
            lambda_o: None,
            probes: 4,
            width_trials: 400,
            extra_probes_v: Vec::new(),
        }
    }

    fn echo(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "d": self.d,
            "delta": self.delta,
            "sigma": self.sigma,
            "covariance": self.covariance,
            "lambda_o": self.lambda_o,
        })
    }
}

fn require(cond: bool, name: &'static str, detail: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::PreconditionFailed {
            condition: name,
            detail,
        })
    }
}

fn sample_xi(n: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| {
        sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    })
}

fn sample_design(n: usize, factor: &Array2<f64>, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let d = factor.nrows();
    let mut x = Array2::<f64>::zeros((n, d));
    let mut g = vec![0.0_f64; d];
    for i in 0..n {
        for gj in g.iter_mut() {
            *gj = StandardNormal.sample(rng);
        }
        for j in 0..d {
            let mut acc = 0.0;
            for (k, gk) in g.iter().enumerate().take(j + 1) {
                acc += factor[[j, k]] * gk;
            }
            x[[i, j]] = acc;
        }
    }
    x
}

fn run_trials<F>(trials: usize, master: u64, trial_fails: F) -> usize
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded_rng(derive_seed(master, t as u64));
            usize::from(trial_fails(&mut rng))
        })
        .sum()
}

/// One unit-norm dense probe and assorted sparse sign probes in `R^dim`.
fn v_probe_family(dim: usize, probes: usize, rng: &mut ChaCha8Rng) -> Vec<Array1<f64>> {
    let mut out = Vec::new();
    for _ in 0..probes {
        let mut v = Array1::from_shape_fn(dim, |_| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        });
        let norm = l2_norm(v.view());
        if norm > 0.0 {
            v.mapv_inplace(|t| t / norm);
        }
        out.push(v);
    }
    for k in [1usize, 2, dim.min(5)] {
        let mut v = Array1::<f64>::zeros(dim);
        let mut coords: Vec<usize> = (0..dim).collect();
        coords.shuffle(rng);
        for &j in coords.iter().take(k) {
            v[j] = if rng.gen::<bool>() { 1.0 } else { -1.0 } / (k as f64).sqrt();
        }
        out.push(v);
    }
    out
}

/// Monte Carlo coverage for one named inequality.
pub fn verify_inequality(
    id: InequalityId,
    params: &VerifyParams,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CoverageRecord> {
    let (n, d, delta, sigma) = (params.n, params.d, params.delta, params.sigma);
    let nf = n as f64;
    let df = d as f64;
    require(trials >= 1, "trials", "at least one trial".into())?;
    require(
        delta > 0.0 && delta < 1.0,
        "delta",
        format!("delta in (0,1), got {delta}"),
    )?;
    let rho_sq = params.covariance.rho_sq();
    let master: u64 = rng.gen();

    match id {
        InequalityId::NoiseSupnorm => {
            require(
                nf >= 2.0 * (df / delta).ln(),
                "n >= 2 log(d/delta)",
                format!("n = {n}, d = {d}, delta = {delta}"),
            )?;
            let cap = (2.0 * sigma * sigma * (nf / delta).ln() / nf).sqrt();
            let failures = run_trials(trials, master, |r| {
                let xi = sample_xi(n, sigma, r);
                linf_norm(xi.view()) / nf.sqrt() > cap
            });
            Ok(CoverageRecord::new(
                id.name(),
                trials,
                failures,
                (1.0 - delta).powi(3),
                params.echo(),
            ))
        }
        InequalityId::XtxiSupnorm => {
            require(
                nf >= 2.0 * (df / delta).ln(),
                "n >= 2 log(d/delta)",
                format!("n = {n}, d = {d}, delta = {delta}"),
            )?;
            let factor = params.covariance.factor()?;
            let cap = 2.0 * (2.0 * sigma * sigma * rho_sq * (df / delta).ln() / nf).sqrt();
            let failures = run_trials(trials, master, |r| {
                let x = sample_design(n, &factor, r);
                let xi = sample_xi(n, sigma, r);
                linf_norm((x.t().dot(&xi) / nf).view()) > cap
            });
            Ok(CoverageRecord::new(
                id.name(),
                trials,
                failures,
                (1.0 - delta).powi(3),
                params.echo(),
            ))
        }
        InequalityId::BernsteinZ => {
            let lambda_o = params.lambda_o.ok_or_else(|| Error::InvalidParameter(
                "bernstein_z requires lambda_o".into(),
            ))?;
            require(
                ((df / delta).ln() / nf).sqrt() <= 3.0_f64.sqrt() - 2.0_f64.sqrt(),
                "c2",
                format!("sqrt(log(d/delta)/n) too large (n = {n}, d = {d}, delta = {delta})"),
            )?;
            let factor = params.covariance.factor()?;
            let c_z = (3.0 * rho_sq * sigma * sigma * (df / delta).ln() / (lambda_o * lambda_o * nf))
                .sqrt();
            let scale = lambda_o * nf.sqrt();
            let failures = run_trials(trials, master, |r| {
                let x = sample_design(n, &factor, r);
                let xi = sample_xi(n, sigma, r);
                let psi = xi.mapv(|v| crate::huber::psi_raw(v / scale));
                linf_norm((x.t().dot(&psi) / nf.sqrt()).view()) > c_z
            });
            Ok(CoverageRecord::new(
                id.name(),
                trials,
                failures,
                1.0 - delta,
                params.echo(),
            ))
        }
        InequalityId::Chisq => {
            let log_inv = (1.0 / delta).ln();
            require(
                2.0 * (nf * log_inv).sqrt() + 2.0 * log_inv <= nf,
                "c3",
                format!("2 sqrt(n log(1/delta)) + 2 log(1/delta) > n (n = {n}, delta = {delta})"),
            )?;
            let cap = 2.0 * sigma * sigma;
            let failures = run_trials(trials, master, |r| {
                let xi = sample_xi(n, sigma, r);
                xi.dot(&xi) / nf > cap
            });
            Ok(CoverageRecord::new(
                id.name(),
                trials,
                failures,
                1.0 - delta,
                params.echo(),
            ))
        }
        InequalityId::Prop3 => {
            require(
                delta <= 1.0 / 7.0 && n >= 100,
                "c1",
                format!("delta in (0,1/7] and n >= 100 required (n = {n}, delta = {delta})"),
            )?;
            let factor = params.covariance.factor()?;
            let mut width_rng = seeded_rng(derive_seed(master, 0xFFFF_FFFF));
            let width = estimate_width_sigma_ball(
                &params.covariance,
                params.width_trials.max(100),
                &mut width_rng,
            )?
            .estimate;
            let a1 = 1.0 - (4.3 + (2.0 * (9.0_f64 / delta).ln()).sqrt()) / nf.sqrt();
            let cov = params.covariance.clone();
            let probes = params.probes;
            let extra = params.extra_probes_v.clone();
            let failures = run_trials(trials, master, |r| {
                let z = sample_design(n, &factor, r);
                let mut family = v_probe_family(d, probes, r);
                family.extend(
                    extra
                        .iter()
                        .filter(|v| v.len() == d)
                        .map(|v| Array1::from_vec(v.clone())),
                );
                family.iter().any(|v| {
                    let lhs = l2_norm((z.dot(v) / nf.sqrt()).view());
                    let rhs = a1 * cov.sigma_norm(v.view()) - 1.2 * width / nf.sqrt() * l1_norm(v.view());
                    lhs < rhs - 1e-10 * (1.0 + rhs.abs())
                })
            });
            Ok(CoverageRecord::new(
                id.name(),
                trials,
                failures,
                1.0 - delta,
                params.echo(),
            ))
        }
        InequalityId::Prop4 => {
            require(
                delta <= 1.0 / 7.0,
                "c1",
                format!("delta in (0,1/7] required, got {delta}"),
            )?;
            let factor = params.covariance.factor()?;
            let mut width_rng = seeded_rng(derive_seed(master, 0xFFFF_FFFE));
            let width_sigma = estimate_width_sigma_ball(
                &params.covariance,
                params.width_trials.max(100),
                &mut width_rng,
            )?
            .estimate;
            // u probes are equal-magnitude sign patterns with |u|_2 = 1, so
            // the intersection-set width depends only on the support size m
            let m_sizes: Vec<usize> = {
                let mut ms = vec![1usize, (nf.sqrt() as usize).max(2).min(n), n];
                ms.dedup();
                ms
            };
            let widths_u: Vec<(usize, f64)> = m_sizes
                .iter()
                .map(|&m| {
                    let mut u = Array1::<f64>::zeros(n);
                    for ui in u.iter_mut().take(m) {
                        *ui = 1.0 / (m as f64).sqrt();
                    }
                    let mut wr = seeded_rng(derive_seed(master, 0xFFF0_0000 + m as u64));
                    let est = estimate_width_l1l2(&u, params.width_trials.max(100), &mut wr)
                        .map(|w| w.estimate)
                        .unwrap_or(0.0);
                    (m, est)
                })
                .collect();
            let b1_coef = (2.0 / nf).sqrt() * (4.8 + (81.0_f64 / delta).ln().sqrt());
            let cov = params.covariance.clone();
            let probes = params.probes;
            let extra = params.extra_probes_v.clone();
            let failures = run_trials(trials, master, |r| {
                let z = sample_design(n, &factor, r);
                let mut vs = v_probe_family(d, probes, r);
                vs.extend(
                    extra
                        .iter()
                        .filter(|v| v.len() == d)
                        .map(|v| Array1::from_vec(v.clone())),
                );
                for v in &vs {
                    let zv = z.dot(v) / nf.sqrt();
                    let sig_v = cov.sigma_norm(v.view());
                    let l1_v = l1_norm(v.view());
                    for &(m, width_u) in &widths_u {
                        // worst-case u for this m: align signs with the
                        // largest components of Zv
                        let mut idx: Vec<usize> = (0..n).collect();
                        idx.sort_by(|&a, &b| {
                            zv[b].abs().partial_cmp(&zv[a].abs()).unwrap().then(a.cmp(&b))
                        });
                        let scale = 1.0 / (m as f64).sqrt();
                        let mut lhs = 0.0;
                        for &i in idx.iter().take(m) {
                            lhs += zv[i].abs() * scale;
                        }
                        let rhs = sig_v * b1_coef
                            + 1.2 * l1_v * width_sigma / nf
                            + 1.2 * sig_v * width_u / nf.sqrt();
                        if lhs > rhs + 1e-10 * (1.0 + rhs.abs()) {
                            return true;
                        }
                    }
                }
                false
            });
            Ok(CoverageRecord::new(
                id.name(),
                trials,
                failures,
                1.0 - delta,
                params.echo(),
            ))
        }
    }
}

/// Probe the augmented transfer principle with the constants of the main
/// theorem: `c1 = C_{n,delta}`, `c2 = 3.6 sqrt(2 rho^2 log d / n)`,
/// `c3 = 2.4 sqrt(2 log n / n)` (the alpha = 1/2 instantiation).
pub fn verify_atp(params: &VerifyParams, trials: usize, rng: &mut ChaCha8Rng) -> Result<CoverageRecord> {
    let (n, d, delta) = (params.n, params.d, params.delta);
    let nf = n as f64;
    let a1 = 1.0 - (4.3 + (2.0 * (9.0_f64 / delta).ln()).sqrt()) / nf.sqrt();
    let b1 = (2.0 / nf).sqrt() * (4.8 + (81.0_f64 / delta).ln().sqrt());
    let c1 = crate::tuning::c_n_delta(a1, b1);
    require(
        c1 > 0.0,
        "C_{n,delta} > 0",
        format!("C_{{n,delta}} = {c1} at n = {n}, delta = {delta}"),
    )?;
    let rho_sq = params.covariance.rho_sq();
    let c2 = 3.6 * (2.0 * rho_sq * (d as f64).ln() / nf).sqrt();
    let c3 = 2.4 * (2.0 * nf.ln() / nf).sqrt();
    let factor = params.covariance.factor()?;
    let cov = params.covariance.clone();
    let probes = params.probes;
    let master: u64 = rng.gen();
    let failures = run_trials(trials, master, |r| {
        let x = sample_design(n, &factor, r);
        let vs = v_probe_family(d, probes, r);
        let us = v_probe_family(n, probes, r);
        let check = |v: &Array1<f64>, u: &Array1<f64>| -> bool {
            let lhs = l2_norm((&x.dot(v) / nf.sqrt() + u).view());
            let rhs = c1 * (cov.sigma_norm(v.view()) + l2_norm(u.view()))
                - c2 * l1_norm(v.view())
                - c3 * l1_norm(u.view());
            lhs < rhs - 1e-10 * (1.0 + rhs.abs())
        };
        let zero_v = Array1::<f64>::zeros(d);
        let zero_u = Array1::<f64>::zeros(n);
        for v in &vs {
            if check(v, &zero_u) {
                return true;
            }
            // designed hard probe: u cancels Xv/sqrt(n) so the left side is 0
            let hard_u = x.dot(v).mapv(|t| -t / nf.sqrt());
            if check(v, &hard_u) {
                return true;
            }
            for u in &us {
                if check(v, u) {
                    return true;
                }
            }
        }
        us.iter().any(|u| check(&zero_v, u))
    });
    Ok(CoverageRecord::new(
        "atp",
        trials,
        failures,
        1.0 - delta,
        params.echo(),
    ))
}

/// `C_cut`: how many uncontaminated rows sit beyond the Huber threshold at
/// the fitted coefficients.
pub fn measure_c_cut(instance: &ProblemInstance, fit: &FitResult, lambda_o: f64) -> usize {
    count_c_cut_at(instance, &fit.beta_hat, lambda_o)
}

/// The overflow-count bound evaluated at the measured estimation error:
/// `(2 C_r / lambda_o^2)(sqrt(2 sigma^2) g(n-o) + sqrt(o) lambda_o g(o) + sqrt(s) c_kappa lambda_s) * E`.
pub fn c_cut_bound(
    bundle: &TuningBundle,
    fit: &FitResult,
    instance: &ProblemInstance,
) -> Result<f64> {
    if !(bundle.c_r > 0.0) || !bundle.c_r.is_finite() {
        return Err(Error::PreconditionFailed {
            condition: "C_r > 0",
            detail: format!("C_r = {}", bundle.c_r),
        });
    }
    let p = &bundle.inputs;
    let error = instance.sigma_error(&fit.beta_hat);
    let g_clean = bundle.g(p.n - p.o)?;
    let outlier_term = if p.o == 0 {
        0.0
    } else {
        (p.o as f64).sqrt() * bundle.lambda_o * bundle.g(p.o)?
    };
    let inner = (2.0 * p.sigma * p.sigma).sqrt() * g_clean
        + outlier_term
        + (p.s as f64).sqrt() * bundle.c_kappa * bundle.lambda_s;
    Ok(2.0 * bundle.c_r / (bundle.lambda_o * bundle.lambda_o) * inner * error)
}

/// Heuristic sampling estimate of the restricted-eigenvalue constant: the
/// minimum of `|Sigma^{1/2} v|_2 / |v_J|_2` over sampled cone vectors.
/// Sampling can only overestimate the true minimum, so the value is an
/// upper bound on kappa, not a certificate.
pub fn estimate_re_kappa(
    covariance: &Covariance,
    s: usize,
    c0: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let d = covariance.dim();
    let s = s.min(d).max(1);
    if !(c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("c0 must be positive, got {c0}")));
    }

    let ratio = |v: &Array1<f64>, j: &[usize]| -> f64 {
        let vj_norm: f64 = j.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt();
        if vj_norm == 0.0 {
            return f64::INFINITY;
        }
        covariance.sigma_norm(v.view()) / vj_norm
    };

    let draw_cone_vector = |r: &mut ChaCha8Rng, t: f64| -> (Array1<f64>, Vec<usize>) {
        let mut coords: Vec<usize> = (0..d).collect();
        coords.shuffle(r);
        let j: Vec<usize> = {
            let mut j: Vec<usize> = coords.iter().copied().take(s).collect();
            j.sort_unstable();
            j
        };
        let mut v = Array1::<f64>::zeros(d);
        for &i in &j {
            v[i] = StandardNormal.sample(r);
        }
        let vj_l2: f64 = j.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt();
        if vj_l2 > 0.0 {
            for &i in &j {
                v[i] /= vj_l2;
            }
        } else {
            v[j[0]] = 1.0;
        }
        if t > 0.0 && d > s {
            let vj_l1: f64 = j.iter().map(|&i| v[i].abs()).sum();
            let rest: Vec<usize> = coords.iter().copied().skip(s).collect();
            let mut w: Vec<f64> = rest.iter().map(|_| StandardNormal.sample(r)).collect();
            let w_l1: f64 = w.iter().map(|x| x.abs()).sum();
            if w_l1 > 0.0 {
                let scale = t * c0 * vj_l1 / w_l1;
                for x in w.iter_mut() {
                    *x *= scale;
                }
                for (idx, &i) in rest.iter().enumerate() {
                    v[i] = w[idx];
                }
            }
        }
        (v, j)
    };

    let mut best = f64::INFINITY;
    let mut best_state: Option<(Array1<f64>, Vec<usize>)> = None;
    for k in 0..samples {
        let t = match k % 3 {
            0 => 0.0,
            1 => rng.gen::<f64>(),
            _ => 1.0,
        };
        let (v, j) = draw_cone_vector(rng, t);
        let r = ratio(&v, &j);
        if r < best {
            best = r;
            best_state = Some((v, j));
        }
    }

    // tiny problems get a local-descent polish
    if d <= 8 && s <= 2 {
        if let Some((mut v, j)) = best_state {
            let mut step = 0.25;
            for _ in 0..2000 {
                let mut cand = v.clone();
                for x in cand.iter_mut() {
                    let bump: f64 = StandardNormal.sample(rng);
                    *x += step * bump;
                }
                // project back into the cone for this J
                let vj_l1: f64 = j.iter().map(|&i| cand[i].abs()).sum();
                let rest_l1: f64 = (0..d)
                    .filter(|i| !j.contains(i))
                    .map(|i| cand[i].abs())
                    .sum();
                if rest_l1 > c0 * vj_l1 && rest_l1 > 0.0 {
                    let shrink = c0 * vj_l1 / rest_l1;
                    for i in 0..d {
                        if !j.contains(&i) {
                            cand[i] *= shrink;
                        }
                    }
                }
                let r = ratio(&cand, &j);
                if r < best {
                    best = r;
                    v = cand;
                } else {
                    step *= 0.995;
                }
            }
        }
    }
    Ok(best)
}
