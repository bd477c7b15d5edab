//! Experiment harness: parameter sweeps comparing tuning recipes, power-law
//! exponent fits, and CSV/SVG reporting.
//!
//! A run is fully determined by `(spec, master_seed)`: cells execute in a
//! rayon pool under per-cell derived seeds and are gathered back into
//! `(point, rep, method)` order before emission. Wall-clock timing is only
//! recorded when `record_timing` is set, because the CSV byte-determinism
//! contract would otherwise be unsatisfiable.

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use crate::instance::{PenaltyPair, ProblemInstance};
use crate::io_util::{csv_field, format_f64, parse_f64, split_csv_line};
use crate::linalg::median;
use crate::rng::derive_seed;
use crate::simulate::{generate_instance, InstanceSpec};
use crate::solver::{solve_huber_lasso, solve_plain_lasso, SolverConfig};
use crate::tuning::{nguyen_tran_tuning, paper_tuning, rate_constants, TuningInputs};
use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

pub const CSV_HEADER: &str = "axis,axis_value,rep,method,error_sigma,error_l2,error_l1,support_f1,theta_support_f1,c_cut,iterations,wall_ms,r_theory";
pub const CSV_COLUMNS: usize = 13;

/// Threshold below which a fitted coefficient counts as zero for support
/// metrics.
pub const SUPPORT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    N,
    O,
    S,
    D,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::O => "o",
            SweepAxis::S => "s",
            SweepAxis::D => "d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMethod {
    Paper,
    NguyenTran,
    PlainLasso,
}

impl TuningMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TuningMethod::Paper => "paper",
            TuningMethod::NguyenTran => "nguyen_tran",
            TuningMethod::PlainLasso => "plain_lasso",
        }
    }
}

fn default_delta() -> f64 {
    0.1
}
fn default_kappa() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    1.0
}
fn default_c_lambda_o() -> f64 {
    2.0
}

/// A sweep over one axis with everything else held fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub sweep_axis: SweepAxis,
    /// Strictly increasing.
    pub axis_values: Vec<usize>,
    /// Template for the non-swept instance fields; its `seed` is ignored in
    /// favor of per-cell seeds derived from `master_seed`.
    pub fixed: InstanceSpec,
    pub repetitions: usize,
    pub tuning_methods: Vec<TuningMethod>,
    pub master_seed: u64,
    /// Confidence parameter fed to the refined recipe and the theory curve.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// RE constant handed to the refined recipe.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Nguyen-Tran cone parameter.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_c_lambda_o")]
    pub c_lambda_o: f64,
    /// Record real wall-clock times (breaks byte-determinism across runs).
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axis_values.is_empty() || !self.axis_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "axis_values must be nonempty and strictly increasing".into(),
            ));
        }
        if self.repetitions < 1 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        if self.tuning_methods.is_empty() {
            return Err(Error::InvalidParameter("no tuning methods selected".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// The instance spec at one sweep point.
    pub fn instance_at(&self, axis_value: usize, seed: u64) -> InstanceSpec {
        let mut spec = self.fixed.clone();
        match self.sweep_axis {
            SweepAxis::N => spec.n = axis_value,
            SweepAxis::O => spec.o = axis_value,
            SweepAxis::S => spec.s = axis_value,
            SweepAxis::D => {
                spec.d = axis_value;
                if spec.covariance.dim() != axis_value {
                    spec.covariance = match spec.covariance {
                        Covariance::Identity { .. } => Covariance::Identity { dim: axis_value },
                        Covariance::Equicorrelated { r, .. } => Covariance::Equicorrelated {
                            dim: axis_value,
                            r,
                        },
                        Covariance::Toeplitz { r, .. } => Covariance::Toeplitz { dim: axis_value, r },
                        other => other,
                    };
                }
            }
        }
        spec.seed = seed;
        spec
    }
}

/// Metrics for one (point, rep, method) cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub point: usize,
    pub rep: usize,
    pub method: TuningMethod,
    /// `|Sigma^{1/2}(beta_hat - beta_star)|_2`, the quantity the rate bound
    /// controls.
    pub error_sigma: f64,
    pub error_l2: f64,
    pub error_l1: f64,
    pub support_f1: f64,
    pub theta_support_f1: f64,
    /// 0 for plain Lasso, which has no Huber threshold.
    pub c_cut: usize,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub spec: ExperimentSpec,
    /// Theory overlay `r_{n,d,s,o}` per sweep point.
    pub r_theory: Vec<f64>,
    pub cells: Vec<CellResult>,
}

/// F1 score between two supports given as sorted index lists.
fn support_f1(estimated: &[usize], truth: &[usize]) -> f64 {
    if estimated.is_empty() && truth.is_empty() {
        return 1.0;
    }
    if estimated.is_empty() || truth.is_empty() {
        return 0.0;
    }
    let tp = estimated.iter().filter(|i| truth.binary_search(i).is_ok()).count() as f64;
    let precision = tp / estimated.len() as f64;
    let recall = tp / truth.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn support_of(v: &Array1<f64>) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| x.abs() > SUPPORT_EPS)
        .map(|(i, _)| i)
        .collect()
}

fn penalties_for(
    method: TuningMethod,
    spec: &ExperimentSpec,
    inst_spec: &InstanceSpec,
) -> Result<PenaltyPair> {
    let rho = inst_spec.covariance.rho_sq().sqrt();
    match method {
        TuningMethod::Paper => {
            let mut inputs = TuningInputs::new(
                inst_spec.n,
                inst_spec.d,
                inst_spec.s.max(1),
                inst_spec.o,
                spec.delta,
                inst_spec.sigma,
                rho,
                spec.kappa,
            );
            inputs.c_lambda_o = spec.c_lambda_o;
            Ok(paper_tuning(&inputs)?.0)
        }
        TuningMethod::NguyenTran | TuningMethod::PlainLasso => nguyen_tran_tuning(
            inst_spec.n,
            inst_spec.d,
            inst_spec.sigma,
            rho,
            spec.gamma,
        ),
    }
}

fn run_cell(
    spec: &ExperimentSpec,
    instance: &ProblemInstance,
    inst_spec: &InstanceSpec,
    method: TuningMethod,
    point: usize,
    rep: usize,
    solver: &SolverConfig,
) -> Result<CellResult> {
    let penalties = penalties_for(method, spec, inst_spec)?;
    let start = Instant::now();
    let (beta_hat, theta_hat, iterations, converged, c_cut) = match method {
        TuningMethod::PlainLasso => {
            let fit = solve_plain_lasso(
                instance.x.view(),
                instance.y.view(),
                penalties.lambda_s,
                solver,
            )?;
            let n = instance.samples();
            (fit.beta, Array1::zeros(n), fit.iterations, fit.converged, 0)
        }
        _ => {
            let fit = solve_huber_lasso(instance, &penalties, solver)?;
            let c_cut = fit.c_cut.unwrap_or(0);
            (fit.beta_hat, fit.theta_hat, fit.iterations, fit.converged, c_cut)
        }
    };
    let wall_ms = if spec.record_timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let diff = &beta_hat - &instance.beta_star;
    let error_sigma = instance.covariance.sigma_norm(diff.view());
    let error_l2 = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    let error_l1 = diff.iter().map(|v| v.abs()).sum::<f64>();
    let sf1 = support_f1(&support_of(&beta_hat), &support_of(&instance.beta_star));
    let tf1 = support_f1(&support_of(&theta_hat), &instance.outlier_index);
    Ok(CellResult {
        point,
        rep,
        method,
        error_sigma,
        error_l2,
        error_l1,
        support_f1: sf1,
        theta_support_f1: tf1,
        c_cut,
        iterations,
        converged,
        wall_ms,
    })
}

/// Run the sweep. Deterministic given `(spec, master_seed)`; solver
/// non-convergence is recorded per cell, not fatal.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    run_experiment_with(spec, &SolverConfig::default())
}

pub fn run_experiment_with(spec: &ExperimentSpec, solver: &SolverConfig) -> Result<ExperimentRecord> {
    spec.validate()?;
    let mut r_theory = Vec::with_capacity(spec.axis_values.len());
    for (pi, &value) in spec.axis_values.iter().enumerate() {
        let s = spec.instance_at(value, 0);
        let rc = rate_constants(s.n, s.d, s.s.max(1), s.o, spec.delta)?;
        r_theory.push(rc.r_total);
        let _ = pi;
    }

    let jobs: Vec<(usize, usize)> = (0..spec.axis_values.len())
        .flat_map(|pi| (0..spec.repetitions).map(move |rep| (pi, rep)))
        .collect();

    let mut cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(pi, rep)| -> Result<Vec<CellResult>> {
            let seed = derive_seed(spec.master_seed, (pi * spec.repetitions + rep) as u64);
            let inst_spec = spec.instance_at(spec.axis_values[pi], seed);
            let instance = generate_instance(&inst_spec)?;
            spec.tuning_methods
                .iter()
                .map(|&m| run_cell(spec, &instance, &inst_spec, m, pi, rep, solver))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    // deterministic emission order
    cells.sort_by_key(|c| {
        let mi = spec
            .tuning_methods
            .iter()
            .position(|&m| m == c.method)
            .unwrap_or(usize::MAX);
        (c.point, c.rep, mi)
    });
    Ok(ExperimentRecord {
        spec: spec.clone(),
        r_theory,
        cells,
    })
}

/// Median of `metric` per sweep point for one method; `None` where a point
/// has no cells.
pub fn medians_for(
    record: &ExperimentRecord,
    method: TuningMethod,
    metric: Metric,
) -> Vec<Option<f64>> {
    (0..record.spec.axis_values.len())
        .map(|pi| {
            let values: Vec<f64> = record
                .cells
                .iter()
                .filter(|c| c.point == pi && c.method == method)
                .map(|c| metric.of(c))
                .collect();
            median(&values)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ErrorSigma,
    ErrorL2,
    ErrorL1,
}

impl Metric {
    pub fn of(&self, cell: &CellResult) -> f64 {
        match self {
            Metric::ErrorSigma => cell.error_sigma,
            Metric::ErrorL2 => cell.error_l2,
            Metric::ErrorL1 => cell.error_l1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::ErrorSigma => "error_sigma",
            Metric::ErrorL2 => "error_l2",
            Metric::ErrorL1 => "error_l1",
        }
    }
}

/// Least-squares slope of log(median metric) against log(axis value).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit a power law to the per-point medians of one method.
pub fn fit_power_law(
    record: &ExperimentRecord,
    method: TuningMethod,
    metric: Metric,
) -> Result<PowerLawFit> {
    let medians = medians_for(record, method, metric);
    let mut pts = Vec::new();
    for (pi, m) in medians.iter().enumerate() {
        if let Some(v) = m {
            if !(*v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "nonpositive median {v} at point {pi}; cannot take logs"
                )));
            }
            pts.push(((record.spec.axis_values[pi] as f64).ln(), v.ln()));
        }
    }
    fit_power_law_points(&pts)
}

/// OLS in log-log space over explicit `(log x, log y)` points.
pub fn fit_power_law_points(pts: &[(f64, f64)]) -> Result<PowerLawFit> {
    if pts.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 sweep points, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("degenerate x values".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + exponent * p.0);
            e * e
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        exponent,
        intercept,
        r_squared,
    })
}

/// Write the per-cell CSV; one row per (point, rep, method).
pub fn emit_csv(record: &ExperimentRecord, path: &Path) -> Result<()> {
    let body = csv_string(record);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn csv_string(record: &ExperimentRecord) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let axis = record.spec.sweep_axis.name();
    for c in &record.cells {
        let row = [
            csv_field(axis),
            record.spec.axis_values[c.point].to_string(),
            c.rep.to_string(),
            csv_field(c.method.name()),
            format_f64(c.error_sigma),
            format_f64(c.error_l2),
            format_f64(c.error_l1),
            format_f64(c.support_f1),
            format_f64(c.theta_support_f1),
            c.c_cut.to_string(),
            c.iterations.to_string(),
            format_f64(c.wall_ms),
            format_f64(record.r_theory[c.point]),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A parsed CSV row (the subset the plotting path needs).
#[derive(Debug, Clone)]
pub struct CsvRow {
    pub axis: String,
    pub axis_value: f64,
    pub rep: usize,
    pub method: String,
    pub error_sigma: f64,
    pub error_l2: f64,
    pub error_l1: f64,
    pub r_theory: f64,
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, "empty file"))?;
    if header != CSV_HEADER {
        return Err(Error::parse(path, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields = split_csv_line(line);
        if fields.len() != CSV_COLUMNS {
            return Err(Error::parse(
                path,
                format!("row {i}: expected {CSV_COLUMNS} columns, got {}", fields.len()),
            ));
        }
        rows.push(CsvRow {
            axis: fields[0].clone(),
            axis_value: parse_f64(path, &fields[1])?,
            rep: fields[2]
                .parse()
                .map_err(|_| Error::parse(path, format!("bad rep {:?}", fields[2])))?,
            method: fields[3].clone(),
            error_sigma: parse_f64(path, &fields[4])?,
            error_l2: parse_f64(path, &fields[5])?,
            error_l1: parse_f64(path, &fields[6])?,
            r_theory: parse_f64(path, &fields[12])?,
        });
    }
    Ok(rows)
}

const SVG_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Per-method median series plus the theory overlay, as a deterministic
/// static SVG on log-log axes.
pub fn emit_plot(record: &ExperimentRecord, path: &Path, metric: Metric) -> Result<()> {
    if record.cells.is_empty() {
        return Err(Error::InvalidParameter("cannot plot an empty record".into()));
    }
    let mut series = Vec::new();
    for &m in &record.spec.tuning_methods {
        let pts: Vec<(f64, f64)> = medians_for(record, m, metric)
            .iter()
            .enumerate()
            .filter_map(|(pi, v)| v.map(|y| (record.spec.axis_values[pi] as f64, y)))
            .collect();
        series.push((m.name().to_string(), pts));
    }
    let theory: Vec<(f64, f64)> = record
        .spec
        .axis_values
        .iter()
        .zip(record.r_theory.iter())
        .map(|(&x, &y)| (x as f64, y))
        .collect();
    let svg = render_loglog_svg(
        &series,
        &theory,
        record.spec.sweep_axis.name(),
        metric.name(),
    )?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(svg.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Plot straight from a CSV written by [`emit_csv`].
pub fn plot_from_csv(rows: &[CsvRow], path: &Path, metric: Metric) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no rows to plot".into()));
    }
    let axis = rows[0].axis.clone();
    let mut methods: Vec<String> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    let mut axis_values: Vec<f64> = rows.iter().map(|r| r.axis_value).collect();
    axis_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    axis_values.dedup();
    let metric_of = |r: &CsvRow| match metric {
        Metric::ErrorSigma => r.error_sigma,
        Metric::ErrorL2 => r.error_l2,
        Metric::ErrorL1 => r.error_l1,
    };
    let mut series = Vec::new();
    for m in &methods {
        let mut pts = Vec::new();
        for &x in &axis_values {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == *m && r.axis_value == x)
                .map(&metric_of)
                .collect();
            if let Some(v) = median(&vals) {
                pts.push((x, v));
            }
        }
        series.push((m.clone(), pts));
    }
    let theory: Vec<(f64, f64)> = axis_values
        .iter()
        .filter_map(|&x| {
            rows.iter()
                .find(|r| r.axis_value == x)
                .map(|r| (x, r.r_theory))
        })
        .collect();
    let svg = render_loglog_svg(&series, &theory, &axis, metric.name())?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(svg.as_bytes()).map_err(|e| Error::io(path, e))
}

fn render_loglog_svg(
    series: &[(String, Vec<(f64, f64)>)],
    theory: &[(f64, f64)],
    x_label: &str,
    y_label: &str,
) -> Result<String> {
    let (w, h) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 20.0, 50.0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (_, pts) in series.iter().chain(std::iter::once(&("theory".to_string(), theory.to_vec()))) {
        for &(x, y) in pts {
            if x > 0.0 && y > 0.0 {
                xs.push(x.log10());
                ys.push(y.log10());
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::InvalidParameter(
            "nothing positive to plot on log axes".into(),
        ));
    }
    let (xmin, xmax) = bounds(&xs);
    let (ymin, ymax) = bounds(&ys);
    let sx = |x: f64| ml + (x.log10() - xmin) / (xmax - xmin) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y.log10() - ymin) / (ymax - ymin) * (h - mt - mb);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    out.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb
    ));
    // decade ticks
    for e in (xmin.floor() as i64)..=(xmax.ceil() as i64) {
        let x = 10f64.powi(e as i32);
        if x.log10() < xmin - 1e-9 || x.log10() > xmax + 1e-9 {
            continue;
        }
        let px = sx(x);
        out.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            h - mb,
            h - mb + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">1e{e}</text>\n",
            h - mb + 18.0
        ));
    }
    for e in (ymin.floor() as i64)..=(ymax.ceil() as i64) {
        let y = 10f64.powi(e as i32);
        if y.log10() < ymin - 1e-9 || y.log10() > ymax + 1e-9 {
            continue;
        }
        let py = sy(y);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{ml}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
            ml - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">1e{e}</text>\n",
            ml - 8.0,
            py + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>\n",
        ml + (w - ml - mr) / 2.0,
        h - 10.0
    ));
    out.push_str(&format!(
        "<text x=\"15\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.2})\">{y_label}</text>\n",
        mt + (h - mt - mb) / 2.0,
        mt + (h - mt - mb) / 2.0
    ));

    let mut legend_y = mt + 12.0;
    for (si, (name, pts)) in series.iter().enumerate() {
        let color = SVG_COLORS[si % SVG_COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            coords.join(" ")
        ));
        for &(x, y) in pts.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0) {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{legend_y:.2}\" font-size=\"12\" fill=\"{color}\">{name}</text>\n",
            w - mr - 130.0
        ));
        legend_y += 16.0;
    }
    let coords: Vec<String> = theory
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    out.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#555555\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\" points=\"{}\"/>\n",
        coords.join(" ")
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{legend_y:.2}\" font-size=\"12\" fill=\"#555555\">r_theory</text>\n",
        w - mr - 130.0
    ));
    out.push_str("</svg>\n");
    Ok(out)
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if (hi - lo).abs() < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}
