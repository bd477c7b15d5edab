#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! `extlasso` command line: simulate instances, fit them, print tuning
//! reports, run Monte Carlo verification suites, sweep experiments, and
//! plot CSV output.
//!
//! Every flag has a JSON config-file equivalent (`--config`); explicit flags
//! win over config values. Exit codes: 0 success, 2 invalid configuration,
//! 3 solver non-convergence in `fit`, 4 verification suite failure.
//! `EXTLASSO_WORKERS` caps the worker pool (default: available parallelism).

use clap::{Args, Parser, Subcommand};
use extlasso::bench::{
    emit_csv, emit_plot, fit_power_law, plot_from_csv, read_csv, ExperimentSpec, Metric,
};
use extlasso::simulate::{generate_instance, read_instance_dir, write_instance_dir, AdversaryKind,
    InstanceSpec};
use extlasso::solver::{solve_extended_lasso, solve_huber_lasso, SolverConfig};
use extlasso::tuning::{
    cond0_decomposition, condition_report, min_c_lambda_o_for_positive_c_gt, nguyen_tran_tuning,
    paper_tuning, rate_constants, TuningInputs,
};
use extlasso::verify::{
    estimate_width_sigma_ball, verify_atp, verify_inequality, CoverageRecord, InequalityId,
    VerifyParams, WidthEstimate,
};
use extlasso::{kkt_check, Covariance, PenaltyPair, ProblemInstance};
use serde::Deserialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "extlasso", version, about = "Robust sparse regression under adversarial output contamination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance and write it as a directory.
    Simulate(SimulateArgs),
    /// Fit an instance directory and print the result as JSON.
    Fit(FitArgs),
    /// Print the tuning bundle and condition report as JSON.
    Tuning(TuningArgs),
    /// Run a Monte Carlo verification suite; emits coverage CSV.
    Verify(VerifyArgs),
    /// Run a sweep experiment from a config file.
    RateStudy(RateStudyArgs),
    /// Render a CSV written by rate-study as a log-log SVG.
    Plot(PlotArgs),
}

fn fail_config(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    if let Ok(workers) = std::env::var("EXTLASSO_WORKERS") {
        if let Ok(k) = workers.parse::<usize>() {
            if k >= 1 {
                rayon_pool(k);
            }
        }
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Fit(a) => run_fit(a),
        Command::Tuning(a) => run_tuning(a),
        Command::Verify(a) => run_verify(a),
        Command::RateStudy(a) => run_rate_study(a),
        Command::Plot(a) => run_plot(a),
    }
}

fn rayon_pool(k: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T, String> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Args)]
struct SimulateArgs {
    /// JSON config with the same keys as the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for X.csv / y.csv / truth.csv / meta.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    o: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// identity | equicorrelated | toeplitz
    #[arg(long)]
    covariance: Option<String>,
    /// Correlation parameter for equicorrelated/toeplitz.
    #[arg(long)]
    corr: Option<f64>,
    #[arg(long)]
    beta_magnitude: Option<f64>,
    /// none | oblivious_constant | sign_flip_large | residual_aligned | leverage_targeted
    #[arg(long)]
    adversary: Option<String>,
    /// Constant or scale parameter of the adversary.
    #[arg(long)]
    adversary_param: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    n: Option<usize>,
    d: Option<usize>,
    s: Option<usize>,
    o: Option<usize>,
    sigma: Option<f64>,
    covariance: Option<String>,
    corr: Option<f64>,
    beta_magnitude: Option<f64>,
    adversary: Option<String>,
    adversary_param: Option<f64>,
    seed: Option<u64>,
}

#[allow(clippy::too_many_arguments)]
fn build_instance_spec(
    n: usize,
    d: usize,
    s: usize,
    o: usize,
    sigma: f64,
    covariance: &str,
    corr: f64,
    beta_magnitude: f64,
    adversary: &str,
    adversary_param: f64,
    seed: u64,
) -> Result<InstanceSpec, String> {
    let covariance = match covariance {
        "identity" => Covariance::Identity { dim: d },
        "equicorrelated" => Covariance::Equicorrelated { dim: d, r: corr },
        "toeplitz" => Covariance::Toeplitz { dim: d, r: corr },
        other => return Err(format!("unknown covariance kind {other:?}")),
    };
    let adversary = match adversary {
        "none" => AdversaryKind::None,
        "oblivious_constant" => AdversaryKind::ObliviousConstant { c: adversary_param },
        "sign_flip_large" => AdversaryKind::SignFlipLarge,
        "residual_aligned" => AdversaryKind::ResidualAligned {
            scale: adversary_param,
        },
        "leverage_targeted" => AdversaryKind::LeverageTargeted {
            scale: adversary_param,
        },
        other => return Err(format!("unknown adversary kind {other:?}")),
    };
    Ok(InstanceSpec {
        n,
        d,
        s,
        o,
        sigma,
        covariance,
        beta_magnitude,
        adversary,
        seed,
    })
}

fn run_simulate(a: SimulateArgs) -> ExitCode {
    let cfg: SimulateConfig = match load_config(&a.config) {
        Ok(c) => c,
        Err(e) => return fail_config(e),
    };
    let spec = match build_instance_spec(
        a.n.or(cfg.n).unwrap_or(200),
        a.d.or(cfg.d).unwrap_or(20),
        a.s.or(cfg.s).unwrap_or(3),
        a.o.or(cfg.o).unwrap_or(10),
        a.sigma.or(cfg.sigma).unwrap_or(1.0),
        &a.covariance.or(cfg.covariance).unwrap_or_else(|| "identity".into()),
        a.corr.or(cfg.corr).unwrap_or(0.0),
        a.beta_magnitude.or(cfg.beta_magnitude).unwrap_or(1.0),
        &a.adversary.or(cfg.adversary).unwrap_or_else(|| "residual_aligned".into()),
        a.adversary_param.or(cfg.adversary_param).unwrap_or(5.0),
        match a.seed.or(cfg.seed) {
            Some(s) => s,
            None => return fail_config("--seed is required for simulate"),
        },
    ) {
        Ok(s) => s,
        Err(e) => return fail_config(e),
    };
    let instance = match generate_instance(&spec) {
        Ok(i) => i,
        Err(e) => return fail_config(e),
    };
    if let Err(e) = write_instance_dir(&a.out, &instance, &spec) {
        return fail_config(e);
    }
    println!(
        "{}",
        json!({
            "out": a.out,
            "n": spec.n, "d": spec.d, "s": spec.s, "o": spec.o,
            "outliers": instance.outlier_index,
        })
    );
    ExitCode::SUCCESS
}

// ---------------------------------------------------------------------------
// fit

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance directory produced by `simulate`.
    #[arg(long)]
    instance: PathBuf,
    /// paper | nguyen_tran | manual
    #[arg(long)]
    method: Option<String>,
    /// huber | extended
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    lambda_s: Option<f64>,
    #[arg(long)]
    lambda_o: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c_lambda_o: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FitConfig {
    method: Option<String>,
    algorithm: Option<String>,
    lambda_s: Option<f64>,
    lambda_o: Option<f64>,
    delta: Option<f64>,
    kappa: Option<f64>,
    gamma: Option<f64>,
    c_lambda_o: Option<f64>,
    max_iterations: Option<usize>,
    tolerance: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn penalties_for_instance(
    method: &str,
    instance: &ProblemInstance,
    spec: &InstanceSpec,
    delta: f64,
    kappa: f64,
    gamma: f64,
    c_lambda_o: f64,
    manual: (Option<f64>, Option<f64>),
) -> Result<PenaltyPair, String> {
    let rho = spec.covariance.rho_sq().sqrt();
    match method {
        "paper" => {
            let mut inputs = TuningInputs::new(
                spec.n,
                spec.d,
                spec.s.max(1),
                spec.o,
                delta,
                instance.sigma,
                rho,
                kappa,
            );
            inputs.c_lambda_o = c_lambda_o;
            paper_tuning(&inputs)
                .map(|(p, _)| p)
                .map_err(|e| e.to_string())
        }
        "nguyen_tran" => nguyen_tran_tuning(spec.n, spec.d, instance.sigma, rho, gamma)
            .map_err(|e| e.to_string()),
        "manual" => {
            let (ls, lo) = match manual {
                (Some(ls), Some(lo)) => (ls, lo),
                _ => return Err("manual method requires --lambda-s and --lambda-o".into()),
            };
            PenaltyPair::manual(ls, lo).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown tuning method {other:?}")),
    }
}

fn run_fit(a: FitArgs) -> ExitCode {
    let cfg: FitConfig = match load_config(&a.config) {
        Ok(c) => c,
        Err(e) => return fail_config(e),
    };
    let (instance, spec) = match read_instance_dir(&a.instance) {
        Ok(v) => v,
        Err(e) => return fail_config(e),
    };
    let method = a.method.or(cfg.method).unwrap_or_else(|| "paper".into());
    let algorithm = a.algorithm.or(cfg.algorithm).unwrap_or_else(|| "huber".into());
    let penalties = match penalties_for_instance(
        &method,
        &instance,
        &spec,
        a.delta.or(cfg.delta).unwrap_or(0.1),
        a.kappa.or(cfg.kappa).unwrap_or(1.0),
        a.gamma.or(cfg.gamma).unwrap_or(1.0),
        a.c_lambda_o.or(cfg.c_lambda_o).unwrap_or(2.0),
        (a.lambda_s.or(cfg.lambda_s), a.lambda_o.or(cfg.lambda_o)),
    ) {
        Ok(p) => p,
        Err(e) => return fail_config(e),
    };
    let mut solver = SolverConfig::default();
    if let Some(m) = a.max_iterations.or(cfg.max_iterations) {
        solver.max_iterations = m;
    }
    if let Some(t) = a.tolerance.or(cfg.tolerance) {
        solver.tolerance = t;
    }
    let fit = match algorithm.as_str() {
        "huber" => solve_huber_lasso(&instance, &penalties, &solver),
        "extended" => solve_extended_lasso(&instance, &penalties, &solver),
        other => return fail_config(format!("unknown algorithm {other:?}")),
    };
    let fit = match fit {
        Ok(f) => f,
        Err(e) => return fail_config(e),
    };
    let kkt = kkt_check(
        &instance,
        fit.beta_hat.view(),
        &penalties,
        solver.resolved_kkt_tolerance(penalties.lambda_s),
    );
    let diff = &fit.beta_hat - &instance.beta_star;
    let output = json!({
        "method": method,
        "algorithm": algorithm,
        "lambda_s": penalties.lambda_s,
        "lambda_o": penalties.lambda_o,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "objective": fit.objective_trace.last(),
        "kkt": kkt,
        "c_cut": fit.c_cut,
        "error_sigma": instance.covariance.sigma_norm(diff.view()),
        "error_l2": diff.iter().map(|v| v * v).sum::<f64>().sqrt(),
        "beta_hat": fit.beta_hat.to_vec(),
        "theta_hat_support": fit
            .theta_hat
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > 1e-8)
            .map(|(i, _)| i)
            .collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&output).expect("json");
    let write_ok = match &a.out {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| format!("{}: {e}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    };
    if let Err(e) = write_ok {
        return fail_config(e);
    }
    if !fit.converged {
        eprintln!("warning: solver did not converge within the iteration budget");
        return ExitCode::from(EXIT_NO_CONVERGENCE);
    }
    ExitCode::SUCCESS
}

// ---------------------------------------------------------------------------
// tuning

#[derive(Args)]
struct TuningArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    o: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    c_lambda_o: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TuningConfig {
    n: Option<usize>,
    d: Option<usize>,
    s: Option<usize>,
    o: Option<usize>,
    delta: Option<f64>,
    sigma: Option<f64>,
    rho: Option<f64>,
    kappa: Option<f64>,
    c0: Option<f64>,
    c_lambda_o: Option<f64>,
}

fn run_tuning(a: TuningArgs) -> ExitCode {
    let cfg: TuningConfig = match load_config(&a.config) {
        Ok(c) => c,
        Err(e) => return fail_config(e),
    };
    let (n, d) = (a.n.or(cfg.n).unwrap_or(2000), a.d.or(cfg.d).unwrap_or(100));
    let mut inputs = TuningInputs::new(
        n,
        d,
        a.s.or(cfg.s).unwrap_or(5),
        a.o.or(cfg.o).unwrap_or(0),
        a.delta.or(cfg.delta).unwrap_or(0.1),
        a.sigma.or(cfg.sigma).unwrap_or(1.0),
        a.rho.or(cfg.rho).unwrap_or(1.0),
        a.kappa.or(cfg.kappa).unwrap_or(1.0),
    );
    if let Some(c0) = a.c0.or(cfg.c0) {
        inputs.c0 = c0;
    }
    if let Some(c) = a.c_lambda_o.or(cfg.c_lambda_o) {
        inputs.c_lambda_o = c;
    }
    let (penalties, bundle) = match paper_tuning(&inputs) {
        Ok(v) => v,
        Err(e) => return fail_config(e),
    };
    let report = condition_report(&bundle);
    let rates = match rate_constants(inputs.n, inputs.d, inputs.s, inputs.o, inputs.delta) {
        Ok(r) => r,
        Err(e) => return fail_config(e),
    };
    let baseline = nguyen_tran_tuning(inputs.n, inputs.d, inputs.sigma, inputs.rho, 1.0).ok();
    let output = json!({
        "penalties": penalties,
        "bundle": bundle,
        "conditions": report,
        "rates": rates,
        "cond0_terms": cond0_decomposition(inputs.n, inputs.d, inputs.s, inputs.o, &penalties),
        "nguyen_tran_baseline": baseline,
        "min_c_lambda_o_for_positive_c_gt": min_c_lambda_o_for_positive_c_gt(),
    });
    println!("{}", serde_json::to_string_pretty(&output).expect("json"));
    ExitCode::SUCCESS
}

// ---------------------------------------------------------------------------
// verify

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single inequality: noise_supnorm | xtxi_supnorm | bernstein_z |
    /// chisq | prop3 | prop4 | atp. Mutually exclusive with --suite.
    #[arg(long)]
    id: Option<String>,
    /// Named suite: concentration | widths.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda_o: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct VerifyConfig {
    id: Option<String>,
    suite: Option<String>,
    n: Option<usize>,
    d: Option<usize>,
    delta: Option<f64>,
    sigma: Option<f64>,
    lambda_o: Option<f64>,
    trials: Option<usize>,
    probes: Option<usize>,
    seed: Option<u64>,
}

fn emit_text(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_verify(a: VerifyArgs) -> ExitCode {
    let cfg: VerifyConfig = match load_config(&a.config) {
        Ok(c) => c,
        Err(e) => return fail_config(e),
    };
    let seed = match a.seed.or(cfg.seed) {
        Some(s) => s,
        None => return fail_config("--seed is required for verify"),
    };
    let id = a.id.or(cfg.id);
    let suite = a.suite.or(cfg.suite);
    let trials = a.trials.or(cfg.trials).unwrap_or(2000);
    let sigma = a.sigma.or(cfg.sigma).unwrap_or(1.0);
    let mut rng = extlasso::rng::seeded_rng(seed);

    let mut records: Vec<CoverageRecord> = Vec::new();
    let mut widths: Vec<WidthEstimate> = Vec::new();
    match (id.as_deref(), suite.as_deref()) {
        (Some(name), None) => {
            let n = a.n.or(cfg.n).unwrap_or(1000);
            let d = a.d.or(cfg.d).unwrap_or(20);
            let delta = a.delta.or(cfg.delta).unwrap_or(0.1);
            let mut params = VerifyParams::new(n, d, delta, sigma);
            params.lambda_o = a.lambda_o.or(cfg.lambda_o);
            if let Some(p) = a.probes.or(cfg.probes) {
                params.probes = p;
            }
            let rec = if name == "atp" {
                verify_atp(&params, trials, &mut rng)
            } else {
                match InequalityId::parse(name) {
                    Some(id) => verify_inequality(id, &params, trials, &mut rng),
                    None => return fail_config(format!("unknown inequality {name:?}")),
                }
            };
            match rec {
                Ok(r) => records.push(r),
                Err(e) => return fail_config(e),
            }
        }
        (None, Some("concentration")) => {
            let delta_grid = [0.05, 0.1];
            let n_grid = [1000usize, 10_000];
            let d = a.d.or(cfg.d).unwrap_or(20);
            for &n in &n_grid {
                for &delta in &delta_grid {
                    for id in [
                        InequalityId::NoiseSupnorm,
                        InequalityId::XtxiSupnorm,
                        InequalityId::Chisq,
                        InequalityId::BernsteinZ,
                    ] {
                        let mut params = VerifyParams::new(n, d, delta, sigma);
                        if id == InequalityId::BernsteinZ {
                            params.lambda_o = Some(
                                a.lambda_o
                                    .or(cfg.lambda_o)
                                    .unwrap_or_else(|| {
                                        2.0 * (2.0 * sigma * sigma
                                            * (n as f64 / delta).ln()
                                            / n as f64)
                                            .sqrt()
                                    }),
                            );
                        }
                        match verify_inequality(id, &params, trials, &mut rng) {
                            Ok(r) => records.push(r),
                            Err(e) => return fail_config(e),
                        }
                    }
                }
            }
        }
        (None, Some("widths")) => {
            for d in [3usize, 10, 100, 1000] {
                match estimate_width_sigma_ball(&Covariance::identity(d), trials, &mut rng) {
                    Ok(w) => widths.push(w),
                    Err(e) => return fail_config(e),
                }
            }
        }
        (None, Some(other)) => return fail_config(format!("unknown suite {other:?}")),
        (Some(_), Some(_)) => return fail_config("--id and --suite are mutually exclusive"),
        (None, None) => return fail_config("one of --id or --suite is required"),
    }

    let mut text = String::new();
    let mut all_pass = true;
    if !records.is_empty() {
        text.push_str(CoverageRecord::csv_header());
        text.push('\n');
        for r in &records {
            text.push_str(&r.csv_row());
            text.push('\n');
            all_pass &= r.passes();
        }
    }
    if !widths.is_empty() {
        text.push_str(WidthEstimate::csv_header());
        text.push('\n');
        for w in &widths {
            text.push_str(&w.csv_row());
            text.push('\n');
            // one-sided upper bounds: the estimate must sit below
            all_pass &= w.estimate <= w.bound + 3.0 * w.std_error;
        }
    }
    if let Err(e) = emit_text(&a.out, &text) {
        return fail_config(e);
    }
    if !all_pass {
        eprintln!("verification suite failed");
        return ExitCode::from(EXIT_VERIFY_FAILED);
    }
    ExitCode::SUCCESS
}

// ---------------------------------------------------------------------------
// rate-study

#[derive(Args)]
struct RateStudyArgs {
    /// JSON file deserializing to the experiment spec.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's master_seed and is required.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render an SVG of the study.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Record real wall-clock times (breaks byte determinism).
    #[arg(long)]
    timing: bool,
}

fn run_rate_study(a: RateStudyArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&a.config) {
        Ok(t) => t,
        Err(e) => return fail_config(format!("{}: {e}", a.config.display())),
    };
    let mut spec: ExperimentSpec = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => return fail_config(format!("{}: {e}", a.config.display())),
    };
    let seed = match a.seed {
        Some(s) => s,
        None => return fail_config("--seed is required for rate-study"),
    };
    spec.master_seed = seed;
    if a.timing {
        spec.record_timing = true;
    }
    let record = match extlasso::bench::run_experiment(&spec) {
        Ok(r) => r,
        Err(e) => return fail_config(e),
    };
    if let Some(out) = &a.out {
        if let Err(e) = emit_csv(&record, out) {
            return fail_config(e);
        }
    } else {
        print!("{}", extlasso::bench::csv_string(&record));
    }
    if let Some(plot) = &a.plot {
        if let Err(e) = emit_plot(&record, plot, Metric::ErrorSigma) {
            return fail_config(e);
        }
    }
    // per-method exponent summary on stderr for humans
    for &m in &record.spec.tuning_methods {
        if let Ok(fit) = fit_power_law(&record, m, Metric::ErrorSigma) {
            eprintln!(
                "{}: exponent {:.3} (r^2 {:.3})",
                m.name(),
                fit.exponent,
                fit.r_squared
            );
        }
    }
    ExitCode::SUCCESS
}

// ---------------------------------------------------------------------------
// plot

#[derive(Args)]
struct PlotArgs {
    /// CSV produced by rate-study.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// error_sigma | error_l2 | error_l1
    #[arg(long)]
    metric: Option<String>,
}

fn run_plot(a: PlotArgs) -> ExitCode {
    let rows = match read_csv(&a.input) {
        Ok(r) => r,
        Err(e) => return fail_config(e),
    };
    let metric = match a.metric.as_deref().unwrap_or("error_sigma") {
        "error_sigma" => Metric::ErrorSigma,
        "error_l2" => Metric::ErrorL2,
        "error_l1" => Metric::ErrorL1,
        other => return fail_config(format!("unknown metric {other:?}")),
    };
    if let Err(e) = plot_from_csv(&rows, &a.out, metric) {
        return fail_config(e);
    }
    ExitCode::SUCCESS
}
