//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one PASS/FAIL line. Run with
//! `cargo test -p extlasso --test acceptance -- --nocapture` to see the
//! lines for passing criteria too.

use extlasso::bench::{
    csv_string, emit_csv, emit_plot, fit_power_law, medians_for, run_experiment_with,
    ExperimentSpec, Metric, SweepAxis, TuningMethod,
};
use extlasso::covariance::Covariance;
use extlasso::huber;
use extlasso::instance::{PenaltyPair, ProblemInstance};
use extlasso::rng::{derive_seed, seeded_rng};
use extlasso::simulate::{
    generate_instance, read_instance_dir, write_instance_dir, AdversaryKind, InstanceSpec,
};
use extlasso::solver::{
    kkt_check, objective_huber, solve_extended_lasso, solve_huber_lasso, SolverConfig,
};
use extlasso::tuning::{condition_report, paper_tuning, nguyen_tran_tuning, TuningInputs};
use extlasso::verify::{
    c_cut_bound, estimate_width_sigma_ball, measure_c_cut, verify_inequality, InequalityId,
    VerifyParams,
};
use ndarray::Array1;
use rand::Rng;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn tight_config() -> SolverConfig {
    SolverConfig {
        tolerance: 1e-13,
        max_iterations: 200_000,
        kkt_tolerance: Some(1e-8),
        ..SolverConfig::default()
    }
}

fn mixed_instance(seed: u64) -> (InstanceSpec, ProblemInstance) {
    let mut rng = seeded_rng(derive_seed(0xACCE97, seed));
    let n = rng.gen_range(40..=100);
    let d = rng.gen_range(4..=20);
    let s = rng.gen_range(1..=3.min(d));
    let o = rng.gen_range(0..=n / 6);
    let adversary = match seed % 5 {
        0 => AdversaryKind::None,
        1 => AdversaryKind::ObliviousConstant { c: 3.5 },
        2 => AdversaryKind::SignFlipLarge,
        3 => AdversaryKind::ResidualAligned { scale: 4.0 },
        _ => AdversaryKind::LeverageTargeted { scale: 2.0 },
    };
    let spec = InstanceSpec {
        n,
        d,
        s,
        o: if matches!(adversary, AdversaryKind::None) { 0 } else { o },
        sigma: rng.gen_range(0.2..1.0),
        covariance: Covariance::identity(d),
        beta_magnitude: 1.0,
        adversary,
        seed: derive_seed(0xBEEF, seed),
    };
    let instance = generate_instance(&spec).expect("instance");
    (spec, instance)
}

fn penalties_for(spec: &InstanceSpec, seed: u64) -> PenaltyPair {
    if seed.is_multiple_of(3) {
        let mut rng = seeded_rng(derive_seed(0x9E9, seed));
        PenaltyPair::manual(rng.gen_range(0.05..0.4), rng.gen_range(0.2..0.8)).unwrap()
    } else {
        nguyen_tran_tuning(spec.n, spec.d, spec.sigma, 1.0, 1.0).unwrap()
    }
}

/// Criterion 1: the two formulations find the same minimizer, and theta is
/// the closed-form soft threshold of the residuals.
#[test]
fn acceptance_1_formulation_equivalence() {
    let config = tight_config();
    let mut max_beta_diff = 0.0_f64;
    let mut max_theta_dev = 0.0_f64;
    for seed in 0..50u64 {
        let (spec, instance) = mixed_instance(seed);
        let pen = penalties_for(&spec, seed);
        let hub = solve_huber_lasso(&instance, &pen, &config).unwrap();
        let ext = solve_extended_lasso(&instance, &pen, &config).unwrap();
        for (a, b) in hub.beta_hat.iter().zip(ext.beta_hat.iter()) {
            max_beta_diff = max_beta_diff.max((a - b).abs());
        }
        let sqrt_n = (spec.n as f64).sqrt();
        for fit in [&hub, &ext] {
            let fitted = instance.x.dot(&fit.beta_hat);
            for i in 0..spec.n {
                let c = (instance.y[i] - fitted[i]) / sqrt_n;
                let soft = c.signum() * (c.abs() - pen.lambda_o).max(0.0);
                max_theta_dev = max_theta_dev.max((fit.theta_hat[i] - soft).abs());
            }
        }
    }
    let pass = max_beta_diff < 1e-6 && max_theta_dev < 1e-8;
    report(
        "1 formulation-equivalence",
        pass,
        &format!("max |beta| gap {max_beta_diff:.2e}, max theta deviation {max_theta_dev:.2e}"),
    );
    assert!(pass, "beta gap {max_beta_diff}, theta dev {max_theta_dev}");
}

/// Criterion 2: converged fits satisfy the stationarity condition at the
/// stated tolerances, and one-dimensional fits match a grid oracle.
#[test]
fn acceptance_2_optimality() {
    let config = tight_config();
    let mut worst_grad = 0.0_f64;
    let mut worst_support = 0.0_f64;
    let mut converged_count = 0;
    for seed in 0..30u64 {
        let (spec, instance) = mixed_instance(seed);
        let pen = penalties_for(&spec, seed);
        let fit = solve_huber_lasso(&instance, &pen, &config).unwrap();
        if !fit.converged {
            continue;
        }
        converged_count += 1;
        let kkt = kkt_check(&instance, fit.beta_hat.view(), &pen, 1e-6 * pen.lambda_s);
        worst_grad = worst_grad.max(kkt.gradient_supnorm / pen.lambda_s);
        worst_support = worst_support.max(kkt.support_violation / pen.lambda_s);
        let _ = spec;
    }
    let kkt_pass = converged_count >= 25 && worst_grad <= 1.0 + 1e-6 && worst_support <= 1e-6;

    // d = 1 fits against an exhaustive grid over [-10, 10], step 1e-4
    let mut worst_grid_gap = 0.0_f64;
    for seed in 200..205u64 {
        let spec = InstanceSpec {
            n: 50,
            d: 1,
            s: 1,
            o: 5,
            sigma: 0.3,
            covariance: Covariance::identity(1),
            beta_magnitude: 1.0,
            adversary: AdversaryKind::ResidualAligned { scale: 4.0 },
            seed,
        };
        let instance = generate_instance(&spec).unwrap();
        let pen = PenaltyPair::manual(0.15, 0.4).unwrap();
        let fit = solve_huber_lasso(&instance, &pen, &config).unwrap();
        let mut best_b = 0.0;
        let mut best_v = f64::INFINITY;
        for k in 0..=200_000 {
            let b = -10.0 + k as f64 * 1e-4;
            let v = objective_huber(&instance, Array1::from_vec(vec![b]).view(), &pen).unwrap();
            if v < best_v {
                best_v = v;
                best_b = b;
            }
        }
        worst_grid_gap = worst_grid_gap.max((fit.beta_hat[0] - best_b).abs());
    }
    let grid_pass = worst_grid_gap < 2e-4;
    let pass = kkt_pass && grid_pass;
    report(
        "2 optimality",
        pass,
        &format!(
            "{converged_count}/30 converged, sup/lambda_s {worst_grad:.9}, support/lambda_s {worst_support:.2e}, d=1 grid gap {worst_grid_gap:.2e}"
        ),
    );
    assert!(pass);
}

/// Criterion 3: Huber identities over >= 1000 random probes each.
#[test]
fn acceptance_3_huber_identities() {
    let mut rng = seeded_rng(0x3333);
    let mut convex_ok = true;
    let mut lipschitz_ok = true;
    let mut gradient_ok = true;
    let mut partial_min_ok = true;
    for _ in 0..1000 {
        let t1 = rng.gen_range(-5.0..5.0);
        let t2 = rng.gen_range(-5.0..5.0);
        let alpha: f64 = rng.gen();
        let h = |t: f64| huber::huber_value(t).unwrap();
        convex_ok &= h(alpha * t1 + (1.0 - alpha) * t2) <= alpha * h(t1) + (1.0 - alpha) * h(t2) + 1e-12;
        let p = |t: f64| huber::huber_psi(t).unwrap();
        lipschitz_ok &= (p(t1) - p(t2)).abs() <= (t1 - t2).abs() + 1e-15;
    }
    let mut checked = 0;
    while checked < 1000 {
        let t: f64 = rng.gen_range(-3.0..3.0);
        if (t.abs() - 1.0).abs() < 1e-4 {
            continue;
        }
        checked += 1;
        let h = 1e-5;
        let fd = (huber::huber_value(t + h).unwrap() - huber::huber_value(t - h).unwrap()) / (2.0 * h);
        gradient_ok &= (fd - huber::huber_psi(t).unwrap()).abs() < 1e-6;
    }
    for _ in 0..1000 {
        let r: f64 = rng.gen_range(-6.0..6.0);
        let lambda: f64 = rng.gen_range(0.05..3.0);
        let soft = r.signum() * (r.abs() - lambda).max(0.0);
        let direct = 0.5 * (r - soft) * (r - soft) + lambda * soft.abs();
        let closed = lambda * lambda * huber::huber_value(r / lambda).unwrap();
        partial_min_ok &= (direct - closed).abs() < 1e-10;
    }
    let pass = convex_ok && lipschitz_ok && gradient_ok && partial_min_ok;
    report(
        "3 huber-identities",
        pass,
        &format!("convexity {convex_ok}, lipschitz {lipschitz_ok}, gradient {gradient_ok}, partial-min {partial_min_ok}"),
    );
    assert!(pass);
}

/// Criterion 4: Monte Carlo coverage of the four concentration inequalities
/// over the (n, delta) grid at 2000 trials each.
#[test]
fn acceptance_4_concentration_coverage() {
    let mut rng = seeded_rng(0x4444);
    let mut all_pass = true;
    let mut lines = Vec::new();
    for &n in &[1000usize, 10_000] {
        for &delta in &[0.05, 0.1] {
            for id in [
                InequalityId::NoiseSupnorm,
                InequalityId::XtxiSupnorm,
                InequalityId::Chisq,
                InequalityId::BernsteinZ,
            ] {
                let mut params = VerifyParams::new(n, 20, delta, 1.0);
                if id == InequalityId::BernsteinZ {
                    let lambda_o =
                        2.0 * (2.0 * (n as f64 / delta).ln() / n as f64).sqrt();
                    params.lambda_o = Some(lambda_o);
                }
                let rec = verify_inequality(id, &params, 2000, &mut rng).unwrap();
                all_pass &= rec.passes();
                lines.push(format!(
                    "{} n={n} delta={delta}: coverage {:.4} vs nominal {:.4} (hw {:.4})",
                    rec.inequality_id, rec.empirical_coverage, rec.nominal_level, rec.wilson_halfwidth
                ));
            }
        }
    }
    report("4 concentration-coverage", all_pass, &lines.join("; "));
    assert!(all_pass);
}

/// Criterion 5: width estimates sit below the lemma bound, and the d = 2
/// estimator matches the closed form 2/sqrt(pi) (cross-checked here by
/// quadrature).
#[test]
fn acceptance_5_width_bounds() {
    // quadrature oracle: E max(|g1|,|g2|) = integral of 1 - (2 Phi(t) - 1)^2
    let phi = |t: f64| 0.5 * (1.0 + statrs::function::erf::erf(t / 2.0_f64.sqrt()));
    let integrand = |t: f64| 1.0 - (2.0 * phi(t) - 1.0).powi(2);
    let (a, b, m) = (0.0, 10.0, 20_000);
    let h = (b - a) / m as f64;
    let mut quad = integrand(a) + integrand(b);
    for k in 1..m {
        quad += if k % 2 == 1 { 4.0 } else { 2.0 } * integrand(a + k as f64 * h);
    }
    quad *= h / 3.0;
    let closed = 2.0 / std::f64::consts::PI.sqrt();
    assert!(
        (quad - closed).abs() < 1e-9,
        "quadrature {quad} vs closed form {closed}"
    );

    let mut rng = seeded_rng(0x5555);
    let d2 = estimate_width_sigma_ball(&Covariance::identity(2), 150_000, &mut rng).unwrap();
    let d2_pass = (d2.estimate - closed).abs() < 0.01;

    let mut bound_pass = true;
    let mut lines = vec![format!("d=2 estimate {:.5} vs 2/sqrt(pi) {:.5}", d2.estimate, closed)];
    for &d in &[3usize, 10, 100, 1000] {
        let w = estimate_width_sigma_ball(&Covariance::identity(d), 4000, &mut rng).unwrap();
        let ok = w.estimate <= w.bound + 3.0 * w.std_error;
        bound_pass &= ok;
        lines.push(format!(
            "d={d}: estimate {:.4} vs bound {:.4} (se {:.4})",
            w.estimate, w.bound, w.std_error
        ));
    }
    let pass = d2_pass && bound_pass;
    report("5 width-bounds", pass, &lines.join("; "));
    assert!(pass);
}

/// Criterion 6: the overflow-count bound holds on at least 95% of 200 trials
/// at a parameter point satisfying the bound's prerequisites (found by grid
/// search over desk-scale parameters).
#[test]
fn acceptance_6_c_cut_bound() {
    // prerequisites: (c1), (c2), (c3), the iso-cone ratio, a positive
    // lambda-margin, C_lambda_o > 1 and a finite positive C_r; RE holds with
    // kappa = 1 because Sigma = I
    let mut found = None;
    'search: for &n in &[500usize, 300, 1000] {
        for &d in &[50usize, 20] {
            for &s in &[3usize, 2] {
                for &o in &[10usize, 5, 20] {
                    for &delta in &[1.0 / 7.0, 0.1] {
                        let inputs = TuningInputs::new(n, d, s, o, delta, 1.0, 1.0, 1.0);
                        let Ok((pen, bundle)) = paper_tuning(&inputs) else {
                            continue;
                        };
                        let rep = condition_report(&bundle);
                        let margin = pen.lambda_s - bundle.c_lambda_s * pen.lambda_o;
                        let ok = rep.c1
                            && rep.c2.holds
                            && rep.c3.holds
                            && rep.cond_iso.holds
                            && margin > 0.0
                            && inputs.c_lambda_o > 1.0
                            && bundle.c_r.is_finite()
                            && bundle.c_r > 0.0;
                        if ok {
                            found = Some((inputs, pen, bundle));
                            break 'search;
                        }
                    }
                }
            }
        }
    }
    let (inputs, pen, bundle) = found.expect("no desk-scale point satisfies the prerequisites");
    let config = SolverConfig::default();
    let trials = 200;
    let mut held = 0;
    for t in 0..trials {
        let spec = InstanceSpec {
            n: inputs.n,
            d: inputs.d,
            s: inputs.s,
            o: inputs.o,
            sigma: inputs.sigma,
            covariance: Covariance::identity(inputs.d),
            beta_magnitude: 1.0,
            adversary: AdversaryKind::ResidualAligned { scale: 4.0 },
            seed: derive_seed(0x6666, t),
        };
        let instance = generate_instance(&spec).unwrap();
        let fit = solve_huber_lasso(&instance, &pen, &config).unwrap();
        let measured = measure_c_cut(&instance, &fit, pen.lambda_o);
        let bound = c_cut_bound(&bundle, &fit, &instance).unwrap();
        if (measured as f64) <= bound {
            held += 1;
        }
    }
    let rate = held as f64 / trials as f64;
    let pass = rate >= 0.95;
    report(
        "6 c-cut-bound",
        pass,
        &format!(
            "point (n={}, d={}, s={}, o={}, delta={:.4}): bound held in {held}/{trials} trials",
            inputs.n, inputs.d, inputs.s, inputs.o, inputs.delta
        ),
    );
    assert!(pass);
}

fn o_sweep_spec() -> ExperimentSpec {
    ExperimentSpec {
        sweep_axis: SweepAxis::O,
        axis_values: vec![8, 16, 32, 64, 128],
        fixed: InstanceSpec {
            n: 2000,
            d: 100,
            s: 5,
            o: 0,
            sigma: 1.0,
            covariance: Covariance::identity(100),
            beta_magnitude: 1.0,
            adversary: AdversaryKind::ResidualAligned { scale: 5.0 },
            seed: 0,
        },
        repetitions: 40,
        tuning_methods: vec![
            TuningMethod::Paper,
            TuningMethod::NguyenTran,
            TuningMethod::PlainLasso,
        ],
        master_seed: 0x7777,
        delta: 0.1,
        kappa: 1.0,
        gamma: 1.0,
        c_lambda_o: 2.0,
        record_timing: false,
    }
}

fn fast_experiment_config() -> SolverConfig {
    SolverConfig {
        max_iterations: 20_000,
        ..SolverConfig::default()
    }
}

/// Criterion 7(a): o-exponent of the median error under the refined recipe.
///
/// This criterion is reported honestly: at these desk-scale parameters the
/// recipe's lambda_s (which grows like sqrt(o/s) g(o)) exceeds the
/// stationarity scale of the data, the estimate collapses to zero at every
/// sweep point, and the exponent is exactly 0. See the o-sweep numbers
/// printed by the test.
#[test]
fn acceptance_7a_rate_o_sweep_paper() {
    let record = run_experiment_with(&o_sweep_spec(), &fast_experiment_config()).unwrap();
    let fit = fit_power_law(&record, TuningMethod::Paper, Metric::ErrorSigma).unwrap();
    let medians: Vec<String> = medians_for(&record, TuningMethod::Paper, Metric::ErrorSigma)
        .iter()
        .map(|m| format!("{:.4}", m.unwrap_or(f64::NAN)))
        .collect();
    let pass = fit.exponent >= 0.6 && fit.exponent <= 1.4;
    report(
        "7a rate-o-sweep-paper",
        pass,
        &format!(
            "exponent {:.4} (r^2 {:.3}), medians [{}]",
            fit.exponent,
            fit.r_squared,
            medians.join(", ")
        ),
    );
    assert!(
        pass,
        "o-exponent {} outside [0.6, 1.4]: the recipe's lambda_s exceeds the \
         stationarity scale at these desk-scale parameters and the estimator \
         collapses to beta = 0 at every sweep point",
        fit.exponent
    );
}

/// Criterion 7(b): at least one baseline is distinguishably worse on the
/// same sweep: its exponent trails by 0.25, or its absolute median errors
/// are uniformly larger at o >= 32.
#[test]
fn acceptance_7b_rate_o_sweep_baselines() {
    let spec = o_sweep_spec();
    let record = run_experiment_with(&spec, &fast_experiment_config()).unwrap();
    let paper_fit = fit_power_law(&record, TuningMethod::Paper, Metric::ErrorSigma).unwrap();
    let paper_medians = medians_for(&record, TuningMethod::Paper, Metric::ErrorSigma);
    let mut pass = false;
    let mut lines = vec![format!("paper exponent {:.3}", paper_fit.exponent)];
    for method in [TuningMethod::NguyenTran, TuningMethod::PlainLasso] {
        let fit = fit_power_law(&record, method, Metric::ErrorSigma).unwrap();
        let medians = medians_for(&record, method, Metric::ErrorSigma);
        let arm1 = fit.exponent <= paper_fit.exponent - 0.25;
        let arm2 = spec
            .axis_values
            .iter()
            .enumerate()
            .filter(|(_, &o)| o >= 32)
            .all(|(pi, _)| medians[pi].unwrap_or(0.0) > paper_medians[pi].unwrap_or(f64::INFINITY));
        pass |= arm1 || arm2;
        lines.push(format!(
            "{}: exponent {:.3}, medians at o>=32 {:?}",
            method.name(),
            fit.exponent,
            medians
                .iter()
                .skip(2)
                .map(|m| m.map(|v| (v * 1e3).round() / 1e3))
                .collect::<Vec<_>>()
        ));
    }
    report("7b rate-o-sweep-baselines", pass, &lines.join("; "));
    assert!(pass);
}

/// Criterion 7(c): clean-data n-sweep exponent consistent with n^{-1/2}.
#[test]
fn acceptance_7c_rate_n_sweep_clean() {
    let spec = ExperimentSpec {
        sweep_axis: SweepAxis::N,
        axis_values: vec![250, 500, 1000, 2000, 4000],
        fixed: InstanceSpec {
            n: 0,
            d: 100,
            s: 5,
            o: 0,
            sigma: 1.0,
            covariance: Covariance::identity(100),
            beta_magnitude: 1.0,
            adversary: AdversaryKind::None,
            seed: 0,
        },
        repetitions: 40,
        tuning_methods: vec![TuningMethod::Paper],
        master_seed: 0x7C7C,
        delta: 0.1,
        kappa: 1.0,
        gamma: 1.0,
        c_lambda_o: 2.0,
        record_timing: false,
    };
    let record = run_experiment_with(&spec, &fast_experiment_config()).unwrap();
    let fit = fit_power_law(&record, TuningMethod::Paper, Metric::ErrorSigma).unwrap();
    let medians: Vec<f64> = medians_for(&record, TuningMethod::Paper, Metric::ErrorSigma)
        .iter()
        .map(|m| m.unwrap())
        .collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let pass = fit.exponent >= -0.65 && fit.exponent <= -0.35 && decreasing;
    report(
        "7c rate-n-sweep-clean",
        pass,
        &format!(
            "exponent {:.4} (r^2 {:.3}), medians strictly decreasing: {decreasing}",
            fit.exponent, fit.r_squared
        ),
    );
    assert!(pass, "n-exponent {} outside [-0.65, -0.35]", fit.exponent);
}

/// Criterion 8: identical (spec, seed) produce byte-identical CSV/SVG, and
/// the instance directory round-trips losslessly.
#[test]
fn acceptance_8_determinism_and_io() {
    let spec = ExperimentSpec {
        sweep_axis: SweepAxis::O,
        axis_values: vec![4, 8],
        fixed: InstanceSpec {
            n: 80,
            d: 10,
            s: 2,
            o: 0,
            sigma: 0.5,
            covariance: Covariance::identity(10),
            beta_magnitude: 1.0,
            adversary: AdversaryKind::SignFlipLarge,
            seed: 0,
        },
        repetitions: 3,
        tuning_methods: vec![TuningMethod::NguyenTran, TuningMethod::PlainLasso],
        master_seed: 0x8888,
        delta: 0.1,
        kappa: 1.0,
        gamma: 1.0,
        c_lambda_o: 2.0,
        record_timing: false,
    };
    let a = run_experiment_with(&spec, &SolverConfig::default()).unwrap();
    let b = run_experiment_with(&spec, &SolverConfig::default()).unwrap();
    let csv_identical = csv_string(&a) == csv_string(&b);

    let dir = std::env::temp_dir().join(format!("extlasso-acc8-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (c1, c2) = (dir.join("a.csv"), dir.join("b.csv"));
    emit_csv(&a, &c1).unwrap();
    emit_csv(&b, &c2).unwrap();
    let csv_bytes_identical = std::fs::read(&c1).unwrap() == std::fs::read(&c2).unwrap();
    let (s1, s2) = (dir.join("a.svg"), dir.join("b.svg"));
    emit_plot(&a, &s1, Metric::ErrorSigma).unwrap();
    emit_plot(&b, &s2, Metric::ErrorSigma).unwrap();
    let svg_identical = std::fs::read(&s1).unwrap() == std::fs::read(&s2).unwrap();

    let ispec = InstanceSpec {
        n: 60,
        d: 7,
        s: 2,
        o: 6,
        sigma: 0.7,
        covariance: Covariance::Toeplitz { dim: 7, r: 0.4 },
        beta_magnitude: 1.3,
        adversary: AdversaryKind::ResidualAligned { scale: 3.0 },
        seed: 0x1234,
    };
    let instance = generate_instance(&ispec).unwrap();
    let idir = dir.join("instance");
    write_instance_dir(&idir, &instance, &ispec).unwrap();
    let (back, back_spec) = read_instance_dir(&idir).unwrap();
    let roundtrip = back_spec == ispec
        && back.x == instance.x
        && back.y == instance.y
        && back.y_clean == instance.y_clean
        && back.beta_star == instance.beta_star
        && back.theta_star == instance.theta_star
        && back.xi == instance.xi
        && back.outlier_index == instance.outlier_index;
    std::fs::remove_dir_all(&dir).ok();

    let pass = csv_identical && csv_bytes_identical && svg_identical && roundtrip;
    report(
        "8 determinism-io",
        pass,
        &format!("csv {csv_identical}/{csv_bytes_identical}, svg {svg_identical}, instance roundtrip {roundtrip}"),
    );
    assert!(pass);
}
