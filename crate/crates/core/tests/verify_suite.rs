//! Integration coverage for the uniform-law probes and the RE estimator:
//! these are slower than unit tests but much smaller than the acceptance
//! grid.

use extlasso::covariance::Covariance;
use extlasso::rng::seeded_rng;
use extlasso::simulate::{generate_instance, AdversaryKind, InstanceSpec};
use extlasso::solver::{solve_huber_lasso, SolverConfig};
use extlasso::tuning::{paper_tuning, TuningInputs};
use extlasso::verify::{
    estimate_re_kappa, estimate_width_l1l2, verify_atp, verify_inequality, InequalityId,
    VerifyParams,
};
use ndarray::Array1;

#[test]
fn prop3_coverage_with_instance_probe() {
    // build one instance-specific probe v = beta_star - beta_hat
    let spec = InstanceSpec {
        n: 150,
        d: 10,
        s: 2,
        o: 10,
        sigma: 1.0,
        covariance: Covariance::identity(10),
        beta_magnitude: 1.0,
        adversary: AdversaryKind::ResidualAligned { scale: 4.0 },
        seed: 21,
    };
    let instance = generate_instance(&spec).unwrap();
    let inputs = TuningInputs::new(150, 10, 2, 10, 1.0 / 7.0, 1.0, 1.0, 1.0);
    let (pen, _) = paper_tuning(&inputs).unwrap();
    let fit = solve_huber_lasso(&instance, &pen, &SolverConfig::default()).unwrap();
    let probe: Vec<f64> = (&instance.beta_star - &fit.beta_hat).to_vec();

    let mut params = VerifyParams::new(150, 10, 1.0 / 7.0, 1.0);
    params.probes = 3;
    params.extra_probes_v = vec![probe];
    let mut rng = seeded_rng(22);
    let rec = verify_inequality(InequalityId::Prop3, &params, 300, &mut rng).unwrap();
    assert!(
        rec.passes(),
        "prop3 coverage {} vs nominal {}",
        rec.empirical_coverage,
        rec.nominal_level
    );
}

#[test]
fn prop4_coverage_small_grid() {
    let mut params = VerifyParams::new(200, 8, 1.0 / 7.0, 1.0);
    params.probes = 3;
    params.width_trials = 200;
    let mut rng = seeded_rng(23);
    let rec = verify_inequality(InequalityId::Prop4, &params, 200, &mut rng).unwrap();
    assert!(
        rec.passes(),
        "prop4 coverage {} vs nominal {}",
        rec.empirical_coverage,
        rec.nominal_level
    );
}

#[test]
fn atp_coverage_reference_grid() {
    // n large enough that C_{n,delta} > 0
    let mut params = VerifyParams::new(2000, 20, 1.0 / 7.0, 1.0);
    params.probes = 3;
    let mut rng = seeded_rng(24);
    let rec = verify_atp(&params, 150, &mut rng).unwrap();
    assert!(
        rec.passes(),
        "atp coverage {} vs nominal {}",
        rec.empirical_coverage,
        rec.nominal_level
    );
}

#[test]
fn width_l1l2_sits_below_both_lemma_bounds() {
    // m-sparse equal-magnitude u: the sparse bound binds; dense-ish u:
    // the l1 bound can bind
    let mut rng = seeded_rng(25);
    for (n, m) in [(100usize, 10usize), (64, 1), (50, 50)] {
        let mut u = Array1::<f64>::zeros(n);
        for i in 0..m {
            u[i] = 1.5;
        }
        let w = estimate_width_l1l2(&u, 1500, &mut rng).unwrap();
        assert!(
            w.estimate <= w.bound_l1.unwrap() + 3.0 * w.std_error,
            "(n={n}, m={m}) estimate {} above l1 bound {}",
            w.estimate,
            w.bound_l1.unwrap()
        );
        assert!(
            w.estimate <= w.bound_sparse.unwrap() + 3.0 * w.std_error,
            "(n={n}, m={m}) estimate {} above sparse bound {}",
            w.estimate,
            w.bound_sparse.unwrap()
        );
    }
}

#[test]
fn re_kappa_identity_grid_within_unit_band() {
    let mut rng = seeded_rng(26);
    for &d in &[5usize, 20, 50] {
        for &s in &[1usize, 2, 3] {
            for &c0 in &[1.0, 5.0] {
                let cov = Covariance::identity(d);
                let k = estimate_re_kappa(&cov, s, c0, 2000, &mut rng).unwrap();
                assert!(
                    (0.9..=1.0 + 1e-9).contains(&k),
                    "d={d} s={s} c0={c0}: kappa estimate {k}"
                );
            }
        }
    }
}
