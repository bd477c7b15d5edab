//! End-to-end checks of the CLI: subcommand wiring, exit codes, file
//! outputs, and byte determinism of study artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_extlasso"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn extlasso")
}

fn simulate_into(dir: &Path) {
    let out = run(&[
        "simulate",
        "--out",
        dir.to_str().unwrap(),
        "--n",
        "80",
        "--d",
        "10",
        "--s",
        "2",
        "--o",
        "6",
        "--sigma",
        "0.5",
        "--adversary",
        "sign_flip_large",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_then_fit_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    simulate_into(&dir);
    for name in ["X.csv", "y.csv", "truth.csv", "meta.json"] {
        assert!(dir.join(name).exists(), "missing {name}");
    }
    let out = run(&[
        "fit",
        "--instance",
        dir.to_str().unwrap(),
        "--method",
        "manual",
        "--lambda-s",
        "0.1",
        "--lambda-o",
        "0.3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["converged"], serde_json::Value::Bool(true));
    assert!(json["error_l2"].as_f64().unwrap() < 1.0);
}

#[test]
fn fit_nonconvergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    simulate_into(&dir);
    let out = run(&[
        "fit",
        "--instance",
        dir.to_str().unwrap(),
        "--method",
        "nguyen_tran",
        "--max-iterations",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_instance_exits_2() {
    let out = run(&["fit", "--instance", "/nonexistent-path-xyz"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tuning_emits_json_report() {
    let out = run(&[
        "tuning", "--n", "2000", "--d", "100", "--s", "5", "--o", "32", "--delta", "0.1",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["penalties"]["lambda_o"].as_f64().unwrap() > 0.0);
    assert!(json["bundle"]["c_n_delta"].is_number());
    assert!(json["conditions"]["all_satisfied"].is_boolean());
    assert!(json["rates"]["r_total"].as_f64().unwrap() > 0.0);
    // the constant hunt for a positive C_> lands in the thousands
    assert!(json["min_c_lambda_o_for_positive_c_gt"].as_f64().unwrap() > 100.0);
}

#[test]
fn verify_single_inequality_and_seed_requirement() {
    let out = run(&[
        "verify", "--id", "chisq", "--n", "500", "--delta", "0.1", "--trials", "300", "--seed",
        "11",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("inequality_id,"));
    assert!(text.contains("chisq"));

    let out = run(&["verify", "--id", "chisq"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_widths_suite() {
    let out = run(&["verify", "--suite", "widths", "--trials", "400", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("set_id,"));
    assert_eq!(text.lines().count(), 5); // header + 4 dimensions
}

#[test]
fn rate_study_deterministic_and_plottable() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("study.json");
    std::fs::write(
        &config,
        r#"{
            "sweep_axis": "o",
            "axis_values": [2, 4, 8],
            "fixed": {
                "n": 60, "d": 8, "s": 2, "o": 0, "sigma": 0.5,
                "covariance": {"kind": "identity", "dim": 8},
                "beta_magnitude": 1.0,
                "adversary": {"kind": "residual_aligned", "scale": 4.0},
                "seed": 0
            },
            "repetitions": 2,
            "tuning_methods": ["nguyen_tran", "plain_lasso"],
            "master_seed": 0
        }"#,
    )
    .unwrap();
    let csv_a = tmp.path().join("a.csv");
    let csv_b = tmp.path().join("b.csv");
    for out_path in [&csv_a, &csv_b] {
        let out = run(&[
            "rate-study",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "99",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&csv_b).unwrap()
    );

    let svg = tmp.path().join("study.svg");
    let out = run(&[
        "plot",
        "--input",
        csv_a.to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<polyline").count(), 3); // 2 methods + theory

    // --seed is required
    let out = run(&["rate-study", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rate_study_rejects_bad_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.json");
    std::fs::write(&config, "{ not valid json").unwrap();
    let out = run(&[
        "rate-study",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
