use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use holo_lab_cli::{run, Overrides, RunConfig};

const SUBCOMMANDS: [&str; 5] = ["rigidity-check", "factorize-verify", "recover-params", "herglotz-analyze", "shift-sim"];

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn holo_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holo-lab")).args(args).output().expect("binary runs")
}

fn config_path(name: &str) -> String {
    fixtures().join(format!("{name}.json")).to_string_lossy().into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

/// Set `HOLO_LAB_BLESS=1` to rewrite the golden reports.
#[test]
fn golden_reports() {
    let bless = std::env::var_os("HOLO_LAB_BLESS").is_some();
    for name in SUBCOMMANDS {
        let out = holo_lab(&["--config", &config_path(name)]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let golden = fixtures().join(format!("{name}.report.json"));
        if bless {
            std::fs::write(&golden, &out.stdout).unwrap();
        }
        let expected = std::fs::read(&golden).expect("golden exists; run with HOLO_LAB_BLESS=1 to create it");
        assert!(out.stdout == expected, "{name}: report differs from {}", golden.display());
    }
}

#[test]
fn identical_runs_write_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["shift-sim", "herglotz-analyze", "factorize-verify"] {
        let a = tmp.path().join(format!("{name}-a"));
        let b = tmp.path().join(format!("{name}-b"));
        for dir in [&a, &b] {
            let out = holo_lab(&["--config", &config_path(name), "--out", dir.to_str().unwrap(), "--emit-plots"]);
            assert_eq!(out.status.code(), Some(0));
        }
        let mut files: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        assert!(files.len() >= 2, "{name}: {files:?}");
        for f in files {
            assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap(), "{name}/{f:?}");
        }
    }
}

#[test]
fn scalar_half_factorization_passes() {
    let cfg = RunConfig::load(Path::new(&config_path("factorize-verify"))).unwrap();
    let outcome = run(&cfg, false).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    let product = outcome.report.checks.iter().find(|c| c.name == "product").unwrap();
    assert!(product.residual <= 1e-12);
}

#[test]
fn expected_negative_counts_as_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(
        tmp.path(),
        r#"{"command": "rigidity-check", "rigidity": {"functions": [{"id": "re-plus-half"}]}}"#,
    );
    let out = holo_lab(&["--config", &path]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdicts"][0]["verdict"], "HYPOTHESIS_VIOLATED");
    assert_eq!(report["verdicts"][0]["expected"], "HYPOTHESIS_VIOLATED");

    // Declaring the wrong expectation turns it into a failed check.
    let path = write_config(
        tmp.path(),
        r#"{"command": "rigidity-check", "rigidity": {"functions": [{"id": "re-plus-half", "expected": "CONSTANT_CONFIRMED"}]}}"#,
    );
    let out = holo_lab(&["--config", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("re-plus-half"));
}

#[test]
fn invalid_b_exits_two_naming_invariant() {
    let out = holo_lab(&["--config", &config_path("invalid-b")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0 <= B <= I"));
}

#[test]
fn failed_check_exits_one_and_names_it() {
    let out = holo_lab(&["--config", &config_path("factorize-verify"), "--tol", "master=1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("check master failed") && err.contains("z = "), "{err}");
}

#[test]
fn invalid_inputs_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"command": "shift-sim", "shift": {}, "bogus": 1}"#,
        r#"{"command": "shift-sim", "shift": {"t_list": [-1.0]}}"#,
        r#"{"command": "shift-sim", "shift": {"random_dim": 2}}"#,
        r#"{"command": "no-such-command"}"#,
        r#"{"command": "factorize-verify", "factorization": {"params_path": "missing.json"}}"#,
        r#"{"command": "factorize-verify", "shift": {}}"#,
        r#"{"command": "herglotz-analyze", "herglotz": {"random_dim": 1, "sampling": {"r": 0.999, "n_samples": 100, "max_order": 8}}}"#,
    ];
    for body in cases {
        let path = write_config(tmp.path(), body);
        let out = holo_lab(&["--config", &path, "--seed", "1"]);
        let code = out.status.code();
        // the random_dim case only fails without a seed
        if body.contains("\"random_dim\": 2") {
            assert_eq!(code, Some(0), "{body}");
            assert_eq!(holo_lab(&["--config", &path]).status.code(), Some(2), "{body} without seed");
        } else {
            assert_eq!(code, Some(2), "{body}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    let path = write_config(tmp.path(), r#"{"command": "recover-params", "factorization": {"random_dim": 2}}"#);
    for args in [
        vec!["--config", path.as_str(), "--seed", "1", "--tol", "nonsense=1"],
        vec!["--config", path.as_str(), "--seed", "1", "--grid-radii", "0.5,1.2"],
        vec!["--config", path.as_str(), "--seed", "1", "--emit-plots"],
        vec!["--config", path.as_str(), "--tol", "recover"],
        vec!["--seed", "1"],
        vec!["--config", "/nonexistent/config.json"],
    ] {
        assert_eq!(holo_lab(&args).status.code(), Some(2), "{args:?}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_holo-lab"))
        .args(["--config", path.as_str(), "--seed", "1"])
        .env("HOLO_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = holo_lab(&["--config", &config_path("recover-params"), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn overrides_apply() {
    let mut cfg = RunConfig::load(Path::new(&config_path("factorize-verify"))).unwrap();
    cfg.apply(&Overrides { seed: Some(9), grid_radii: Some(vec![0.2, 0.4]), tolerances: vec![("product".into(), 1e-9)] })
        .unwrap();
    assert_eq!(cfg.seed, Some(9));
    assert_eq!(cfg.grid_or_default().radii(), &[0.2, 0.4]);
    let outcome = run(&cfg, false).unwrap();
    let product = outcome.report.checks.iter().find(|c| c.name == "product").unwrap();
    assert_eq!(product.tolerance, 1e-9);
    assert_eq!(outcome.report.details["evaluated_points"], 1 + 2 * 64);
}

#[test]
fn thread_cap_does_not_change_report() {
    let a = Command::new(env!("CARGO_BIN_EXE_holo-lab"))
        .args(["--config", &config_path("rigidity-check")])
        .env("HOLO_LAB_THREADS", "1")
        .output()
        .unwrap();
    let b = holo_lab(&["--config", &config_path("rigidity-check")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn plot_data_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("shift");
    let out = holo_lab(&["--config", &config_path("shift-sim"), "--out", dir.to_str().unwrap(), "--emit-plots"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["artifacts"], serde_json::json!(["coefficients.csv", "conjugation.csv"]));

    // shift-sim at t = 1: first coefficient e^{-1}
    let tmp_cfg = write_config(tmp.path(), r#"{"command": "shift-sim", "shift": {"t_list": [1.0]}}"#);
    let dir = tmp.path().join("t1");
    assert_eq!(holo_lab(&["--config", &tmp_cfg, "--out", dir.to_str().unwrap(), "--emit-plots"]).status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("coefficients.csv")).unwrap();
    let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[1], "0");
    assert!((first[2].parse::<f64>().unwrap() - (-1.0f64).exp()).abs() < 1e-15);

    // h = φ: every moment norm close to 1
    let dir = tmp.path().join("phi");
    assert_eq!(
        holo_lab(&["--config", &config_path("herglotz-analyze"), "--out", dir.to_str().unwrap(), "--emit-plots"]).status.code(),
        Some(0)
    );
    let csv = std::fs::read_to_string(dir.join("moment_profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,moment_norm,distance_to_atom"));
    for line in lines {
        let norm: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((norm - 1.0).abs() < 5e-2, "{line}");
    }

    // factorize-verify: heatmap over (radius, angle)
    let dir = tmp.path().join("fact");
    assert_eq!(
        holo_lab(&["--config", &config_path("factorize-verify"), "--out", dir.to_str().unwrap(), "--emit-plots"]).status.code(),
        Some(0)
    );
    let csv = std::fs::read_to_string(dir.join("residual_heatmap.csv")).unwrap();
    assert!(csv.starts_with("radius,angle,residual\n"));
    assert_eq!(csv.lines().count(), 1 + 10 * 64);
}
