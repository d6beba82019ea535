use std::path::Path;
use std::process::Command;

use serde_json::Value;
use zigzag_pdmp::cli::run;

fn pdmp(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["pdmp".to_string(), "--out".into(), out.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    run(argv)
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn read(out: &Path, name: &str) -> String {
    std::fs::read_to_string(out.join(name)).unwrap()
}

#[test]
fn zero_horizon_simulation_is_an_empty_skeleton() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pdmp(dir.path(), &["simulate", "--horizon", "0"]), 0);
    assert_eq!(read(dir.path(), "skeleton.csv"), "n,T,x_1,v_1\n0,0,5,-1\n");
    let m = manifest(dir.path());
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["seed"], 0xC0FFEE);
}

#[test]
fn telegraph_model_fails_the_contraction_condition() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pdmp(dir.path(), &["verify-assumptions", "--model", "telegraph"]), 2);
    let report: Value = serde_json::from_str(&read(dir.path(), "assumptions.json")).unwrap();
    assert_eq!(report["a_route"]["a4"]["feasible"], false);
    assert_eq!(manifest(dir.path())["exit_code"], 2);
}

#[test]
fn figure1_model_passes_the_one_dimensional_route() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pdmp(dir.path(), &["verify-assumptions"]), 0);
    let report: Value = serde_json::from_str(&read(dir.path(), "assumptions.json")).unwrap();
    assert_eq!(report["a_route"]["holds"], true);
}

#[test]
fn planar_model_without_constants_skips_h4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pdmp(dir.path(), &["verify-assumptions", "--model", "angular", "--theta0", "0.8"]), 0);
    let report: Value = serde_json::from_str(&read(dir.path(), "assumptions.json")).unwrap();
    assert!(report["note"].as_str().unwrap().contains("H4"));
}

#[test]
fn planar_model_with_constants_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.json");
    std::fs::write(&c, r#"{"theta0": 0.8, "theta_star": 0.1, "beta": 20, "delta": 1}"#).unwrap();
    let code = pdmp(
        dir.path(),
        &["verify-assumptions", "--model", "angular", "--constants", c.to_str().unwrap()],
    );
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&read(dir.path(), "assumptions.json")).unwrap();
    assert_eq!(report["h_route"]["certified"], true);
}

#[test]
fn infeasible_constants_exit_two_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.json");
    // boost 19 cannot reach β = 50
    std::fs::write(&c, r#"{"theta0": 0.8, "theta_star": 0.1, "beta": 50, "delta": 1}"#).unwrap();
    let code = pdmp(dir.path(), &["lyapunov-check", "--constants", c.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(manifest(dir.path())["exit_code"], 2);
}

#[test]
fn malformed_model_json_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dimension\": 1,\n \"rate\": oops}").unwrap();
    assert_eq!(pdmp(dir.path(), &["simulate", "--model", bad.to_str().unwrap()]), 1);
    let err = manifest(dir.path())["summary"]["error"].as_str().unwrap().to_string();
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn unknown_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pdmp(dir.path(), &["simulate", "--no-such-flag"]), 1);
}

#[test]
fn model_json_file_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, zigzag_pdmp::Model::signed_velocity_example().to_json()).unwrap();
    let code = pdmp(
        dir.path(),
        &["simulate", "--model", path.to_str().unwrap(), "--x0", "-2", "--v0", "0.5", "--horizon", "20"],
    );
    assert_eq!(code, 0);
    assert!(read(dir.path(), "skeleton.csv").starts_with("n,T,x_1,v_1\n0,0,-2,0.5\n"));
}

#[test]
fn identical_seeds_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "7", "histogram", "--t", "1,3", "--n", "2000", "--bins", "20"];
    assert_eq!(pdmp(a.path(), &args), 0);
    let mut threaded = vec!["--threads", "3"];
    threaded.extend_from_slice(&args);
    assert_eq!(pdmp(b.path(), &threaded), 0);
    for name in ["histogram_t1.csv", "histogram_t3.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name));
    }
    assert!(read(a.path(), "histogram_t1.csv").starts_with("bin_left,bin_right,count,freq\n-10,-9,"));
}

#[test]
fn one_dimensional_bound_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(pdmp(&out.join("b"), &["bounds-1d"]), 0);
    let s: Value = serde_json::from_str(&read(&out.join("b"), "summary.json")).unwrap();
    assert!(s["constants"]["j_star"].as_f64().unwrap() < 1.0);
    assert_eq!(pdmp(&out.join("t"), &["tail-s", "--n", "2000"]), 0);
    assert!(read(&out.join("t"), "bounds.csv").starts_with("name,analytic,estimate,stderr,verdict\nP(S>1),"));
    assert_eq!(pdmp(&out.join("z"), &["hitting-z", "--n", "500"]), 0);
    assert!(read(&out.join("z"), "hitting_z.csv").starts_with("i,time,censored\n"));
    assert_eq!(pdmp(&out.join("tel"), &["tail-s", "--model", "telegraph", "--n", "100"]), 2);
}

#[test]
fn estimator_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(pdmp(&out.join("r"), &["regen", "--function", "constant", "--excursions", "50"]), 0);
    let s: Value = serde_json::from_str(&read(&out.join("r"), "summary.json")).unwrap();
    assert_eq!(s["ratio"], 1.0);
    assert_eq!(pdmp(&out.join("r2"), &["regen", "--excursions", "3"]), 2);
    let code = pdmp(&out.join("s"), &["stationarity", "--horizon", "200", "--burn-in", "10"]);
    assert_eq!(code, 0);
    let csv = read(&out.join("s"), "stationarity.csv");
    assert!(csv.starts_with("function,mean,stderr,consistent\nconstant,0,0,true\n"), "{csv}");
}

#[test]
fn lyapunov_check_writes_drift_sample() {
    let dir = tempfile::tempdir().unwrap();
    let code = pdmp(
        dir.path(),
        &["lyapunov-check", "--points", "200", "--hitting-starts", "2", "--hitting-samples", "200"],
    );
    assert_eq!(code, 0);
    let csv = read(dir.path(), "drift_points.csv");
    assert!(csv.starts_with("x_1,x_2,v_1,v_2,ratio\n"));
    assert_eq!(csv.lines().count(), 201);
    assert_eq!(read(dir.path(), "hitting_ball.csv").lines().count(), 3);
}

#[test]
fn figure1_recipe_writes_six_histograms() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pdmp(dir.path(), &["reproduce-figure1", "--n", "500"]), 0);
    for t in ["0.5", "5", "10", "17", "30", "40"] {
        assert!(dir.path().join(format!("hist_t{t}.csv")).exists());
    }
    assert_eq!(read(dir.path(), "tv.csv").lines().count(), 7);
    assert!(dir.path().join("plot_figure1.py").exists());
}

#[test]
fn seed_precedence_flag_over_environment() {
    let bin = env!("CARGO_BIN_EXE_pdmp");
    let dir = tempfile::tempdir().unwrap();
    let seed_of = |sub: &str, extra: &[&str], env: Option<&str>| -> u64 {
        let out = dir.path().join(sub);
        let mut cmd = Command::new(bin);
        cmd.arg("--out").arg(&out).args(extra).args(["simulate", "--horizon", "1"]);
        cmd.env_remove("PDMP_SEED");
        if let Some(v) = env {
            cmd.env("PDMP_SEED", v);
        }
        assert!(cmd.status().unwrap().success());
        manifest(&out)["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of("a", &[], None), 0xC0FFEE);
    assert_eq!(seed_of("b", &[], Some("0x10")), 16);
    assert_eq!(seed_of("c", &["--seed", "3"], Some("16")), 3);
}
