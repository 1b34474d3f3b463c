use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

use rqz_cli::cli_main;

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["rqz".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    cli_main(argv)
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn read_json(p: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn solve_planted_ten_by_ten() {
    let dir = tempfile::tempdir().unwrap();
    let eigs: String = (1..=10).map(|k| format!("{},{}\n", k as f64 * 0.5, (k % 3) as f64 - 1.0)).collect();
    fs::write(dir.path().join("eigs.csv"), eigs).unwrap();
    let (a, b, out) = (path(dir.path(), "a.mtx"), path(dir.path(), "b.mtx"), path(dir.path(), "r.json"));
    let eig_file = path(dir.path(), "eigs.csv");
    assert_eq!(run(&["generate", "--planted", &eig_file, "--seed", "3", "--out-a", &a, "--out-b", &b]), 0);
    assert_eq!(run(&["solve", "--a", &a, "--b", &b, "--pole-strategy", "wilkinson", "--out", &out]), 0);
    let report = read_json(&out);
    assert_eq!(report["schema_version"], 1);
    assert!(report["backward_error_A"].as_f64().unwrap() <= 1e-13);
    assert!(report["backward_error_B"].as_f64().unwrap() <= 1e-13);
    let found: Vec<(f64, f64)> = report["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            let (ar, ai, br) = (e["alpha_re"].as_f64().unwrap(), e["alpha_im"].as_f64().unwrap(), e["beta_re"].as_f64().unwrap());
            assert_eq!(e["beta_im"].as_f64().unwrap(), 0.0);
            (ar / br, ai / br)
        })
        .collect();
    assert_eq!(found.len(), 10);
    for k in 1..=10 {
        let want = (k as f64 * 0.5, (k % 3) as f64 - 1.0);
        let d = found.iter().map(|z| (z.0 - want.0).hypot(z.1 - want.1)).fold(f64::INFINITY, f64::min);
        assert!(d <= 1e-9, "eigenvalue {want:?} missed by {d:e}");
    }
    for key in ["iterations", "swaps", "it_per_n", "swaps_per_n2", "deflations"] {
        assert!(!report["stats"][key].is_null(), "{key}");
    }
}

#[test]
fn reduce_reports_profile() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, out) = (path(dir.path(), "a.mtx"), path(dir.path(), "b.mtx"), path(dir.path(), "r.json"));
    assert_eq!(run(&["generate", "--n", "12", "--seed", "5", "--out-a", &a, "--out-b", &b]), 0);
    let poles: String = (0..11).map(|k| if k % 4 == 0 { "inf\n".to_string() } else { format!("{k},0.5\n") }).collect();
    let pole_file = path(dir.path(), "poles.csv");
    fs::write(&pole_file, poles).unwrap();
    assert_eq!(run(&["reduce", "--a", &a, "--b", &b, "--poles", &pole_file, "--monitor", "--out", &out]), 0);
    let r = read_json(&out);
    assert_eq!(r["subdiagonal_profile"].as_array().unwrap().len(), 11);
    assert!(r["backward_error_A"].as_f64().unwrap() <= 1e-13);
    assert!(r["mismatched_positions"].as_array().unwrap().is_empty());
    // wrong pole count is a compute error
    fs::write(&pole_file, "1,0\n").unwrap();
    assert_eq!(run(&["reduce", "--a", &a, "--b", &b, "--poles", &pole_file]), 1);
}

#[test]
fn rk_finds_rightmost_of_planted() {
    let dir = tempfile::tempdir().unwrap();
    let eigs: String = (0..40).map(|k| format!("{},{}\n", -(k as f64) * 0.25, 0.1 * (k % 4) as f64)).collect();
    let eig_file = path(dir.path(), "eigs.csv");
    fs::write(&eig_file, eigs).unwrap();
    let (a, b, out) = (path(dir.path(), "a.mtx"), path(dir.path(), "b.mtx"), path(dir.path(), "r.json"));
    assert_eq!(run(&["generate", "--planted", &eig_file, "--out-a", &a, "--out-b", &b]), 0);
    let pole_file = path(dir.path(), "poles.csv");
    fs::write(&pole_file, "1.0,0\n").unwrap();
    let args = ["rk", "--a", &a, "--b", &b, "--poles", &pole_file, "--m", "12", "--p", "6", "--tol", "1e-9", "--out", &out];
    assert_eq!(run(&args), 0);
    let r = read_json(&out);
    assert_eq!(r["converged"], true);
    let v = &r["ritz"][0]["value"];
    let z = (v["alpha_re"].as_f64().unwrap() / v["beta_re"].as_f64().unwrap(), v["alpha_im"].as_f64().unwrap());
    assert!(z.0.abs() <= 1e-7 && z.1.abs() <= 1e-7, "{z:?}");
}

#[test]
fn bench_wilkinson_not_worse_than_infinity() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "bench.json");
    let args = ["bench", "--kind", "random", "--sizes", "100", "--strategies", "infinity,wilkinson", "--reps", "3", "--out", &out];
    assert_eq!(run(&args), 0);
    let r = read_json(&out);
    assert_eq!(r["cells"].as_array().unwrap().len(), 6);
    let mean = |name: &str| {
        r["summary"].as_array().unwrap().iter().find(|s| s["strategy"] == name).unwrap()["mean_it_per_n"].as_f64().unwrap()
    };
    let (inf, wil) = (mean("infinity"), mean("wilkinson"));
    assert!(wil <= inf * 1.05, "wilkinson {wil} vs infinity {inf}");
}

#[test]
fn filter_report_unit_circle_example() {
    let dir = tempfile::tempdir().unwrap();
    let eigs: String = (0..11)
        .map(|k| {
            let t = std::f64::consts::PI * (2 * k + 1) as f64 / 11.0;
            format!("{:e},{:e}\n", t.cos(), t.sin())
        })
        .collect();
    let eig_file = path(dir.path(), "eigs.csv");
    fs::write(&eig_file, eigs).unwrap();
    let out = path(dir.path(), "f.json");
    assert_eq!(run(&["filter-report", "--eigs", &eig_file, "--pole", "inf", "--shift", "-0.95", "--s", "2", "--out", &out]), 0);
    let r = read_json(&out);
    assert!((r["bottom_factor"].as_f64().unwrap() - 8.22e-3).abs() <= 0.02 * 8.22e-3);
    assert!((r["top_factor"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert_eq!(run(&["filter-report", "--eigs", &eig_file, "--pole", "0.1,1", "--shift", "-0.95", "--s", "2", "--out", &out]), 0);
    let r = read_json(&out);
    assert!((r["top_factor"].as_f64().unwrap() - 7.46e-3).abs() <= 0.02 * 7.46e-3);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_rqz");
    let out = Command::new(exe).args(["solve", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = Command::new(exe).args(["solve", "--a", "/nonexistent.mtx", "--b", "/nonexistent.mtx"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(exe).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}
