use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn finsler(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let head: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = head.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn inspect_second_class_reports_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let out = finsler(&["inspect", "--metric", "second-class", "--x", "0,1,0", "--dx", "1,0.5,0.5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["degeneracy"]["rank"], 0);
    assert_eq!(v["degeneracy"]["D"], 2);
    let c: Vec<f64> = v["connection"]["C"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
    // C₁ = -(dx² + x¹dx⁰), C₂ = dx¹ - x²dx⁰
    assert_eq!(c, vec![-1.5, 0.5]);
}

#[test]
fn inspect_euclidean_has_zero_spray_and_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let out = finsler(&["inspect", "--metric", "euclidean-2", "--x", "-1,2", "--dx", "1,2", "--curvature"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["connection"]["G"].as_array().unwrap().iter().all(|g| g.as_f64() == Some(0.0)));
    assert!(v["curvature"]["R"].is_array());
}

#[test]
fn inspect_usage_and_domain_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = finsler(&["inspect", "--metric", "euclidean-2", "--x", "0,0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = finsler(&["inspect", "--metric", "riemann-2d-curved", "--x", "0,0", "--dx", "1,0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "input");
    let out = finsler(&["inspect", "--metric", "no-such-metric", "--x", "0,0", "--dx", "1,0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn geodesic_potential_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = finsler(
        &[
            "geodesic",
            "--metric",
            "potential-system",
            "--x",
            "0,0.5,-0.2,0.3",
            "--dx",
            "1,0.1,0.4,-0.6",
            "--h",
            "1e-3",
            "--steps",
            "1000",
            "--out",
            "pot.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["nodes"], 1001);
    let text = std::fs::read_to_string(dir.path().join("pot.csv")).unwrap();
    let t = csv_column(&text, "t");
    assert_eq!(t.len(), 1001);
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    // in time gauge L = T - V oscillates; the energy -p₀ = T + V is what is conserved
    let d: Vec<Vec<f64>> = (0..4).map(|k| csv_column(&text, &format!("dx{k}"))).collect();
    let x: Vec<Vec<f64>> = (0..4).map(|k| csv_column(&text, &format!("x{k}"))).collect();
    let energy = |i: usize| 0.5 * (1..4).map(|a| d[a][i].powi(2) + x[a][i].powi(2)).sum::<f64>();
    let e0 = energy(0);
    assert!((0..t.len()).all(|i| (energy(i) - e0).abs() < 1e-10));
}

#[test]
fn geodesic_second_class_keeps_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let out = finsler(
        &[
            "geodesic",
            "--metric",
            "second-class",
            "--x",
            "0,0,1",
            "--dx",
            "1,1,0",
            "--gauge",
            "time",
            "--h",
            "0.01",
            "--steps",
            "300",
            "--out",
            "sc.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("sc.csv")).unwrap();
    for c in ["C1", "C2"] {
        assert!(csv_column(&text, c).iter().all(|v| v.abs() < 1e-8));
    }
}

#[test]
fn geodesic_inadmissible_start_and_halt() {
    let dir = tempfile::tempdir().unwrap();
    let out = finsler(
        &["geodesic", "--metric", "potential-system", "--x", "0,0,0,0", "--dx", "-1,0,0,0", "--out", "a.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("a.csv").exists());

    // heads for the pole, where the guard sin(x0) changes sign
    let out = finsler(
        &[
            "geodesic",
            "--metric",
            "riemann-2d-curved",
            "--x",
            "0.2,0",
            "--dx",
            "-1,0",
            "--h",
            "0.05",
            "--steps",
            "100",
            "--out",
            "halt.json",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let traj: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("halt.json")).unwrap()).unwrap();
    assert!(traj["halt"].is_string());
    assert!(traj["nodes"].as_array().unwrap().len() > 1);
}

#[test]
fn geodesic_arclength_needs_unit_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = finsler(
        &["geodesic", "--metric", "euclidean-2", "--x", "0,0", "--dx", "3,4", "--gauge", "arclength", "--out", "a.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_config_runs_every_entry_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sweep.json"),
        r#"{"metric": "riemann-2d-curved", "gauge": "arclength", "h": 0.01, "steps": 100, "format": "csv",
            "runs": [{"x": [1.0, 0.0], "dx": [0.6, 0.8], "out": "a.csv"},
                     {"x": [1.2, 0.5], "dx": [1.0, 0.0], "out": "b.csv"}]}"#,
    )
    .unwrap();
    // at x0 = 1 the first direction is not unit length, which the arc-length gauge rejects
    let out = finsler(&["geodesic", "--config", "sweep.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(
        dir.path().join("sweep.json"),
        r#"{"metric": "riemann-2d-curved", "gauge": "arclength", "h": 0.01, "steps": 100, "format": "csv",
            "runs": [{"x": [1.5707963267948966, 0.0], "dx": [0.6, 0.8], "out": "a.csv"},
                     {"x": [1.2, 0.5], "dx": [1.0, 0.0], "out": "b.csv"}]}"#,
    )
    .unwrap();
    let out = finsler(&["geodesic", "--config", "sweep.json", "--steps", "20"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summaries = stdout_json(&out);
    assert_eq!(summaries.as_array().unwrap().len(), 2);
    for f in ["a.csv", "b.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(text.lines().count(), 22);
        assert!(csv_column(&text, "L").iter().all(|l| (l - 1.0).abs() < 1e-9));
    }
}

#[test]
fn verify_filters_and_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = finsler(&["verify", "--only", "frenkel"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = table.lines().skip(1).take_while(|l| !l.contains("checks,")).collect();
    assert!(!body.is_empty() && body.iter().all(|l| l.starts_with("frenkel ")));

    std::fs::write(dir.path().join("broken.json"), r#"{"dimension": 2, "expression": "d0^2 + d1^2"}"#).unwrap();
    let out = finsler(&["verify", "--metric", "broken.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().any(|l| l.contains("L-homogeneity") && l.contains("FAIL")));

    let out = finsler(&["verify", "--only", "nope"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn catalog_dumps_metric_documents() {
    let dir = tempfile::tempdir().unwrap();
    let out = finsler(&["catalog"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let entries = v.as_array().unwrap();
    assert!(entries.len() >= 9);
    for e in entries {
        let doc = serde_json::to_string(&e["metric"]).unwrap();
        finsler::dsl::MetricSpec::from_json(&doc).unwrap();
    }
    let names: Vec<&str> = entries.iter().map(|e| e["name"].as_str().unwrap()).collect();
    for n in ["euclidean-2", "riemann-2d-curved", "quartic-root", "potential-system", "second-class", "frenkel"] {
        assert!(names.contains(&n));
    }
    // a dumped document is accepted back as --metric
    let k = names.iter().position(|n| *n == "frenkel").unwrap();
    std::fs::write(dir.path().join("frenkel.json"), serde_json::to_string(&entries[k]["metric"]).unwrap()).unwrap();
    let out =
        finsler(&["inspect", "--metric", "frenkel.json", "--x", "0,0.3,0.2,0.5", "--dx", "1,0.5,0.8,0.4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn parameter_override_changes_the_metric() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["inspect", "--metric", "potential-system", "--x", "0,1,0,0", "--dx", "1,0,0,0"];
    let base = stdout_json(&finsler(&args, dir.path()));
    let mut stiff = args.to_vec();
    stiff.extend(["--param", "k=4"]);
    let v = stdout_json(&finsler(&stiff, dir.path()));
    let l0 = base["jet"]["L"].as_f64().unwrap();
    let l1 = v["jet"]["L"].as_f64().unwrap();
    assert_eq!((l0, l1), (-0.5, -2.0));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "geodesic",
        "--metric",
        "quartic-root",
        "--x",
        "0.2,-0.1",
        "--dx",
        "1,0.5",
        "--steps",
        "200",
        "--format",
        "json",
    ];
    let a = finsler(&args, dir.path());
    let b = finsler(&args, dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}
