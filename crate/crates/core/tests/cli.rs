use std::process::{Command, Output};

fn invcurve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invcurve"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{report}"))
        .to_string()
}

#[test]
fn canonical_curve_is_zero() {
    let o = invcurve(&["manifold-gt", "--map", "builtin:CANON(lambda=1,mu=0)"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,F"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, f) = l.split_once(',').unwrap();
            (x.parse().unwrap(), f.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 512);
    assert!(rows.iter().all(|(_, f)| f.abs() <= 1e-12));
    // diagnostics go to stderr when the CSV occupies stdout
    assert!(String::from_utf8_lossy(&o.stderr).contains("nu_bar = "));
}

#[test]
fn compare_reports_leading_coefficient() {
    let o = invcurve(&["compare", "--map", "builtin:PERT(lambda=1,mu=0,c=0.1)"]);
    assert!(o.status.success());
    let r = stdout(&o);
    let a3: f64 = value(&r, "a3_graph_transform").parse().unwrap();
    assert!((a3 - 0.05).abs() < 5e-4);
    assert_eq!(value(&r, "agree"), "true");
    assert!(r.contains("decade ["));
}

#[test]
fn single_shadow_step() {
    let o = invcurve(&[
        "verify-shadow", "--map", "builtin:CANON", "--x", "0.1", "--xhat", "0.100000001", "--y",
        "0", "--yhat", "0",
    ]);
    assert!(o.status.success());
    let r = stdout(&o);
    let before: f64 = value(&r, "before").parse().unwrap();
    let after: f64 = value(&r, "after").parse().unwrap();
    assert!((before - 0.1).abs() < 1e-9);
    assert!((after - 0.056).abs() < 1e-3);
    assert_eq!(value(&r, "result"), "PASS");
}

#[test]
fn shadow_orbit_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("orbit.csv");
    let o = invcurve(&[
        "verify-shadow", "--map", "builtin:PERT", "--x", "0.01", "--xhat", "0.01", "--y", "0",
        "--yhat", "5e-23", "--steps", "50", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("step,x,xhat,metric\n"));
    assert_eq!(csv.lines().count(), 52);
    assert_eq!(value(&stdout(&o), "orbit_non_increasing"), "true");
}

#[test]
fn parameterization_csv_and_report() {
    let o = invcurve(&["manifold-param", "--map", "builtin:PERT(c=0.1)"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.starts_with("k,phi_k\n"));
    let phi3: f64 = csv.lines().nth(4).unwrap().split_once(',').unwrap().1.parse().unwrap();
    assert!((phi3 - 0.05).abs() < 1e-12);
    let rep = String::from_utf8_lossy(&o.stderr);
    assert!(rep.contains("d = "));
    assert!(rep.contains("K1_3 = "));
}

#[test]
fn repulsion_trace() {
    let o = invcurve(&["repulsion", "--map", "builtin:PERT", "--x0", "0.02", "--offset", "1e-9"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("step,x,y,deviation\n"));
    assert_eq!(stdout(&o).lines().count(), 22);
}

#[test]
fn map_file_and_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("mix.map");
    std::fs::write(
        &map,
        "# mixed cubic/quartic terms\nX 1 0 1\nX 2 0 1\nX 1 1 0.5\nX 3 0 0.3\nX 2 1 -0.2\n\n\
         Y 0 1 -1\nY 1 1 2\nY 3 0 0.4\nY 4 0 -0.7\nY 1 2 0.25\n",
    )
    .unwrap();
    let m = map.to_str().unwrap();
    let curve = dir.path().join("curve.csv");
    let o = invcurve(&["manifold-gt", "--map", m, "--out", curve.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = invcurve(&["verify-invariance", "--map", m, "--curve", curve.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(value(&stdout(&o), "result"), "PASS");
}

#[test]
fn normalize_lists_gammas_and_table() {
    let o = invcurve(&["normalize", "--map", "builtin:PERT(c=0.1)", "--order", "4"]);
    assert!(o.status.success());
    let r = stdout(&o);
    let g3: f64 = value(&r, "gamma_3").parse().unwrap();
    assert_eq!(g3, -0.05);
    assert!(r.contains("\nY 0 1 -1.0000000000000000e0\n"));
}

#[test]
fn output_is_deterministic() {
    let a = invcurve(&["manifold-gt", "--map", "builtin:PERT(c=0.4)"]);
    let b = invcurve(&["manifold-gt", "--map", "builtin:PERT(c=0.4)"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["frobnicate"],
        vec!["compare", "--map", "builtin:CANON", "--nope"],
        vec!["compare", "--map", "builtin:CANON(lambda=0)"],
        vec!["compare", "--map", "builtin:HENON"],
    ] {
        let o = invcurve(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn module_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.map");
    std::fs::write(&bad, "X 1 0 1\nX 2 0 1\nY 0 1 -1\nY 1 1 1\nY 2 0 0.3\n").unwrap();
    let o = invcurve(&["manifold-param", "--map", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mapdef:"));
    let o = invcurve(&["manifold-gt", "--map", "/nonexistent/file.map"]);
    assert_eq!(o.status.code(), Some(1));
    // hypothesis |y| ≤ x^N violated
    let o = invcurve(&[
        "verify-shadow", "--map", "builtin:CANON", "--x", "0.1", "--xhat", "0.1", "--y", "0.1",
        "--yhat", "0.1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("shadowing:"));
}
