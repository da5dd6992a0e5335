use std::path::Path;
use std::process::{Command, Output};

fn dualcm(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dualcm"));
    cmd.args(args).arg("--out").arg(out).arg("--quiet");
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn read_u(path: &Path) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let col = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == "u")
        .unwrap();
    rdr.records()
        .map(|r| r.unwrap()[col].parse().unwrap())
        .collect()
}

#[test]
fn solve_constant_phi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "subcommand = solve\nproblem.n = 3\nproblem.P = 2\nproblem.k = 2\nproblem.l = 0\n\
         problem.p = 4\nproblem.q = 1\nphi.kind = constant\nphi.value = 12\n\
         grid.backend = axisym\ngrid.resolution = 33\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = dualcm(&[], Some(&cfg), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let u = read_u(&out.join("solution.csv"));
    assert_eq!(u.len(), 33);
    assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-8));
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,iters,res_inf,min_margin,min_eig_a\n"));
    let effective = std::fs::read_to_string(out.join("effective_config.txt")).unwrap();
    assert!(effective.contains("case = nonhomogeneous"));
    assert!(effective.contains("solver.tol = 1e-10"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "phi.kind = axisym_power\nphi.delta = 0.1\nphi.base = 12\nproperties.trials = 100\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(dualcm(&["solve"], Some(&cfg), out).status.success());
        let props = out.join("props");
        let o = dualcm(&["verify-properties", "--seed", "3"], Some(&cfg), &props);
        assert!(o.status.success());
    }
    for file in ["solution.csv", "trace.csv", "props/properties.csv"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn verify_properties_seed_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = dualcm(&["verify-properties", "--seed", "1"], None, dir.path());
    assert!(o.status.success());
    let table = std::fs::read_to_string(dir.path().join("properties.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 5 * 15);
}

#[test]
fn invalid_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "problem.k = 4\n").unwrap();
    let o = dualcm(&["solve"], Some(&cfg), &dir.path().join("out"));
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("problem"), "{err}");
}

#[test]
fn check_phi_and_homogeneous() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.cfg");
    std::fs::write(
        &cfg,
        "problem.p = 3\nproblem.q = 3\nphi.kind = axisym_power\nphi.delta = 0.0005\nphi.base = 12\n\
         solver.eps_list = 0.1, 0.05, 0.02\n",
    )
    .unwrap();
    assert!(dualcm(&["check-phi"], Some(&cfg), &dir.path().join("c"))
        .status
        .success());
    let out = dir.path().join("h");
    let o = dualcm(&["homogeneous"], Some(&cfg), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("eps.csv").exists());
    let bad = dualcm(&["solve"], Some(&cfg), &dir.path().join("s"));
    assert!(!bad.status.success());
}
