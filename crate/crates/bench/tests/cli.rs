use std::fs;
use std::process::{Command, Output};

fn unifilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unifilter"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    fs::write(
        &cfg,
        "# small run\nT = 100\nd = 3\nseeds = 0..1\nalgorithm = adaptive\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = unifilter(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--T",
        "64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("64")));
    assert!(out.join("trace_seed_1.csv").exists());
}

#[test]
fn every_subcommand_writes_its_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for (cmd, file) in [("curve", "curve.csv"), ("scan", "scan.csv"), ("oracle", "oracle.csv")] {
        let o = unifilter(&[cmd, "--T", "512", "--seeds", "0..2", "--out", out]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(file).exists(), "{file}");
    }
    assert!(dir.path().join("curve_fit.csv").exists());
}

#[test]
fn exit_codes() {
    assert_eq!(unifilter(&["--help"]).status.code(), Some(0));
    assert_eq!(unifilter(&["--version"]).status.code(), Some(0));
    assert_eq!(unifilter(&[]).status.code(), Some(1));
    assert_eq!(unifilter(&["launch"]).status.code(), Some(1));
    assert_eq!(unifilter(&["run", "--d", "x"]).status.code(), Some(1));
    assert_eq!(unifilter(&["run", "--signal", "chirp"]).status.code(), Some(1));
    assert_eq!(unifilter(&["verify", "everything"]).status.code(), Some(1));
    let ok = unifilter(&["verify", "gradcheck", "--quick"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("gradcheck,max_relative_gradient_error"));
    // lying about the noise variance must be caught
    assert_eq!(
        unifilter(&["verify", "covariance", "--quick", "--sigma2", "0.9"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn invalid_field_is_named() {
    let o = unifilter(&["run", "--bound_x", "-2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bound_x"));
}
