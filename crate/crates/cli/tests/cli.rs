//! End-to-end checks of the command-line surface: exit codes, CSV
//! schemas, and seed-determinism of the outputs.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_osclab"))
}

#[test]
fn verify_passes_and_reports_suites() {
    let out = bin().args(["verify", "--n", "2", "--seed", "7"]).output().unwrap();
    assert!(out.status.success(), "verify failed: {:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    for module in ["group", "pv", "rep", "decomp", "oscillator"] {
        assert!(text.contains(module), "summary missing {module}: {text}");
    }
    assert!(text.contains("0 failed"));
}

#[test]
fn invalid_flags_exit_with_usage() {
    let out = bin().args(["verify", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fubini_csv_is_deterministic() {
    let dir = std::env::temp_dir();
    let a = dir.join("osclab_fubini_a.csv");
    let b = dir.join("osclab_fubini_b.csv");
    for path in [&a, &b] {
        let out = bin()
            .args([
                "fubini",
                "--family",
                "gaussians",
                "--count",
                "3",
                "--seed",
                "11",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let ca = std::fs::read(&a).unwrap();
    let cb = std::fs::read(&b).unwrap();
    assert_eq!(ca, cb, "identical config and seed must give identical bytes");
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("index,defect,error_estimate\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn norm_sweep_csv_schema() {
    let path = std::env::temp_dir().join("osclab_sweep.csv");
    let out = bin()
        .args([
            "norm-sweep",
            "--n",
            "2",
            "--gamma",
            "1",
            "--poly",
            "0,0,1",
            "--R",
            "4,8",
            "--step",
            "0.5",
            "--out",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(Path::new(&path)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("R,box,step,norm,iterations,residual"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row.split(',').count(), 6);
        // every float field uses 9 significant digits
        let first = row.split(',').next().unwrap();
        assert!(first.contains('e'), "scientific notation expected: {first}");
    }
}

#[test]
fn fubini_rejects_unknown_family() {
    let out = bin().args(["fubini", "--family", "cauchy"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
