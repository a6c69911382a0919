use std::path::PathBuf;
use std::process::{Command, Output};

use gepi_core::io::load_basis;
use gepi_core::solver::gepi_basis;
use gepi_core::{HalfInt, Kind, LVector};

fn gepi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gepi")).args(args).output().expect("gepi runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("gepi-cli-{}-{name}", std::process::id()))
}

#[test]
fn dim_matches_known_values() {
    let o = gepi(&["dim", "--l", "1,1,1,1", "--L", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "3");
    let o = gepi(&["dim", "--l", "1x4", "--L", "0", "--kind", "gepi"]);
    assert_eq!(stdout(&o).trim(), "1");
    let o = gepi(&["dim", "--l", "1x8", "--L", "0", "--method", "explicit"]);
    assert_eq!(stdout(&o).trim(), "91");
    let o = gepi(&["dim", "--l", "1x8", "--L", "0", "--method", "recursive"]);
    assert_eq!(stdout(&o).trim(), "91");
}

#[test]
fn dim_accepts_doubled_spins() {
    let o = gepi(&["dim", "--l", "1,1,1", "--L", "1", "--two"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "2");
    let o = gepi(&["dim", "--l", "1/2,1/2", "--L", "0"]);
    assert_eq!(stdout(&o).trim(), "1");
}

#[test]
fn parity_mismatch_is_empty_but_successful() {
    let o = gepi(&["dim", "--l", "1,1", "--L", "1", "--group", "o3", "--parity", "-"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0");
    assert!(String::from_utf8_lossy(&o.stderr).contains("note:"));
}

#[test]
fn json_report_has_fields() {
    let o = gepi(&["dim", "--l", "2x3", "--L", "2", "--json", "--method", "asymptotic"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dim"], "5");
    assert!(v["estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(gepi(&["dim", "--l", "1,x", "--L", "0"]).status.code(), Some(1));
    assert_eq!(gepi(&["dim", "--l", "1/2", "--L", "1/2", "--group", "so3"]).status.code(), Some(1));
    assert_eq!(gepi(&["dim", "--l", "1"]).status.code(), Some(1));
    assert_eq!(gepi(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gepi(&["--help"]).status.code(), Some(0));
}

#[test]
fn gen_round_trips_through_both_formats() {
    let lvec = LVector::homogeneous(HalfInt::ONE, 3);
    let direct = gepi_basis(&lvec, HalfInt::ONE).unwrap();
    for (format, name) in [("json", "b.json"), ("bin", "b.bin")] {
        let path = temp_path(name);
        let o = gepi(&[
            "gen",
            "--l",
            "1,1,1",
            "--L",
            "1",
            "--kind",
            "gepi",
            "--format",
            format,
            "--out",
            path.to_str().unwrap(),
            "--verify",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let loaded = load_basis(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(loaded.kind, Kind::Gepi);
        assert_eq!(loaded.support, direct.support);
        assert_eq!(loaded.vectors, direct.vectors);
    }
}

#[test]
fn gen_recursive_writes_verified_basis() {
    let path = temp_path("rec.json");
    let o = gepi(&["gen", "--l", "1,1,2,2", "--L", "2", "--method", "recursive", "--out", path.to_str().unwrap(), "--verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b = load_basis(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(b.dim(), 9);
}

#[test]
fn empty_basis_warns() {
    let path = temp_path("empty.json");
    let o = gepi(&["gen", "--l", "1,1", "--L", "3", "--out", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: empty basis"));
}

#[test]
fn table_markdown_and_csv() {
    let o = gepi(&["table", "--l-values", "1", "--n-max", "3", "--n-values", "3", "--ell-max", "1", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("L/N,1 GE-PI,1 GE,2 GE-PI,2 GE,3 GE-PI,3 GE"));
    assert!(text.contains("\n0,0,0,1,1,0,1\n"));
    let o = gepi(&["table", "--l-values", "2", "--n-max", "2", "--n-values", "3", "--ell-max", "1", "--format", "markdown"]);
    assert!(stdout(&o).contains('|'));
}

#[test]
fn bench_single_job_csv() {
    let o = gepi(&["bench", "--l", "2x3", "--L", "0,2", "--threads", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("lvec,L,kind,n_classes,n_basis"));
    assert_eq!(lines.count(), 2);
}
