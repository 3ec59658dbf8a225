use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vibq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vibq"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn error_of(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.trim()).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cases: [&[&str]; 4] = [
        &["resources", "--classes", "vib2-d4,vib3-d4,fermion", "--qubits", "24"],
        &["spectrum", "--molecule", "coh", "--d", "4"],
        &["trotter", "--molecule", "fermi_resonance", "--mode", "imag", "--steps", "1e-5:1e-3:3"],
        &["qpe", "--molecule", "co", "--d", "8", "--kernel", "exact"],
    ];
    for args in cases {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert!(vibq(a.path(), args).status.success(), "{args:?}");
        let threads = Command::new(env!("CARGO_BIN_EXE_vibq"))
            .args(args)
            .arg("--out-dir")
            .arg(b.path())
            .env("VIBQ_THREADS", "1")
            .output()
            .unwrap();
        assert!(threads.status.success());
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            let name = name.to_str().unwrap();
            if name == "manifest.json" {
                continue;
            }
            assert_eq!(read(a.path(), name), read(b.path(), name), "{args:?} {name}");
        }
    }
}

#[test]
fn census_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibq(dir.path(), &["resources", "--classes", "vib2-d4,fermion", "--qubits", "24", "--bruteforce-max", "6"]);
    assert!(out.status.success());
    let csv = read(dir.path(), "resources.csv");
    let rows: Vec<&str> = csv.lines().collect();
    assert!(rows[0].starts_with("class,n_qubits,units,terms,"));
    assert!(rows[1].starts_with("vib2-d4,24,12,3277,"));
    assert!(rows[2].starts_with("fermion,24,12,29737,"));
    let manifest: Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "resources");
}

#[test]
fn empty_class_list_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibq(dir.path(), &["resources", "--classes", "", "--qubits", "24"]);
    assert!(out.status.success());
    assert_eq!(read(dir.path(), "resources.csv").lines().count(), 1);
}

#[test]
fn harmonic_co_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibq(dir.path(), &["spectrum", "--molecule", "co", "--d", "8", "--harmonic-only"]);
    assert!(out.status.success());
    let csv = read(dir.path(), "peaks.csv");
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("2157.960000,"), "{first}");
}

#[test]
fn imaginary_ground_error_shrinks_with_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibq(
        dir.path(),
        &["trotter", "--molecule", "co", "--d", "8", "--mode", "imag", "--steps", "1e-6:1e-3:4", "--states", "0"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let errs: Vec<f64> = read(dir.path(), "trotter.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errs.len(), 4);
    assert!(errs.windows(2).all(|w| w[0] < w[1]), "{errs:?}");
}

#[test]
fn transition_protocols_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibq(dir.path(), &["transition", "--molecule", "coh", "--protocol", "ibe", "--from", "0", "--to", "2"]);
    assert!(out.status.success());
    let csv = read(dir.path(), "transition.csv");
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let (value, direct): (f64, f64) = (row[4].parse().unwrap(), row[5].parse().unwrap());
    assert!((value - direct).abs() < 1e-9);
}

#[test]
fn force_field_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(vibq(dir.path(), &["force-field", "--molecule", "coh"]).status.success());
    let path = dir.path().join("coh.ff");
    let again = tempfile::tempdir().unwrap();
    let out = vibq(again.path(), &["force-field", "--ff", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(read(dir.path(), "coh.ff"), read(again.path(), "force_field.ff"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let usage = vibq(dir.path(), &["spectrum", "--molecule", "h2o"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_of(&usage)["error"]["exit_code"], 2);

    let flags = vibq(dir.path(), &["spectrum", "--no-such-flag"]);
    assert_eq!(flags.status.code(), Some(2));
    assert_eq!(error_of(&flags)["error"]["kind"], "usage");

    let numeric = vibq(dir.path(), &["qpe", "--molecule", "co", "--gamma", "1e-25"]);
    assert_eq!(numeric.status.code(), Some(3));
    assert_eq!(error_of(&numeric)["error"]["kind"], "low_success_probability");

    let protocol = vibq(dir.path(), &["transition", "--molecule", "coh", "--protocol", "ibe", "--from", "1", "--to", "1"]);
    assert_eq!(protocol.status.code(), Some(4));

    let help = Command::new(env!("CARGO_BIN_EXE_vibq")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}
