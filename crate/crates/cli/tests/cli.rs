use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const DECAY: &str = "\
[system]
initialState = excited_vacuum
feedback = false

[grid]
dt = 0.01
horizon = 2
";

fn wqed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wqed"))
        .args(args)
        .current_dir(dir)
        .env_remove("WQED_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn setup(name: &str, text: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(name), text).unwrap();
    dir
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV file: everything after the meta line and the header.
fn rows(text: &str) -> Vec<&str> {
    text.lines().skip(2).collect()
}

fn meta<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    let line = text.lines().next()?.strip_prefix("# meta: ")?;
    line.split(' ').find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

#[test]
fn run_writes_one_row_per_step() {
    let dir = setup("decay.conf", DECAY);
    let o = wqed(dir.path(), &["run", "decay.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# meta: tool=wqed "));
    assert_eq!(lines.next(), Some("t,population"));
    assert_eq!(rows(&csv).len(), 201);
    assert_eq!(rows(&csv)[0], "0,1");
    assert_eq!(meta(&csv, "dt"), Some("0.01"));
    assert_eq!(meta(&csv, "nSteps"), Some("200"));
    assert_eq!(meta(&csv, "source"), Some("hierarchy"));
    assert!(meta(&csv, "storeBytes").is_some());
    assert!(!csv.contains('\r'));
    let last: f64 = rows(&csv)[200].split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - (-4.0f64).exp()).abs() < 1e-6);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = setup("decay.conf", &format!("{DECAY}\n[output]\nformat = both\n"));
    assert!(wqed(dir.path(), &["run", "decay.conf"]).status.success());
    let first = (fs::read(dir.path().join("decay.csv")).unwrap(), fs::read(dir.path().join("decay.json")).unwrap());
    assert!(wqed(dir.path(), &["--threads", "1", "run", "decay.conf"]).status.success());
    let second = (fs::read(dir.path().join("decay.csv")).unwrap(), fs::read(dir.path().join("decay.json")).unwrap());
    assert_eq!(first, second);

    let json: serde_json::Value = serde_json::from_slice(&first.1).unwrap();
    assert_eq!(json["population"].as_array().unwrap().len(), 201);
    assert_eq!(json["meta"]["nSteps"], "200");
}

#[test]
fn too_many_photons_is_rejected_with_its_line() {
    let dir = setup("bad.conf", "[system]\nnPhotons = 4\ntau = 1\n\n[pulse]\nkind = rectangular\ntD = 1\n\n[grid]\ndt = 0.01\nhorizon = 1\n");
    let o = wqed(dir.path(), &["run", "bad.conf"]);
    assert!(!o.status.success());
    let e = stderr(&o);
    assert!(e.contains("line 2: system.nPhotons"), "{e}");
    assert!(e.contains("unsupported excitation number"), "{e}");
    assert!(!dir.path().join("bad.csv").exists());
}

#[test]
fn unknown_keys_are_all_reported() {
    let dir = setup("bad.conf", "[system]\nGama = 1\n\n[grid]\ndt = 0.01\nhorizon = 1\nhorizn = 2\n");
    let e = stderr(&wqed(dir.path(), &["run", "bad.conf"]));
    assert!(e.contains("line 2: system.Gama"), "{e}");
    assert!(e.contains("line 7: grid.horizn"), "{e}");
}

#[test]
fn adjusted_step_is_announced_and_recorded() {
    let text = "[system]\ninitialState = excited_vacuum\ntau = 2.0\n\n[grid]\ndt = 0.013\nhorizon = 4\n";
    let dir = setup("adj.conf", text);
    let o = wqed(dir.path(), &["run", "adj.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e = stderr(&o);
    assert!(e.contains("warning: grid.dt = 0.013 adjusted to"), "{e}");
    let csv = fs::read_to_string(dir.path().join("adj.csv")).unwrap();
    assert_eq!(meta(&csv, "requestedDt"), Some("0.013"));
    assert_eq!(meta(&csv, "dtAdjusted"), Some("true"));
    let dt: f64 = meta(&csv, "dt").unwrap().parse().unwrap();
    let k: f64 = meta(&csv, "kHalfTau").unwrap().parse().unwrap();
    // dt is printed to 12 significant digits
    assert!((2.0 * k * dt - 2.0).abs() < 1e-9);
}

#[test]
fn output_directory_override() {
    let dir = setup("decay.conf", DECAY);
    let out = dir.path().join("elsewhere");
    let o = Command::new(env!("CARGO_BIN_EXE_wqed")).args(["run", "decay.conf"]).current_dir(dir.path()).env("WQED_OUTPUT_DIR", &out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("decay.csv").exists());
    assert!(!dir.path().join("decay.csv").exists());
}

#[test]
fn sweep_writes_one_row_per_cell() {
    // coarse steps keep the 256 cells cheap
    let text = "\
[system]
nPhotons = 2

[sweep]
family = rectangular
widths = log(0.5, 1, 16)
taus = log(0.2, 1, 16)
dtMax = 0.05
pointsPerTau = 2
settle = 4
";
    let dir = setup("map.conf", text);
    let o = wqed(dir.path(), &["sweep", "map.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("map.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("width,tau,steady_state,converged"));
    let data = rows(&csv);
    assert_eq!(data.len(), 256);
    for r in &data {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f.len(), 4);
        let s: f64 = f[2].parse().unwrap();
        assert!((-1e-6..=1.0 + 1e-6).contains(&s));
        assert!(f[3] == "true" || f[3] == "false");
    }
    assert_eq!(meta(&csv, "nWidths"), Some("16"));
    assert_eq!(meta(&csv, "onset"), Some("arrival"));
}

#[test]
fn benchmark_reports_discrepancies() {
    let text = "\
[system]
nPhotons = 1
tau = 1

[pulse]
kind = rectangular
tD = 1

[grid]
dt = 0.025
horizon = 4

[oracle]
binDt = 0.05
";
    let dir = setup("bench.conf", text);
    let o = wqed(dir.path(), &["benchmark", "bench.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for part in ["hierarchy", "oracle", "markov"] {
        let csv = fs::read_to_string(dir.path().join(format!("bench_{part}.csv"))).unwrap();
        assert_eq!(meta(&csv, "source"), Some(part));
        let rel: f64 = meta(&csv, "supNormOverPeak").unwrap().parse().unwrap();
        assert!(rel < 0.05, "{rel}");
        assert!(meta(&csv, "l2Norm").is_some());
    }
}

#[test]
fn oracle_compare_against_closed_form() {
    let dir = setup("decay.conf", DECAY);
    let o = wqed(dir.path(), &["oracle-compare", "decay.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("decay_reference.csv")).unwrap();
    assert_eq!(meta(&csv, "reference"), Some("ww_decay"));
    let sup: f64 = meta(&csv, "supNorm").unwrap().parse().unwrap();
    assert!(sup < 1e-4);
}
