use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frozen_sl::io::{read_potential, read_spectrum, write_potential};
use frozen_sl::{Complex64 as C, Potential};

fn bin(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_frozen-sl"));
    cmd.args(args);
    for (flag, path) in paths {
        cmd.arg(flag).arg(path);
    }
    cmd.output().expect("binary runs")
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("config.json"), config).unwrap();
        let q = Potential::from_fn(400, |x| C::new(5.0 * x.sin(), 0.0));
        write_potential(&dir.path().join("q.csv"), &q).unwrap();
        Workspace { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

const HALF: &str = r#"{"a": {"pi_rational": [1, 2]}, "alpha": 0, "beta": 0, "N": 40, "M": 400}"#;

#[test]
fn help_and_version_exit_zero() {
    assert!(bin(&["--help"], &[]).status.success());
    assert!(bin(&["--version"], &[]).status.success());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(bin(&["transmogrify"], &[]).status.code(), Some(1));
}

#[test]
fn forward_writes_the_spectrum() {
    let ws = Workspace::new(HALF);
    let out = ws.path("spectrum.csv");
    let res = bin(
        &["forward"],
        &[
            ("--config", &ws.path("config.json")),
            ("--potential", &ws.path("q.csv")),
            ("--out", &out),
        ],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let s = read_spectrum(&out).unwrap();
    assert_eq!(s.len(), 40);
    assert!((s.lambda(1) - C::new(6.0, 0.0)).norm() < 1e-3);
    assert!((s.rho(2) - C::new(2.0, 0.0)).norm() < 1e-8);
}

#[test]
fn roundtrip_reports_a_small_error() {
    let ws = Workspace::new(HALF);
    let back = ws.path("back.csv");
    let res = bin(
        &["roundtrip"],
        &[
            ("--config", &ws.path("config.json")),
            ("--potential", &ws.path("q.csv")),
            ("--out", &back),
        ],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let stdout = String::from_utf8(res.stdout).unwrap();
    let err: f64 = stdout
        .trim()
        .strip_prefix("relative L2 error: ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-3, "{err}");
    assert_eq!(read_potential(&back).unwrap().grid_size(), 400);
}

#[test]
fn inverse_reads_mixed_spectral_data() {
    let ws = Workspace::new(HALF);
    let mut rows = String::from("n,kind,re,im\n");
    for n in 1..=40usize {
        if n % 2 == 0 {
            rows.push_str(&format!("{n},xi,0,0\n"));
        } else {
            let lambda = if n == 1 { 6.0 } else { (n * n) as f64 };
            rows.push_str(&format!("{n},lambda,{lambda},0\n"));
        }
    }
    fs::write(ws.path("data.csv"), rows).unwrap();
    let out = ws.path("q_back.csv");
    let res = bin(
        &["inverse"],
        &[
            ("--config", &ws.path("config.json")),
            ("--input", &ws.path("data.csv")),
            ("--out", &out),
        ],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let q = read_potential(&out).unwrap();
    let mid = q.samples()[200];
    assert!((mid - C::new(5.0, 0.0)).norm() < 1e-2, "{mid}");
}

#[test]
fn charfn_and_oracle_run() {
    let ws = Workspace::new(HALF);
    let values = ws.path("delta.csv");
    let res = bin(
        &["charfn", "--re", "0:10:11", "--im", "-1:1:3"],
        &[
            ("--config", &ws.path("config.json")),
            ("--potential", &ws.path("q.csv")),
            ("--out", &values),
        ],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert_eq!(fs::read_to_string(&values).unwrap().lines().count(), 34);

    let oracle = ws.path("oracle.csv");
    let res = bin(
        &["oracle", "--count", "4"],
        &[
            ("--config", &ws.path("config.json")),
            ("--potential", &ws.path("q.csv")),
            ("--out", &oracle),
        ],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let s = read_spectrum(&oracle).unwrap();
    assert!((s.lambda(1) - C::new(6.0, 0.0)).norm() < 1e-2);
    assert!((s.lambda(4) - C::new(16.0, 0.0)).norm() < 1e-2);
}

#[test]
fn charfn_needs_a_source() {
    let ws = Workspace::new(HALF);
    let res = bin(
        &["charfn", "--re", "0:1:2"],
        &[
            ("--config", &ws.path("config.json")),
            ("--out", &ws.path("x.csv")),
        ],
    );
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn bad_config_exits_one() {
    let ws = Workspace::new(r#"{"a": {"pi_rational": [1, 2]}, "alpha": 3, "beta": 0}"#);
    let res = bin(
        &["forward"],
        &[
            ("--config", &ws.path("config.json")),
            ("--potential", &ws.path("q.csv")),
            ("--out", &ws.path("s.csv")),
        ],
    );
    assert_eq!(res.status.code(), Some(1));
    assert!(!res.stderr.is_empty());
}

#[test]
fn stability_writes_rows_and_summary() {
    let ws = Workspace::new(HALF);
    let out = ws.path("stab");
    let res = bin(
        &[
            "stability",
            "--r",
            "25",
            "--trials",
            "3",
            "--seed",
            "1",
            "--magnitude",
            "0.01",
        ],
        &[("--config", &ws.path("config.json")), ("--out-dir", &out)],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["trials"], 3);
    assert!(summary["C_r_empirical"].as_f64().unwrap().is_finite());
    assert_eq!(
        fs::read_to_string(out.join("stability.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );
}
