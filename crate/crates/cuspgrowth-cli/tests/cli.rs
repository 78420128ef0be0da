use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspgrowth")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn example_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["example-run", "--name", "exotic-div-5.3b", "--b", "3", "--Rmax", "60", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let claims = fs::read_to_string(dir.path().join("claims.csv")).unwrap();
    assert!(claims.starts_with("example,claim,expected,observed,pass\n"));
    assert!(claims.contains("exotic-div-5.3b,bm_finite,true,true,true"));
    assert!(claims.contains("v_X_class,purely,purely,true"));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().skip(1).all(|l| l.split(',').nth(1) == Some("true")));
    assert!(fs::read_to_string(dir.path().join("report.txt")).unwrap().contains("[claims]"));
}

#[test]
fn oracle_outputs_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = cli(&["oracle-verify", "--Rcap", "10", "--delta", "1", "--seed", "7", "--samples", "2000", "--out", &out_arg(d.path())]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    for f in ["counts.csv", "constants.csv", "summary.csv", "v_gamma.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
    let counts = fs::read_to_string(a.path().join("counts.csv")).unwrap();
    assert!(counts.lines().nth(2).unwrap().starts_with("2,5,"));
}

#[test]
fn tight_tolerance_fails_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let tol = dir.path().join("tol.toml");
    fs::write(&tol, "delta_tol = 1e-6\n").unwrap();
    let o = cli(&[
        "oracle-verify", "--Rcap", "9", "--samples", "500", "--tolerances", tol.to_str().unwrap(), "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL critical_exponent"));
}

#[test]
fn config_errors_give_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    let o = cli(&["run", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("command"));

    let out = out_arg(dir.path());
    assert_eq!(code(&cli(&["example-run", "--name", "no-such-example", "--out", &out])), 2);
    assert_eq!(code(&cli(&["example-run", "--out", &out])), 2);
    assert_eq!(code(&cli(&["oracle-verify", "--Rcap", "15", "--out", &out])), 2);
    assert_eq!(code(&cli(&["cusp-analyze", "--profile", "/no/such/file.toml", "--out", &out])), 2);
    assert_eq!(code(&cli(&["fly"])), 2);

    let bad_tol = dir.path().join("bad.toml");
    fs::write(&bad_tol, "tau = 3\n").unwrap();
    assert_eq!(code(&cli(&["oracle-verify", "--tolerances", bad_tol.to_str().unwrap(), "--out", &out])), 2);
}

#[test]
fn config_file_runs_a_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        format!(
            "command = \"example-run\"\noutput_dir = \"{}\"\nseed = 1\n[inputs]\nname = \"exotic-div-5.3b\"\nRmax = 60\ngnuplot = true\n",
            out.display()
        ),
    )
    .unwrap();
    let o = cli(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let gp = fs::read_to_string(out.join("plot.gp")).unwrap();
    assert!(gp.contains("'vx_series.csv' using 1:2"));
}

#[test]
fn profiles_validate_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = cli(&["profile-validate", "--name", "critical-infinite-5.4b", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(dir.path().join("validation.csv")).unwrap();
    assert!(csv.contains("critical-infinite-5.4b#1,"));

    // a written profile reads back
    let p = dir.path().join("profile_0.toml");
    let o = cli(&["cusp-analyze", "--profile", p.to_str().unwrap(), "--Rmax", "200", "--delta", "1.5", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("linear series at s = 1.5"));
    assert!(dir.path().join("cusp0_cuspidal.csv").exists());
}

#[test]
fn lattice_classification() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let lat = dir.path().join("lattice.toml");
    fs::write(
        &lat,
        "delta = 1.0\nfactor = { constant = 1.0 }\n[bounds]\na = 1\nb = 1\n[[cusps]]\nhyperbolic = true\n[[cusps]]\nhyperbolic = true\n",
    )
    .unwrap();
    let o = cli(&["lattice-classify", "--lattice", lat.to_str().unwrap(), "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("sparse = false  exotic = false"));
    assert!(report.contains("bm_finite = true"));

    // a dominant cusp must have δ⁺ = δ
    fs::write(
        &lat,
        "delta = 2.0\nfactor = { constant = 1.0 }\n[bounds]\na = 1\nb = 1\n[[cusps]]\nhyperbolic = true\ndominant = true\n",
    )
    .unwrap();
    assert_eq!(code(&cli(&["lattice-classify", "--lattice", lat.to_str().unwrap(), "--out", &out])), 2);
}
