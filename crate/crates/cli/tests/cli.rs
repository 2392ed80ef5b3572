use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mbp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let sim = mbp(
        &[
            "simulate",
            "--n-dims",
            "3",
            "--lags",
            "2",
            "--sparsity",
            "3",
            "--theta-out",
            "theta.txt",
            "-n",
            "1500",
            "--seed",
            "9",
            "--out",
            "path.txt",
        ],
        dir.path(),
    );
    assert!(
        sim.status.success(),
        "{}",
        String::from_utf8_lossy(&sim.stderr)
    );
    assert!(dir.path().join("theta.txt").exists());

    let fit = mbp(
        &["fit", "--path", "path.txt", "--out", "hat.txt"],
        dir.path(),
    );
    assert_eq!(
        fit.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&fit.stderr)
    );
    assert!(String::from_utf8_lossy(&fit.stdout).contains("converged=true"));

    // one iteration cannot meet the stopping rule
    let short = mbp(
        &[
            "fit",
            "--path",
            "path.txt",
            "--lambda",
            "0.001",
            "--max-iters",
            "1",
            "--out",
            "h2.txt",
        ],
        dir.path(),
    );
    assert_eq!(short.status.code(), Some(2));
    assert!(dir.path().join("h2.txt").exists());
}

#[test]
fn diagnose_single_checks() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("theta.txt"), "1 1 2\n0.5 -0.3\n").unwrap();
    let out = mbp(
        &[
            "diagnose",
            "--theta",
            "theta.txt",
            "--check",
            "gf-bound",
            "--out",
            "gf.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("gf.csv")).unwrap();
    assert!(text.starts_with("instance,tau1_p_step,g_f,holds\n"));
    assert!(text.trim_end().ends_with("true"));

    let out = mbp(
        &[
            "diagnose",
            "--theta",
            "theta.txt",
            "--check",
            "kl-decomp",
            "--out",
            "kl.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("kl.csv"))
            .unwrap()
            .lines()
            .count(),
        17
    );

    let out = mbp(
        &[
            "diagnose",
            "--check",
            "decay-table",
            "--family",
            "constant",
            "--n-dims",
            "2",
            "--out",
            "d.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let d = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert!(d.starts_with("p,inner_norm,g_f,G_f,diverged\n"));
    assert_eq!(d.lines().count(), 5);

    let bad = mbp(
        &[
            "diagnose",
            "--theta",
            "theta.txt",
            "--check",
            "bogus",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert!(!bad.status.success());
}

#[test]
fn experiment_from_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.cfg"),
        "experiment = grid\nN = 3\np = 1\nsweep.s_values = 1, 3\nsweep.n_values = 200, 400\n\
         replicates = 2\nsim.burn_in = 50\noutput_dir = out\n",
    )
    .unwrap();
    let out = mbp(&["experiment", "--config", "exp.cfg"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = fs::read_to_string(dir.path().join("out/grid_records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 4 * 2);
    assert!(dir.path().join("out/grid_matrix.csv").exists());
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.cfg"),
        "experiment = error_vs_n\nN = 3\np = 1\nsweep.s_values = 50\nsweep.n_values = 100\n",
    )
    .unwrap();
    let out = mbp(&["experiment", "--config", "bad.cfg"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.s_values"));
}

#[test]
fn empty_diagnose_writes_header() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("d.cfg"),
        "experiment = diagnose\nN = 1\np = 1\ndiagnose.checks =\n",
    )
    .unwrap();
    let out = mbp(
        &["experiment", "--config", "d.cfg", "--output-dir", "o"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("o/diagnose_summary.csv")).unwrap(),
        "check,items,passed,ok,detail\n"
    );
}
