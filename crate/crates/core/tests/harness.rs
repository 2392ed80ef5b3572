use std::fs;
use std::path::Path;

use mbp_core::estimator::{lambda_policy, LambdaMode};
use mbp_core::harness::{run_diagnose, run_sweep, DiagnoseCheck, ExperimentConfig, ExperimentKind};
use mbp_core::likelihood::grad_nll;
use mbp_core::{simulate, NormKind, ParamTensor};

fn config(kind: ExperimentKind, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind, 4, 2);
    cfg.s_values = vec![3];
    cfg.n_values = vec![300, 600];
    cfg.replicates = 2;
    cfg.burn_in = 100;
    cfg.master_seed = 11;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn identical_runs_write_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut ca = config(ExperimentKind::ErrorVsN, a.path());
    ca.replicates = 1;
    let mut cb = ca.clone();
    cb.output_dir = b.path().to_path_buf();
    run_sweep(&ca).unwrap();
    run_sweep(&cb).unwrap();
    for f in ["error_vs_n_records.csv", "error_vs_n_summary.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ca = config(ExperimentKind::Grid, a.path());
    let mut cb = ca.clone();
    cb.output_dir = b.path().to_path_buf();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    one.install(|| run_sweep(&ca)).unwrap();
    four.install(|| run_sweep(&cb)).unwrap();
    for f in ["grid_records.csv", "grid_summary.csv", "grid_matrix.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn grid_row_matches_error_vs_n() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut grid = config(ExperimentKind::Grid, a.path());
    grid.s_values = vec![1, 3];
    let g = run_sweep(&grid).unwrap();
    let single = run_sweep(&config(ExperimentKind::ErrorVsN, b.path())).unwrap();
    let row: Vec<f64> = g
        .summaries
        .iter()
        .filter(|s| s.s == 3)
        .map(|s| s.mean_frob_error)
        .collect();
    let col: Vec<f64> = single.summaries.iter().map(|s| s.mean_frob_error).collect();
    assert_eq!(row, col);
    assert_eq!(g.records.len(), 4 * grid.replicates);
}

#[test]
fn records_carry_policy_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(ExperimentKind::ErrorVsN, dir.path());
    let out = run_sweep(&cfg).unwrap();
    for r in &out.records {
        assert_eq!(
            r.lambda,
            lambda_policy(
                r.n,
                r.n_dims,
                r.p,
                &cfg.link,
                cfg.lambda_c2,
                cfg.lambda_mode
            )
            .unwrap()
        );
    }
}

#[test]
fn zero_truth_fits_zero_when_penalty_dominates() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::ErrorVsN, dir.path());
    cfg.s_values = vec![0];
    cfg.n_values = vec![2000];
    cfg.lambda_mode = LambdaMode::Theorem;
    cfg.lambda_c2 = 1.0;
    let out = run_sweep(&cfg).unwrap();
    let zero = ParamTensor::square_zeros(4, 2);
    for r in &out.records {
        assert!(!r.support_defined);
        // zero is optimal exactly when the penalty dominates the gradient there
        let path = simulate(&zero, &cfg.link, r.n, cfg.burn_in, r.path_seed).unwrap();
        let g = grad_nll(&zero, &path, &cfg.link)
            .unwrap()
            .norm(NormKind::Max);
        assert!(r.penalty >= g, "penalty {} vs gradient {g}", r.penalty);
        assert_eq!(r.frob_error, 0.0);
    }
}

#[test]
fn sparsity_sweep_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::ErrorVsSparsity, dir.path());
    cfg.n_values = vec![800];
    let out = run_sweep(&cfg).unwrap();
    assert_eq!(out.summaries.len(), 1);
    assert!(out.trend.is_none());

    cfg.s_values = vec![1, 8, 32];
    cfg.replicates = 3;
    let out = run_sweep(&cfg).unwrap();
    let trend = out.trend.unwrap();
    let errs: Vec<f64> = out.summaries.iter().map(|s| s.mean_frob_error).collect();
    assert_eq!(
        errs.iter().cloned().fold(0.0, f64::max),
        errs[2],
        "dense truth has the largest error"
    );
    assert!(trend.slope > 0.0);
    assert!(dir.path().join("error_vs_sparsity_fit.csv").exists());
}

#[test]
fn full_support_is_trivially_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::SupportRecovery, dir.path());
    cfg.s_values = vec![32];
    cfg.n_values = vec![100];
    let out = run_sweep(&cfg).unwrap();
    assert!(out.records.iter().all(|r| r.support_fraction == 1.0));
    let text = fs::read_to_string(dir.path().join("support_recovery_summary.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("n_over_log"));
    let s = &out.summaries[0];
    assert!((s.n_over_log - 100.0 / 32f64.ln()).abs() < 1e-12);
}

#[test]
fn timeout_flags_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::ErrorVsN, dir.path());
    cfg.n_dims = 10;
    cfg.n_lags = 5;
    cfg.s_values = vec![20];
    cfg.n_values = vec![3000];
    cfg.replicates = 1;
    cfg.timeout = Some(std::time::Duration::from_nanos(1));
    let out = run_sweep(&cfg).unwrap();
    assert!(out.records[0].timed_out);
    assert!(!out.records[0].converged);
    assert_eq!(out.summaries[0].timed_out, 1);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.cfg");
    fs::write(
        &path,
        format!(
            "experiment = diagnose\nN = 1\np = 2\noutput_dir = {}\ndiagnose.checks = psd\n\
             diagnose.path_length = 200000\ndiagnose.segments = 2000\n",
            dir.path().display()
        ),
    )
    .unwrap();
    let cfg = ExperimentConfig::from_file(&path).unwrap();
    assert_eq!(cfg.diagnose.checks, vec![DiagnoseCheck::Psd]);
    let out = run_diagnose(&cfg).unwrap();
    let detail = &out.summaries[0].detail;
    let c: f64 = detail.trim_start_matches("c_ell_sq_hat=").parse().unwrap();
    assert!((c - 0.25).abs() < 0.03, "{c}");
}

#[test]
fn gf_bound_on_hundred_tiny_instances() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Diagnose, 2, 2);
    cfg.output_dir = dir.path().to_path_buf();
    cfg.diagnose.checks = vec![DiagnoseCheck::GfBound, DiagnoseCheck::GradBound];
    cfg.s_values = vec![4];
    cfg.n_values = vec![300];
    cfg.replicates = 50;
    let out = run_diagnose(&cfg).unwrap();
    assert_eq!(out.summaries[0].items, 100);
    assert!(out.summaries[0].ok);
    assert!(out.summaries[1].ok, "{:?}", out.summaries[1]);
}
