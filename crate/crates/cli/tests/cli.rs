//! Drives the `qg` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qg_cli::output::{parse_series_csv, SERIES_HEADER};
use qg_cli::read_checkpoint;

fn qg(args: &[&str], out_dir_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qg"));
    cmd.args(args).env_remove(qg_cli::OUT_DIR_ENV);
    if let Some(dir) = out_dir_env {
        cmd.env(qg_cli::OUT_DIR_ENV, dir);
    }
    cmd.output().expect("spawn qg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn small_config(out: &Path, extra: &str) -> String {
    format!(
        "# small smoke run\nn = 16\nalpha = 0.75\ndt = 0.05\nt_end = 0.5\n\
         output_dir = {}\ninit.kind = two_mode\ninit.mode = 1,0\ninit.mode2 = 0,2\n\
         init.target_norm = 0.2\n{extra}",
        out.display()
    )
}

#[test]
fn run_writes_series_plot_and_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "run.cfg", &small_config(&out, "snapshot_every = 5\n"));
    let o = qg(&["run", &cfg], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("RUN t="));

    let text = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(text.starts_with(SERIES_HEADER));
    let records = parse_series_csv(&text).unwrap();
    assert_eq!(records.len(), 11);
    assert_eq!(records[0].t, 0.0);
    assert!((records[0].chi_low - 0.2).abs() < 1e-14);
    assert!(out.join("plot.gp").exists());
    assert!(out.join("checkpoint_00000005.qgx").exists());
    assert!(out.join("checkpoint_00000010.qgx").exists());
    let last = read_checkpoint(&out.join("final.qgx")).unwrap();
    assert_eq!(last.state.step_count, 10);
    assert_eq!(last.alpha, 0.75);
}

#[test]
fn out_dir_env_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let configured = tmp.path().join("configured");
    let overridden = tmp.path().join("overridden");
    let cfg = write_config(tmp.path(), "run.cfg", &small_config(&configured, ""));
    let o = qg(&["run", &cfg], Some(&overridden));
    assert_eq!(o.status.code(), Some(0));
    assert!(overridden.join("series.csv").exists());
    assert!(!configured.exists());
}

#[test]
fn verify_thm1_reports_and_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "t1.cfg", &small_config(&out, ""));
    let o = qg(&["verify-thm1", &cfg], None);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("THM1 OK"), "{s}");
    assert!(s.contains("smallness_ok=true"));
    let report = fs::read_to_string(out.join("thm1_report.csv")).unwrap();
    assert!(report.starts_with("t,lhs,rhs,margin\n"));
    assert_eq!(report.lines().count(), 12);
}

#[test]
fn verify_thm2_threshold_controls_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let loose = write_config(tmp.path(), "loose.cfg", &small_config(&out, "thm2_threshold = 0.99\n"));
    let o = qg(&["verify-thm2", &loose], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("applicable=true"));
    assert!(out.join("thm2_report.csv").exists());

    // half a time unit cannot reach a 1e-3 ratio
    let strict = write_config(tmp.path(), "strict.cfg", &small_config(&out, "thm2_threshold = 1e-3\n"));
    assert_eq!(qg(&["verify-thm2", &strict], None).status.code(), Some(3));
}

#[test]
fn verify_thm2_warns_outside_decay_range() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = small_config(&out, "").replace("alpha = 0.75", "alpha = 0.6");
    let cfg = write_config(tmp.path(), "t2.cfg", &body);
    let o = qg(&["verify-thm2", &cfg], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert!(stdout(&o).contains("applicable=false"));
}

#[test]
fn sweep_writes_one_row_per_member() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let body = small_config(&out, "sweep.alpha = 0.7, 0.9\nsweep.target_norm = 0.1, 0.2\nthm2_threshold = 0.99\n");
    let cfg = write_config(tmp.path(), "sweep.cfg", &body);
    let o = qg(&["sweep", &cfg], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    for i in 0..4 {
        assert!(out.join(format!("member_{i:03}")).join("series.csv").exists());
    }
}

#[test]
fn sweep_without_ranges_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.cfg", &small_config(&tmp.path().join("o"), ""));
    assert_eq!(qg(&["sweep", &cfg], None).status.code(), Some(1));
}

#[test]
fn resume_continues_the_reference_run() {
    let tmp = tempfile::tempdir().unwrap();
    let full = tmp.path().join("full");
    let cfg = write_config(tmp.path(), "run.cfg", &small_config(&full, "snapshot_every = 4\n"));
    assert_eq!(qg(&["run", &cfg], None).status.code(), Some(0));

    let resumed = tmp.path().join("resumed");
    let cp = full.join("checkpoint_00000004.qgx");
    let series = full.join("series.csv");
    let o = qg(
        &[
            "resume",
            cp.to_str().unwrap(),
            "--t-end",
            "0.5",
            "--dt",
            "0.05",
            "--series",
            series.to_str().unwrap(),
        ],
        Some(&resumed),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("RESUME"));
    let a = parse_series_csv(&fs::read_to_string(&series).unwrap()).unwrap();
    let b = parse_series_csv(&fs::read_to_string(resumed.join("series.csv")).unwrap()).unwrap();
    assert_eq!(&a[4..], &b[..]);
}

#[test]
fn resume_rejects_truncated_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "run.cfg", &small_config(&out, ""));
    assert_eq!(qg(&["run", &cfg], None).status.code(), Some(0));
    let bytes = fs::read(out.join("final.qgx")).unwrap();
    let broken = tmp.path().join("broken.qgx");
    fs::write(&broken, &bytes[..bytes.len() - 8]).unwrap();
    let o = qg(&["resume", broken.to_str().unwrap(), "--t-end", "1", "--dt", "0.05"], Some(&out));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupted"));
}

#[test]
fn bad_invocations_exit_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(qg(&[], None).status.code(), Some(1));
    assert_eq!(qg(&["bogus"], None).status.code(), Some(1));
    assert_eq!(qg(&["run", "/nonexistent/qg.cfg"], None).status.code(), Some(1));
    assert_eq!(qg(&["--help"], None).status.code(), Some(0));

    let body = small_config(&tmp.path().join("o"), "").replace("alpha = 0.75", "alpha = 0.4");
    let cfg = write_config(tmp.path(), "bad.cfg", &body);
    let o = qg(&["run", &cfg], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1/2 < alpha <= 1"));

    let cfg = write_config(tmp.path(), "typo.cfg", &small_config(&tmp.path().join("o"), "aplha = 1\n"));
    assert_eq!(qg(&["run", &cfg], None).status.code(), Some(1));
}

#[test]
fn blow_up_exits_with_numerical_abort() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = small_config(&out, "").replace("init.target_norm = 0.2", "init.target_norm = 1e7");
    let cfg = write_config(tmp.path(), "huge.cfg", &body);
    let o = qg(&["run", &cfg], None);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}
