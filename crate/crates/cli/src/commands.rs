//! `qg` subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use qg_core::{
    build, decay_summary, run_from, theorem1_functional, NormSeries, QgError, SimParams,
    SimState, SimulationAbort, SpectralField,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
use crate::config::{ConfigError, RunConfig};
use crate::output::{self, num};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Usage = 1,
    NumericalAbort = 2,
    TheoremFailure = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] QgError),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Core(QgError::BlowUp { .. }) => Status::NumericalAbort,
            _ => Status::Usage,
        }
    }
}

/// Builds the initial field described by the configuration.
pub fn initial_field(cfg: &RunConfig) -> Result<SpectralField, CliError> {
    Ok(build(&cfg.init, cfg.grid)?)
}

fn checkpoint_of(state: &SimState, params: &SimParams) -> Checkpoint {
    Checkpoint {
        state: state.clone(),
        alpha: params.alpha,
        k: params.k,
    }
}

/// Outcome of one simulation written to `dir`.
pub struct RunOutput {
    pub series: NormSeries,
    pub final_state: Option<SimState>,
    pub abort: Option<QgError>,
}

/// Runs `state` to `params.t_end`, writing `series.csv`, the plot script,
/// periodic checkpoints and `final.qgx` into `dir`.
fn run_into(
    dir: &Path,
    state: SimState,
    params: &SimParams,
    series: NormSeries,
    snapshot_every: u64,
) -> Result<RunOutput, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut io_error: Option<CheckpointError> = None;
    let observer = |s: &SimState| {
        if snapshot_every > 0 && s.step_count > 0 && s.step_count % snapshot_every == 0 && io_error.is_none() {
            let path = dir.join(format!("checkpoint_{:08}.qgx", s.step_count));
            if let Err(e) = write_checkpoint(&checkpoint_of(s, params), &path) {
                io_error = Some(e);
            }
        }
    };
    let result = run_from(state, params, series, observer);
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let out = match result {
        Ok((state, series)) => {
            write_checkpoint(&checkpoint_of(&state, params), &dir.join("final.qgx"))?;
            RunOutput {
                series,
                final_state: Some(state),
                abort: None,
            }
        }
        Err(SimulationAbort {
            error,
            partial,
            last_state,
        }) => {
            if partial.is_empty() {
                return Err(error.into());
            }
            RunOutput {
                series: partial,
                final_state: last_state,
                abort: Some(error),
            }
        }
    };
    output::write(dir, "series.csv", &output::series_csv(&out.series))?;
    output::write(dir, "plot.gp", &output::plot_script())?;
    Ok(out)
}

fn run_config(cfg: &RunConfig, dir: &Path) -> Result<RunOutput, CliError> {
    let theta0 = initial_field(cfg)?;
    run_into(
        dir,
        SimState::initial(theta0),
        &cfg.params,
        NormSeries::new(cfg.params.sigma()),
        cfg.snapshot_every,
    )
}

fn report_abort(out: &mut dyn Write, e: &QgError) -> std::io::Result<Status> {
    writeln!(out, "ABORT {e}")?;
    Ok(Status::NumericalAbort)
}

pub fn cmd_run(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let run = run_config(cfg, &cfg.output_dir)?;
    if let Some(e) = &run.abort {
        return Ok(report_abort(out, e)?);
    }
    let last = run.series.last().expect("non-empty series");
    writeln!(
        out,
        "RUN t={} chi_low={} records={} output={}",
        num(last.t),
        num(last.chi_low),
        run.series.len(),
        cfg.output_dir.display()
    )?;
    Ok(Status::Success)
}

pub fn cmd_verify_thm1(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let run = run_config(cfg, &cfg.output_dir)?;
    if let Some(e) = &run.abort {
        return Ok(report_abort(out, e)?);
    }
    let theta0_norm = run.series.first().expect("non-empty series").chi_low;
    let report = theorem1_functional(&run.series, theta0_norm, cfg.tolerance)?;
    output::write(&cfg.output_dir, "thm1_report.csv", &output::thm1_csv(&report))?;
    writeln!(out, "{}", output::thm1_summary(&report))?;
    Ok(if !report.satisfied && report.smallness_ok {
        Status::TheoremFailure
    } else {
        Status::Success
    })
}

pub fn cmd_verify_thm2(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status, CliError> {
    if !qg_core::diagnostics::decay_applicable(cfg.params.alpha) {
        writeln!(
            err,
            "warning: alpha = {} is outside 2/3 < alpha < 1; decay is reported but not checked",
            cfg.params.alpha
        )?;
    }
    let run = run_config(cfg, &cfg.output_dir)?;
    if let Some(e) = &run.abort {
        return Ok(report_abort(out, e)?);
    }
    let verdict = decay_summary(&run.series, cfg.params.alpha)?;
    output::write(&cfg.output_dir, "thm2_report.csv", &output::thm2_csv(&run.series))?;
    writeln!(out, "{}", output::thm2_summary(&verdict))?;
    Ok(if verdict.applicable && verdict.ratio_final >= cfg.thm2_threshold {
        Status::TheoremFailure
    } else {
        Status::Success
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub alpha: f64,
    pub k: f64,
    pub target_norm: Option<f64>,
    pub theta0_norm: f64,
    pub smallness_ok: bool,
    pub worst_margin: f64,
    pub thm1_satisfied: bool,
    pub ratio_final: f64,
    pub t_half: Option<f64>,
    pub applicable: bool,
    pub status: String,
}

impl SweepRow {
    fn failed_theorem(&self, threshold: f64) -> bool {
        (self.smallness_ok && !self.thm1_satisfied)
            || (self.applicable && self.ratio_final >= threshold)
    }
}

pub const SWEEP_HEADER: &str = "index,alpha,k,target_norm,theta0_norm,smallness_ok,worst_margin,thm1_satisfied,ratio_final,t_half,applicable,status";

fn sweep_member(cfg: &RunConfig, index: usize) -> Result<SweepRow, CliError> {
    let dir = cfg.output_dir.join(format!("member_{index:03}"));
    let run = run_config(cfg, &dir)?;
    let theta0_norm = run.series.first().expect("non-empty series").chi_low;
    let report = theorem1_functional(&run.series, theta0_norm, cfg.tolerance)?;
    let verdict = decay_summary(&run.series, cfg.params.alpha)?;
    output::write(&dir, "thm1_report.csv", &output::thm1_csv(&report))?;
    output::write(&dir, "thm2_report.csv", &output::thm2_csv(&run.series))?;
    Ok(SweepRow {
        index,
        alpha: cfg.params.alpha,
        k: cfg.params.k,
        target_norm: cfg.init.target_norm,
        theta0_norm,
        smallness_ok: report.smallness_ok,
        worst_margin: report.worst_margin,
        thm1_satisfied: report.satisfied,
        ratio_final: verdict.ratio_final,
        t_half: verdict.t_half,
        applicable: verdict.applicable,
        status: match &run.abort {
            None => "ok".into(),
            Some(_) => "abort".into(),
        },
    })
}

/// Cartesian product of the sweep ranges; empty ranges fall back to the base values.
pub fn sweep_members(cfg: &RunConfig) -> Vec<RunConfig> {
    let or_base = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
    let alphas = or_base(&cfg.sweep.alpha, cfg.params.alpha);
    let ks = or_base(&cfg.sweep.k, cfg.params.k);
    let norms: Vec<Option<f64>> = if cfg.sweep.target_norm.is_empty() {
        vec![cfg.init.target_norm]
    } else {
        cfg.sweep.target_norm.iter().map(|&t| Some(t)).collect()
    };
    let mut members = Vec::new();
    for &a in &alphas {
        for &k in &ks {
            for &t in &norms {
                members.push(cfg.with_overrides(a, k, t));
            }
        }
    }
    members
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    if cfg.sweep.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one of sweep.alpha, sweep.k, sweep.target_norm".into(),
        ));
    }
    let members = sweep_members(cfg);
    let rows: Vec<SweepRow> = members
        .par_iter()
        .enumerate()
        .map(|(i, m)| sweep_member(m, i))
        .collect::<Result<_, _>>()?;

    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.index,
            num(r.alpha),
            num(r.k),
            r.target_norm.map(num).unwrap_or_else(|| "none".into()),
            num(r.theta0_norm),
            r.smallness_ok,
            num(r.worst_margin),
            r.thm1_satisfied,
            num(r.ratio_final),
            r.t_half.map(num).unwrap_or_else(|| "none".into()),
            r.applicable,
            r.status
        ));
    }
    output::write(&cfg.output_dir, "sweep_summary.csv", &csv)?;
    let aborted = rows.iter().filter(|r| r.status != "ok").count();
    let failed = rows.iter().filter(|r| r.failed_theorem(cfg.thm2_threshold)).count();
    writeln!(
        out,
        "SWEEP members={} aborted={aborted} theorem_failures={failed}",
        rows.len()
    )?;
    Ok(if aborted > 0 {
        Status::NumericalAbort
    } else if failed > 0 {
        Status::TheoremFailure
    } else {
        Status::Success
    })
}

#[derive(Clone, Debug)]
pub struct ResumeOptions {
    pub checkpoint: PathBuf,
    pub t_end: f64,
    /// Numerical settings (dt, cfl, dealias, record_every, snapshots, output).
    pub config: Option<RunConfig>,
    pub dt: Option<f64>,
    pub output_dir: Option<PathBuf>,
    /// Earlier `series.csv` whose running integral the resumed series continues.
    pub series: Option<PathBuf>,
}

pub fn cmd_resume(opts: &ResumeOptions, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status, CliError> {
    let cp = read_checkpoint(&opts.checkpoint)?;
    let mut params = match &opts.config {
        Some(cfg) => {
            if cfg.params.alpha != cp.alpha || cfg.params.k != cp.k {
                writeln!(
                    err,
                    "warning: using alpha = {}, k = {} from the checkpoint",
                    cp.alpha, cp.k
                )?;
            }
            cfg.params.clone()
        }
        None => {
            let dt = opts
                .dt
                .ok_or_else(|| CliError::Usage("resume needs --dt or --config".into()))?;
            SimParams::new(cp.alpha, dt, opts.t_end)
        }
    };
    params.alpha = cp.alpha;
    params.k = cp.k;
    params.t_end = opts.t_end;
    if let Some(dt) = opts.dt {
        params.dt = dt;
    }
    if opts.t_end < cp.state.t {
        return Err(CliError::Usage(format!(
            "--t-end {} is before the checkpoint time {}",
            opts.t_end, cp.state.t
        )));
    }
    let dir = opts
        .output_dir
        .clone()
        .or_else(|| opts.config.as_ref().map(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("qg_out"));
    let snapshot_every = opts.config.as_ref().map(|c| c.snapshot_every).unwrap_or(0);

    let offset = match &opts.series {
        None => 0.0,
        Some(path) => {
            let records = output::parse_series_csv(&std::fs::read_to_string(path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            records
                .iter()
                .find(|r| r.t.to_bits() == cp.state.t.to_bits())
                .map(|r| r.int_chi_one)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "{} has no record at the checkpoint time {}",
                        path.display(),
                        cp.state.t
                    ))
                })?
        }
    };

    let series = NormSeries::with_integral_offset(params.sigma(), offset);
    let run = run_into(&dir, cp.state, &params, series, snapshot_every)?;
    if let Some(e) = &run.abort {
        return Ok(report_abort(out, e)?);
    }
    let last = run.series.last().expect("non-empty series");
    writeln!(
        out,
        "RESUME t={} chi_low={} records={} output={}",
        num(last.t),
        num(last.chi_low),
        run.series.len(),
        dir.display()
    )?;
    Ok(Status::Success)
}
