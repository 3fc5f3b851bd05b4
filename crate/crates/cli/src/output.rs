//! CSV time series, theorem reports and the gnuplot script.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use qg_core::{DecayVerdict, InequalityReport, NormRecord, NormSeries};

pub const SERIES_HEADER: &str = "t,chi_low,chi_one,l2,int_chi_one";

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn series_csv(series: &NormSeries) -> String {
    let mut s = String::from(SERIES_HEADER);
    s.push('\n');
    for r in series.records() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(r.t),
            num(r.chi_low),
            num(r.chi_one),
            num(r.l2),
            num(r.int_chi_one)
        );
    }
    s
}

pub fn parse_series_csv(text: &str) -> Result<Vec<NormRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == SERIES_HEADER => {}
        other => return Err(format!("unexpected series header {other:?}")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("row {}: {e}", i + 2))?;
            match v.as_slice() {
                &[t, chi_low, chi_one, l2, int_chi_one] => Ok(NormRecord {
                    t,
                    chi_low,
                    chi_one,
                    l2,
                    int_chi_one,
                }),
                _ => Err(format!("row {}: expected 5 columns", i + 2)),
            }
        })
        .collect()
}

pub fn thm1_csv(report: &InequalityReport) -> String {
    let mut s = String::from("t,lhs,rhs,margin\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{},{},{}", num(r.t), num(r.lhs), num(r.rhs), num(r.margin));
    }
    s
}

pub fn thm2_csv(series: &NormSeries) -> String {
    let initial = series.first().map(|r| r.chi_low).unwrap_or(0.0);
    let mut s = String::from("t,chi_low,ratio\n");
    for r in series.records() {
        let ratio = if initial > 0.0 { r.chi_low / initial } else { 0.0 };
        let _ = writeln!(s, "{},{},{}", num(r.t), num(r.chi_low), num(ratio));
    }
    s
}

pub fn thm1_summary(report: &InequalityReport) -> String {
    let head = if report.satisfied { "THM1 OK" } else { "THM1 VIOLATION" };
    format!(
        "{head} worst_margin={} theta0_norm={} smallness_ok={}",
        num(report.worst_margin),
        num(report.theta0_norm),
        report.smallness_ok
    )
}

pub fn thm2_summary(verdict: &DecayVerdict) -> String {
    format!(
        "THM2 ratio_final={} t_half={} applicable={}",
        num(verdict.ratio_final),
        verdict.t_half.map(num).unwrap_or_else(|| "none".into()),
        verdict.applicable
    )
}

/// Gnuplot script plotting the norm series on a log scale.
pub fn plot_script() -> String {
    "\
set datafile separator ','
set key autotitle columnhead
set logscale y
set xlabel 't'
set terminal pngcairo size 900,600
set output 'series.png'
plot 'series.csv' using 1:2 with lines title 'chi_low', \\
     '' using 1:3 with lines title 'chi_one', \\
     '' using 1:4 with lines title 'l2'
"
    .to_string()
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)
}
