//! JSON and CSV renderings of run reports and study tables.

use std::fmt::Write as _;

use serde::Serialize;

use qmcqoi::array::unravel;
use qmcqoi::study::StudyTable;
use qmcqoi::{RunReport, RunStatus};

use crate::config::{CommandKind, Format};

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn command_name(command: CommandKind) -> &'static str {
    match command {
        CommandKind::Integrate => "integrate",
        CommandKind::Sensitivity => "sensitivity",
        CommandKind::PosteriorMean => "posterior-mean",
        CommandKind::Qei => "qei",
        CommandKind::Convergence => "convergence",
    }
}

#[derive(Serialize)]
struct RunJson<'a> {
    command: &'static str,
    status: &'static str,
    qoi_shape: &'a [usize],
    mean_shape: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<&'a [String]>,
    s_hat: Vec<Option<f64>>,
    s_lo: Vec<Option<f64>>,
    s_hi: Vec<Option<f64>>,
    converged: Vec<bool>,
    n_total: u64,
    nodes_total: u64,
    eval_counts: Vec<u64>,
    cost: u64,
    iterations: usize,
    wall_time: f64,
}

/// Flat arrays are row-major over the listed shapes. Non-finite numbers are
/// written as `null`. `wall_time` (seconds) is always the last field.
pub fn render_report(command: CommandKind, report: &RunReport, labels: Option<&[String]>, format: Format) -> String {
    match format {
        Format::Json => {
            let doc = RunJson {
                command: command_name(command),
                status: match report.status {
                    RunStatus::Converged => "converged",
                    RunStatus::BudgetExhausted => "budget-exhausted",
                },
                qoi_shape: report.s_bounds.shape(),
                mean_shape: report.mu_bounds.shape(),
                labels,
                s_hat: report.s_hat.iter().copied().map(finite).collect(),
                s_lo: report.s_bounds.lo_slice().iter().copied().map(finite).collect(),
                s_hi: report.s_bounds.hi_slice().iter().copied().map(finite).collect(),
                converged: report.converged.iter().copied().collect(),
                n_total: report.n_total,
                nodes_total: report.nodes_total,
                eval_counts: report.eval_counts.iter().copied().collect(),
                cost: report.cost,
                iterations: report.iterations,
                wall_time: report.wall_time.as_secs_f64(),
            };
            let mut text = serde_json::to_string_pretty(&doc).expect("serializable report");
            text.push('\n');
            text
        }
        Format::Csv => {
            let shape = report.s_bounds.shape();
            let mut text = String::from("index,s_hat,s_lo,s_hi,converged\n");
            let cell = |x: f64| if x.is_nan() { String::new() } else { x.to_string() };
            for l in 0..report.s_bounds.len() {
                let index: Vec<String> = unravel(shape, l).iter().map(usize::to_string).collect();
                let index = if index.is_empty() { "0".to_string() } else { index.join(":") };
                let iv = report.s_bounds.get(l);
                let _ = writeln!(
                    text,
                    "{index},{},{},{},{}",
                    cell(report.s_hat.as_slice().expect("standard layout")[l]),
                    cell(iv.lo),
                    cell(iv.hi),
                    report.converged.as_slice().expect("standard layout")[l]
                );
            }
            text
        }
    }
}

#[derive(Serialize)]
struct StudyRowJson {
    kind: String,
    randomization: String,
    n: u64,
    median_abs_error: f64,
}

#[derive(Serialize)]
struct StudySlopeJson {
    kind: String,
    randomization: String,
    slope: Option<f64>,
}

#[derive(Serialize)]
struct StudyJson {
    rows: Vec<StudyRowJson>,
    slopes: Vec<StudySlopeJson>,
}

fn label<T: std::fmt::Debug>(x: T) -> String {
    format!("{x:?}").to_lowercase()
}

pub fn render_study(table: &StudyTable, format: Format) -> String {
    match format {
        Format::Json => {
            let doc = StudyJson {
                rows: table
                    .rows
                    .iter()
                    .map(|r| StudyRowJson {
                        kind: label(r.kind),
                        randomization: label(r.randomization),
                        n: r.n,
                        median_abs_error: r.median_abs_error,
                    })
                    .collect(),
                slopes: table
                    .slopes
                    .iter()
                    .map(|s| StudySlopeJson {
                        kind: label(s.kind),
                        randomization: label(s.randomization),
                        slope: s.slope,
                    })
                    .collect(),
            };
            let mut text = serde_json::to_string_pretty(&doc).expect("serializable table");
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut text = String::from("kind,randomization,n,median_abs_error\n");
            for r in &table.rows {
                let _ = writeln!(text, "{},{},{},{}", label(r.kind), label(r.randomization), r.n, r.median_abs_error);
            }
            text
        }
    }
}
