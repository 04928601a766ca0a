//! CSV and markdown serialization of traces, runs, summaries and stability reports.
//!
//! Number formats are fixed so output is byte-reproducible: traces and run
//! records use 17 significant digits, summary tables 6. Non-finite values are
//! written as `inf`, `-inf` and `nan`; absent optionals as empty fields.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::harness::{CellResult, RunStatus, TraceRow};
use crate::stability::StabilityReport;

pub const TRACE_HEADER: [&str; 5] = ["t", "f", "grad_norm", "dist_to_opt", "alpha_t"];

pub const SUMMARY_HEADER: [&str; 8] = [
    "Problem",
    "Optimizer",
    "Final Loss",
    "Final |grad f|",
    "Iter to 1e-3",
    "Iter to 1e-6",
    "Total Iters",
    "Final Dist",
];

pub const RUNS_HEADER: [&str; 11] = [
    "problem",
    "optimizer",
    "seed",
    "status",
    "divergence_iter",
    "iters_to_primary",
    "iters_to_high",
    "total_iters",
    "final_f",
    "final_grad_norm",
    "final_dist",
];

pub const STABILITY_HEADER: [&str; 6] = [
    "method",
    "lambda_i",
    "rho_exact",
    "rho_closed_form",
    "alpha_bound",
    "predicted",
];

fn non_finite(v: f64) -> Option<&'static str> {
    if v.is_nan() {
        Some("nan")
    } else if v == f64::INFINITY {
        Some("inf")
    } else if v == f64::NEG_INFINITY {
        Some("-inf")
    } else {
        None
    }
}

/// Full-precision (17 significant digit) rendering; parses back exactly.
pub fn fmt_full(v: f64) -> String {
    non_finite(v).map_or_else(|| format!("{v:.16e}"), str::to_string)
}

/// Table rendering with 6 significant digits.
pub fn fmt_table(v: f64) -> String {
    non_finite(v).map_or_else(|| format!("{v:.5e}"), str::to_string)
}

fn fmt_opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

pub fn parse_real(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => s.parse().map_err(|_| Error::Parse(format!("not a real number: {s:?}"))),
    }
}

fn parse_opt_real(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_real(s).map(Some)
    }
}

fn parse_opt_int(s: &str) -> Result<Option<u64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("not an iteration count: {s:?}")))
    }
}

fn parse_int(s: &str) -> Result<u64> {
    parse_opt_int(s)?.ok_or_else(|| Error::Parse("missing iteration count".into()))
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_trace_csv<W: Write>(w: W, trace: &[TraceRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(TRACE_HEADER)?;
    for row in trace {
        out.write_record([
            row.t.to_string(),
            fmt_full(row.f),
            fmt_full(row.grad_norm),
            fmt_opt(row.dist_to_opt, fmt_full),
            fmt_opt(row.alpha_t, fmt_full),
        ])?;
    }
    out.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn read_trace_csv<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(rdr.headers()?, &TRACE_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(TraceRow {
                t: parse_int(&rec[0])?,
                f: parse_real(&rec[1])?,
                grad_norm: parse_real(&rec[2])?,
                dist_to_opt: parse_opt_real(&rec[3])?,
                alpha_t: parse_opt_real(&rec[4])?,
            })
        })
        .collect()
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Parse(format!(
            "unexpected header {:?}, expected {:?}",
            found.iter().collect::<Vec<_>>(),
            expected
        )))
    }
}

/// A single run without its trace; what `runs.csv` carries per line.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub problem: String,
    pub optimizer: String,
    pub seed: u64,
    pub status: RunStatus,
    pub divergence_iter: Option<u64>,
    pub iters_to_primary: Option<u64>,
    pub iters_to_high: Option<u64>,
    pub total_iters: u64,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub final_dist: Option<f64>,
}

impl From<&CellResult> for RunRecord {
    fn from(c: &CellResult) -> Self {
        let r = &c.result;
        Self {
            problem: c.problem.label(),
            optimizer: c.optimizer.clone(),
            seed: c.seed,
            status: r.status,
            divergence_iter: r.divergence_iter,
            iters_to_primary: r.iters_to_primary,
            iters_to_high: r.iters_to_high,
            total_iters: r.total_iters,
            final_f: r.final_f,
            final_grad_norm: r.final_grad_norm,
            final_dist: r.final_dist,
        }
    }
}

pub fn write_runs_csv<W: Write>(w: W, runs: &[RunRecord]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(RUNS_HEADER)?;
    for r in runs {
        out.write_record([
            r.problem.clone(),
            r.optimizer.clone(),
            r.seed.to_string(),
            r.status.as_str().to_string(),
            fmt_opt(r.divergence_iter, |v| v.to_string()),
            fmt_opt(r.iters_to_primary, |v| v.to_string()),
            fmt_opt(r.iters_to_high, |v| v.to_string()),
            r.total_iters.to_string(),
            fmt_full(r.final_f),
            fmt_full(r.final_grad_norm),
            fmt_opt(r.final_dist, fmt_full),
        ])?;
    }
    out.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn read_runs_csv<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(rdr.headers()?, &RUNS_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(RunRecord {
                problem: rec[0].to_string(),
                optimizer: rec[1].to_string(),
                seed: parse_int(&rec[2])?,
                status: RunStatus::parse(&rec[3])
                    .ok_or_else(|| Error::Parse(format!("unknown status {:?}", &rec[3])))?,
                divergence_iter: parse_opt_int(&rec[4])?,
                iters_to_primary: parse_opt_int(&rec[5])?,
                iters_to_high: parse_opt_int(&rec[6])?,
                total_iters: parse_int(&rec[7])?,
                final_f: parse_real(&rec[8])?,
                final_grad_norm: parse_real(&rec[9])?,
                final_dist: parse_opt_real(&rec[10])?,
            })
        })
        .collect()
}

/// One row of the results table, aggregated over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub optimizer: String,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    pub iters_to_primary: Option<u64>,
    pub iters_to_high: Option<u64>,
    pub total_iters: u64,
    pub final_dist: Option<f64>,
    /// Seeds on which the run diverged, and the median divergence step over them.
    pub diverged_seeds: usize,
    pub seeds: usize,
    pub median_divergence_iter: Option<u64>,
}

/// Lower median: element `(n - 1) / 2` of the sorted values.
fn lower_median<T: Clone>(mut v: Vec<T>, cmp: impl Fn(&T, &T) -> std::cmp::Ordering) -> Option<T> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(cmp);
    Some(v[(v.len() - 1) / 2].clone())
}

fn median_real(v: Vec<f64>) -> f64 {
    lower_median(v, f64::total_cmp).unwrap_or(f64::NAN)
}

/// Medians over seeds (absent iteration counts rank above every present one).
fn median_iters(v: Vec<Option<u64>>) -> Option<u64> {
    lower_median(v, |a, b| match (a, b) {
        (Some(a), Some(b)) => a.cmp(b),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    })
    .flatten()
}

/// Aggregates per-seed cells into one row per (problem, optimizer), in suite order.
/// Every column is the lower median over seeds.
pub fn summarize(cells: &[CellResult]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, usize)> = cells.iter().map(|c| (c.problem_index, c.optimizer_index)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|key| {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| (c.problem_index, c.optimizer_index) == key)
                .collect();
            let pick = |f: fn(&CellResult) -> f64| median_real(group.iter().map(|c| f(c)).collect());
            let diverged: Vec<u64> = group.iter().filter_map(|c| c.result.divergence_iter).collect();
            SummaryRow {
                problem: group[0].problem.label(),
                optimizer: group[0].optimizer.clone(),
                final_loss: pick(|c| c.result.final_f),
                final_grad_norm: pick(|c| c.result.final_grad_norm),
                iters_to_primary: median_iters(group.iter().map(|c| c.result.iters_to_primary).collect()),
                iters_to_high: median_iters(group.iter().map(|c| c.result.iters_to_high).collect()),
                total_iters: lower_median(group.iter().map(|c| c.result.total_iters).collect(), u64::cmp).unwrap_or(0),
                final_dist: group[0]
                    .result
                    .final_dist
                    .map(|_| pick(|c| c.result.final_dist.unwrap_or(f64::NAN))),
                diverged_seeds: diverged.len(),
                seeds: group.len(),
                median_divergence_iter: lower_median(diverged, u64::cmp),
            }
        })
        .collect()
}

fn summary_fields(r: &SummaryRow) -> [String; 8] {
    [
        r.problem.clone(),
        r.optimizer.clone(),
        fmt_table(r.final_loss),
        fmt_table(r.final_grad_norm),
        fmt_opt(r.iters_to_primary, |v| v.to_string()),
        fmt_opt(r.iters_to_high, |v| v.to_string()),
        r.total_iters.to_string(),
        fmt_opt(r.final_dist, fmt_table),
    ]
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for r in rows {
        out.write_record(summary_fields(r))?;
    }
    out.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Reads the eight table columns back. Seed counts are not part of the table
/// and come back as zero.
pub fn read_summary_csv<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(rdr.headers()?, &SUMMARY_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(SummaryRow {
                problem: rec[0].to_string(),
                optimizer: rec[1].to_string(),
                final_loss: parse_real(&rec[2])?,
                final_grad_norm: parse_real(&rec[3])?,
                iters_to_primary: parse_opt_int(&rec[4])?,
                iters_to_high: parse_opt_int(&rec[5])?,
                total_iters: parse_int(&rec[6])?,
                final_dist: parse_opt_real(&rec[7])?,
                diverged_seeds: 0,
                seeds: 0,
                median_divergence_iter: None,
            })
        })
        .collect()
}

/// Markdown table with the same columns, plus a note per diverging cell.
pub fn write_summary_markdown<W: Write>(mut w: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(w, "| {} |", SUMMARY_HEADER.join(" | "))?;
    writeln!(w, "|{}", "---|".repeat(SUMMARY_HEADER.len()))?;
    for r in rows {
        let f = summary_fields(r).map(|s| if s.is_empty() { "-".to_string() } else { s });
        writeln!(w, "| {} |", f.join(" | "))?;
    }
    let diverged: Vec<&SummaryRow> = rows.iter().filter(|r| r.diverged_seeds > 0).collect();
    if !diverged.is_empty() {
        writeln!(w)?;
        for r in diverged {
            writeln!(
                w,
                "- {} on {}: diverged on {}/{} seeds, median divergence iteration {}",
                r.optimizer,
                r.problem,
                r.diverged_seeds,
                r.seeds,
                r.median_divergence_iter.unwrap_or(0)
            )?;
        }
    }
    Ok(())
}

pub type CsvWriter<W> = csv::Writer<W>;

/// One stability CSV line per eigenmode. `label` names the configuration
/// (e.g. `hbsge(alpha=1.2)`); `predicted` is the configuration's overall
/// outcome, repeated on each of its mode lines.
pub fn write_stability_rows<W: Write>(out: &mut CsvWriter<W>, label: &str, report: &StabilityReport) -> Result<()> {
    for (i, mode) in report.per_mode.iter().enumerate() {
        let closed = report.closed_form_hbsge.as_ref().map(|c| c[i].abs());
        out.write_record([
            label.to_string(),
            fmt_full(mode.lambda),
            fmt_full(mode.rho),
            fmt_opt(closed, fmt_full),
            fmt_opt(report.alpha_bound, fmt_full),
            report.predicted.to_string(),
        ])?;
    }
    Ok(())
}

/// A stability CSV line for a configuration with no linear analysis (Adam).
pub fn write_stability_unavailable<W: Write>(out: &mut CsvWriter<W>, label: &str, eigenvalues: &[f64]) -> Result<()> {
    for &l in eigenvalues {
        out.write_record([
            label.to_string(),
            fmt_full(l),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    Ok(())
}

pub fn stability_writer<W: Write>(w: W) -> Result<CsvWriter<W>> {
    let mut out = writer(w);
    out.write_record(STABILITY_HEADER)?;
    Ok(out)
}
