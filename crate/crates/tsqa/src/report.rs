//! Metric grids and the CSV, JSON and SVG radar renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tsqa_core::metrics::{
    answered, f1, global_metrics, inv_memory, inv_time, judge, precision_at_k, recall_at_k,
    GlobalMetrics, MetricError,
};
use tsqa_core::{Judgement, MatchMode};

use crate::bundle::QType;
use crate::harness::RunRecord;
use crate::{Error, Result};

pub const DEFAULT_KS: [usize; 4] = [1, 3, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    /// `all` or a question type.
    pub qtype: String,
    pub system: String,
    pub questions: usize,
    pub answered: usize,
    /// Aligned with [`EvalReport::ks`].
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub system: String,
    pub questions: usize,
    pub global: GlobalMetrics,
    pub inv_time: f64,
    pub inv_memory: f64,
    pub avg_latency_secs: f64,
    pub peak_memory_bytes: u64,
    pub match_mode: MatchMode,
    pub timing_mode: String,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ks: Vec<usize>,
    pub rows: Vec<MetricRow>,
    pub systems: Vec<SystemSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" | "svg-radar" | "radar" => Ok(Format::Svg),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

pub fn judgements(record: &RunRecord) -> Vec<(QType, Judgement)> {
    record
        .results
        .iter()
        .map(|r| (r.qtype, judge(&r.answers, &r.gold, record.match_mode)))
        .collect()
}

fn metric_row(qtype: &str, system: &str, js: &[Judgement], ks: &[usize]) -> MetricRow {
    let precision: Vec<f64> = ks.iter().map(|&k| precision_at_k(js, k)).collect();
    let recall: Vec<f64> = ks.iter().map(|&k| recall_at_k(js, k)).collect();
    let f1s = precision
        .iter()
        .zip(&recall)
        .map(|(p, r)| f1(*p, *r))
        .collect();
    MetricRow {
        qtype: qtype.to_string(),
        system: system.to_string(),
        questions: js.len(),
        answered: answered(js),
        precision,
        recall,
        f1: f1s,
    }
}

/// Resource scores, with an all-zero column reported as zeros.
fn inverse_or_zero(values: Result<Vec<f64>, MetricError>, n: usize, what: &str) -> Vec<f64> {
    match values {
        Ok(v) => v,
        Err(MetricError::AllZero) => {
            log::warn!("every system measured zero {what}; reporting inverse {what} as 0");
            vec![0.0; n]
        }
        Err(e) => {
            log::warn!("inverse {what} undefined: {e}");
            vec![0.0; n]
        }
    }
}

/// Builds the grid: rows ordered by question type (`all` first), then by
/// the order of `records`. Empty subsets get no row.
pub fn build_report(records: &[RunRecord], ks: &[usize]) -> EvalReport {
    let judged: Vec<Vec<(QType, Judgement)>> = records.iter().map(judgements).collect();
    let mut rows = Vec::new();
    for (r, js) in records.iter().zip(&judged) {
        let all: Vec<Judgement> = js.iter().map(|(_, j)| *j).collect();
        if !all.is_empty() {
            rows.push(metric_row("all", &r.system, &all, ks));
        }
    }
    for qtype in QType::REPORTED {
        for (r, js) in records.iter().zip(&judged) {
            let subset: Vec<Judgement> = js
                .iter()
                .filter(|(q, _)| *q == qtype)
                .map(|(_, j)| *j)
                .collect();
            if !subset.is_empty() {
                rows.push(metric_row(qtype.as_str(), &r.system, &subset, ks));
            }
        }
    }
    let n = records.len();
    let times: Vec<f64> = records.iter().map(RunRecord::avg_latency_secs).collect();
    let mems: Vec<u64> = records.iter().map(|r| r.peak_memory_bytes).collect();
    let inv_t = inverse_or_zero(inv_time(&times), n, "time");
    let inv_m = inverse_or_zero(inv_memory(&mems), n, "memory");
    let systems = records
        .iter()
        .zip(&judged)
        .enumerate()
        .map(|(i, (r, js))| {
            let all: Vec<Judgement> = js.iter().map(|(_, j)| *j).collect();
            SystemSummary {
                system: r.system.clone(),
                questions: all.len(),
                global: global_metrics(&all),
                inv_time: inv_t[i],
                inv_memory: inv_m[i],
                avg_latency_secs: times[i],
                peak_memory_bytes: mems[i],
                match_mode: r.match_mode,
                timing_mode: r.timing_mode.clone(),
                workers: r.workers,
            }
        })
        .collect();
    EvalReport {
        ks: ks.to_vec(),
        rows,
        systems,
    }
}

pub fn csv_header(ks: &[usize]) -> Vec<String> {
    let mut h = vec!["qtype".to_string(), "system".to_string()];
    for metric in ["p", "r", "f1"] {
        h.extend(ks.iter().map(|k| format!("{metric}@{k}")));
    }
    h
}

fn emit_csv(report: &EvalReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header(&report.ks))
        .expect("in-memory write");
    for row in &report.rows {
        let mut rec = vec![row.qtype.clone(), row.system.clone()];
        for values in [&row.precision, &row.recall, &row.f1] {
            rec.extend(values.iter().map(|v| format!("{v:.4}")));
        }
        w.write_record(rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub const RADAR_AXES: [&str; 5] = [
    "Global Precision",
    "Global Recall",
    "Global F1-Score",
    "Inv.Time",
    "Inv.Memory",
];
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

fn radar_values(s: &SystemSummary) -> [f64; 5] {
    [
        s.global.precision,
        s.global.recall,
        s.global.f1,
        s.inv_time,
        s.inv_memory,
    ]
}

fn emit_svg(report: &EvalReport) -> Vec<u8> {
    const SIZE: f64 = 480.0;
    const C: f64 = SIZE / 2.0;
    const R: f64 = 160.0;
    let point = |axis: usize, v: f64| {
        let angle = -std::f64::consts::FRAC_PI_2 + axis as f64 * std::f64::consts::TAU / 5.0;
        let v = v.clamp(0.0, 1.0);
        (C + R * v * angle.cos(), C + R * v * angle.sin())
    };
    let polygon = |values: &[f64]| {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (x, y) = point(i, *v);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    for level in [0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r##"  <polygon points="{}" fill="none" stroke="#cccccc"/>"##,
            polygon(&[level; 5])
        );
    }
    for (i, label) in RADAR_AXES.iter().enumerate() {
        let (x, y) = point(i, 1.0);
        let (lx, ly) = point(i, 1.12);
        let _ = writeln!(
            s,
            r##"  <line x1="{C:.2}" y1="{C:.2}" x2="{x:.2}" y2="{y:.2}" stroke="#999999"/>"##
        );
        let _ = writeln!(
            s,
            r#"  <text x="{lx:.2}" y="{ly:.2}" text-anchor="middle">{label}</text>"#
        );
    }
    for (i, sys) in report.systems.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"  <polygon class="system" data-system="{}" points="{}" fill="{color}" fill-opacity="0.2" stroke="{color}" stroke-width="2"/>"#,
            xml_escape(&sys.system),
            polygon(&radar_values(sys))
        );
        let _ = writeln!(
            s,
            r#"  <text x="10" y="{}" fill="{color}">{}</text>"#,
            20 + 16 * i,
            xml_escape(&sys.system)
        );
    }
    s.push_str("</svg>\n");
    s.into_bytes()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn emit_report(report: &EvalReport, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => emit_csv(report),
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(report).expect("report serializes");
            v.push(b'\n');
            v
        }
        Format::Svg => emit_svg(report),
    }
}

/// Aligned text grid for terminals.
pub fn render_grid(report: &EvalReport) -> String {
    let header = csv_header(&report.ks);
    let mut lines: Vec<Vec<String>> = vec![header];
    for row in &report.rows {
        let mut l = vec![row.qtype.clone(), row.system.clone()];
        for values in [&row.precision, &row.recall, &row.f1] {
            l.extend(values.iter().map(|v| format!("{v:.2}")));
        }
        lines.push(l);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:<w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out.push('\n');
    out.push_str(
        "system      global-p  global-r  global-f1  inv-time  inv-memory  avg-latency-s  match\n",
    );
    for s in &report.systems {
        let _ = writeln!(
            out,
            "{:<10}  {:<8.2}  {:<8.2}  {:<9.2}  {:<8.2}  {:<10.2}  {:<13.6}  {}",
            s.system,
            s.global.precision,
            s.global.recall,
            s.global.f1,
            s.inv_time,
            s.inv_memory,
            s.avg_latency_secs,
            match s.match_mode {
                MatchMode::Exact => "exact",
                MatchMode::Containment => "containment",
            }
        );
    }
    out
}
