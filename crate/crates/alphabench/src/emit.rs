//! Report and comparison serialization. JSON keeps full precision, CSV uses
//! shortest round-trip floats, markdown prints four decimals.

use std::fmt::Write;

use alphabench_core::report::{Comparison, DeltaCell, MetricReport, MetricRow};
use alphabench_core::CanonicalBackgroundSet;

use crate::config::to_json_string;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(Error::Input(format!(
                "unknown format {other:?}; expected json, csv or markdown"
            ))),
        }
    }
}

fn fixed4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        s.trim_start_matches('-').to_owned()
    } else {
        s
    }
}

fn signed4(v: f64) -> String {
    let s = fixed4(v);
    if s.starts_with('-') {
        s
    } else {
        format!("+{s}")
    }
}

pub fn report(r: &MetricReport, format: Format) -> String {
    match format {
        Format::Json => to_json_string(r),
        Format::Csv => report_csv(r),
        Format::Markdown => report_markdown(r),
    }
}

pub fn parse_report(text: &str) -> Result<MetricReport> {
    serde_json::from_str(text).map_err(|source| Error::Json {
        path: "<report>".into(),
        source,
    })
}

fn header(first: &str) -> String {
    let mut h = first.to_owned();
    for l in CanonicalBackgroundSet::labels() {
        h.push(',');
        h.push_str(l);
    }
    h.push_str(",overall\n");
    h
}

fn sections(r: &MetricReport) -> impl Iterator<Item = (&str, &[MetricRow])> {
    std::iter::once(("overall", r.rows.as_slice()))
        .chain(r.subtypes.iter().map(|s| (s.label.as_str(), s.rows.as_slice())))
}

fn report_csv(r: &MetricReport) -> String {
    let mut out = header("subset,metric,direction");
    for (subset, rows) in sections(r) {
        for row in rows {
            let _ = write!(out, "{subset},{},{}", row.metric, direction_str(row));
            for b in &row.per_background {
                let _ = write!(out, ",{}", b.value);
            }
            let _ = writeln!(out, ",{}", row.overall);
        }
    }
    out
}

fn direction_str(row: &MetricRow) -> &'static str {
    match row.direction {
        alphabench_core::metrics::Direction::HigherBetter => "higher-better",
        alphabench_core::metrics::Direction::LowerBetter => "lower-better",
    }
}

fn md_header(out: &mut String) {
    out.push_str("| Metric |");
    for l in CanonicalBackgroundSet::labels() {
        let _ = write!(out, " {l} |");
    }
    out.push_str(" overall |\n|---|");
    for _ in 0..=CanonicalBackgroundSet::LEN {
        out.push_str("---:|");
    }
    out.push('\n');
}

fn report_markdown(r: &MetricReport) -> String {
    let mut out = format!("## {}\n", r.dataset);
    for (subset, rows) in sections(r) {
        let _ = write!(out, "\n### {subset}\n\n");
        md_header(&mut out);
        for row in rows {
            let _ = write!(out, "| {} |", row.metric);
            for b in &row.per_background {
                let _ = write!(out, " {} |", fixed4(b.value));
            }
            let _ = writeln!(out, " {} |", fixed4(row.overall));
        }
    }
    out
}

pub fn comparison(c: &Comparison, format: Format) -> String {
    match format {
        Format::Json => to_json_string(c),
        Format::Csv => comparison_csv(c),
        Format::Markdown => comparison_markdown(c),
    }
}

fn comparison_csv(c: &Comparison) -> String {
    let mut out = String::from("metric,background,baseline,candidate,delta,improved\n");
    for row in &c.rows {
        for cell in row.per_background.iter().chain(std::iter::once(&row.overall)) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.metric, cell.background, cell.baseline, cell.candidate, cell.delta, cell.improved
            );
        }
    }
    out
}

fn md_cell(cell: &DeltaCell) -> String {
    format!("{} ({})", fixed4(cell.candidate), signed4(cell.delta))
}

fn comparison_markdown(c: &Comparison) -> String {
    let mut out = format!("## {} vs {}\n\n", c.candidate, c.baseline);
    md_header(&mut out);
    for row in &c.rows {
        let _ = write!(out, "| {} |", row.metric);
        for cell in &row.per_background {
            let _ = write!(out, " {} |", md_cell(cell));
        }
        let _ = writeln!(out, " {} |", md_cell(&row.overall));
    }
    out
}
