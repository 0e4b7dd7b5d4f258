//! Per-background result tables and baseline/candidate comparisons.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::metrics::{Direction, M4Result};
use crate::{CanonicalBackgroundSet, Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BackgroundValue {
    pub background: String,
    pub value: f64,
}

/// One metric's nine per-background values (canonical order) and overall.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricRow {
    pub metric: String,
    pub direction: Direction,
    pub per_background: Vec<BackgroundValue>,
    pub overall: f64,
}

fn canonical_values<'a, I>(named: I) -> Result<Vec<BackgroundValue>>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut slots: [Option<f64>; 9] = [None; 9];
    for (name, value) in named {
        let i = CanonicalBackgroundSet::index_of(name)
            .ok_or_else(|| Error::ReportMismatch(format!("unknown background {name:?}")))?;
        if slots[i].replace(value).is_some() {
            return Err(Error::DuplicateName(name.into()));
        }
    }
    CanonicalBackgroundSet::labels()
        .into_iter()
        .zip(slots)
        .map(|(label, v)| {
            v.map(|value| BackgroundValue {
                background: label.into(),
                value,
            })
            .ok_or_else(|| Error::ReportMismatch(format!("missing background {label:?}")))
        })
        .collect()
}

impl MetricRow {
    /// Builds a row from named values in any order; the overall is their
    /// mean.
    pub fn from_values<'a, I>(metric: &str, direction: Direction, named: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let per_background = canonical_values(named)?;
        let values: Vec<f64> = per_background.iter().map(|b| b.value).collect();
        let overall = crate::metrics::aggregate_overall(&values)?;
        Ok(Self {
            metric: metric.into(),
            direction,
            per_background,
            overall,
        })
    }

    /// Builds a row with an externally stated overall, e.g. one transcribed
    /// from a published table at its printed precision.
    pub fn with_overall<'a, I>(metric: &str, direction: Direction, named: I, overall: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        Ok(Self {
            metric: metric.into(),
            direction,
            per_background: canonical_values(named)?,
            overall,
        })
    }

    pub fn from_m4(r: &M4Result) -> Self {
        Self {
            metric: r.metric.clone(),
            direction: r.direction,
            per_background: r
                .labelled()
                .map(|(background, value)| BackgroundValue {
                    background: background.into(),
                    value,
                })
                .collect(),
            overall: r.overall,
        }
    }

    pub fn value(&self, background: &str) -> Option<f64> {
        self.per_background
            .iter()
            .find(|b| b.background == background)
            .map(|b| b.value)
    }

    /// Checks canonical labels and order, and that the overall equals the
    /// per-background mean within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let labels = CanonicalBackgroundSet::labels();
        if self.per_background.len() != labels.len()
            || self.per_background.iter().zip(labels).any(|(b, l)| b.background != l)
        {
            return Err(Error::ReportMismatch(format!(
                "{}: backgrounds are not the canonical nine in order",
                self.metric
            )));
        }
        let values: Vec<f64> = self.per_background.iter().map(|b| b.value).collect();
        let mean = crate::metrics::aggregate_overall(&values)?;
        if libm::fabs(mean - self.overall) > tol {
            return Err(Error::ReportMismatch(format!(
                "{}: overall {} differs from background mean {mean}",
                self.metric, self.overall
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubtypeReport {
    pub label: String,
    pub rows: Vec<MetricRow>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub dataset: String,
    pub rows: Vec<MetricRow>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub subtypes: Vec<SubtypeReport>,
}

impl MetricReport {
    pub fn new(dataset: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            rows: Vec::new(),
            subtypes: Vec::new(),
        }
    }

    pub fn row(&self, metric: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        self.rows
            .iter()
            .chain(self.subtypes.iter().flat_map(|s| &s.rows))
            .try_for_each(|r| r.validate(tol))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeltaCell {
    pub background: String,
    pub baseline: f64,
    pub candidate: f64,
    /// `candidate - baseline`.
    pub delta: f64,
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeltaRow {
    pub metric: String,
    pub direction: Direction,
    pub per_background: Vec<DeltaCell>,
    pub overall: DeltaCell,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    pub rows: Vec<DeltaRow>,
}

impl Comparison {
    pub fn row(&self, metric: &str) -> Option<&DeltaRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

fn cell(background: &str, direction: Direction, baseline: f64, candidate: f64) -> DeltaCell {
    let delta = candidate - baseline;
    DeltaCell {
        background: background.into(),
        baseline,
        candidate,
        delta,
        improved: direction.improved(delta),
    }
}

fn compare_rows(b: &MetricRow, c: &MetricRow) -> Result<DeltaRow> {
    if b.direction != c.direction {
        return Err(Error::ReportMismatch(format!("{}: metric directions differ", b.metric)));
    }
    if b.per_background.len() != c.per_background.len() {
        return Err(Error::ReportMismatch(format!("{}: background counts differ", b.metric)));
    }
    let per_background = b
        .per_background
        .iter()
        .zip(&c.per_background)
        .map(|(x, y)| {
            if x.background != y.background {
                return Err(Error::ReportMismatch(format!(
                    "{}: background {:?} vs {:?}",
                    b.metric, x.background, y.background
                )));
            }
            Ok(cell(&x.background, b.direction, x.value, y.value))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeltaRow {
        metric: b.metric.clone(),
        direction: b.direction,
        per_background,
        overall: cell("overall", b.direction, b.overall, c.overall),
    })
}

/// Per-metric, per-background deltas for every metric in `baseline`. Both
/// reports must carry the same metrics and backgrounds.
pub fn compare(baseline: &MetricReport, candidate: &MetricReport) -> Result<Comparison> {
    if baseline.rows.len() != candidate.rows.len() {
        return Err(Error::ReportMismatch(format!(
            "metric counts differ: {} vs {}",
            baseline.rows.len(),
            candidate.rows.len()
        )));
    }
    let rows = baseline
        .rows
        .iter()
        .map(|b| {
            let c = candidate
                .row(&b.metric)
                .ok_or_else(|| Error::ReportMismatch(format!("metric {:?} missing from candidate", b.metric)))?;
            compare_rows(b, c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        baseline: baseline.dataset.clone(),
        candidate: candidate.dataset.clone(),
        rows,
    })
}
