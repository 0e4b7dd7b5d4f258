//! Benchmark orchestration: pair matching, per-background scoring over a
//! worker pool, FID from feature files, plugin scorers and report assembly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use alphabench_core::metrics::{
    check_pairs, frechet_distance, gaussian_stats, Direction, M4Result, Mse, PairwiseMetric, Psnr, SqrtMethod, Ssim,
};
use alphabench_core::report::{MetricReport, MetricRow, SubtypeReport};
use alphabench_core::{blend, Background, CanonicalBackgroundSet, RgbaImage};
use rayon::prelude::*;

use crate::afs::{check_compatible, FeatureFile};
use crate::io::{load_rgba, save_rgb, BitDepth};
use crate::plugin::{run_plugin, PluginSpec};
use crate::{Error, Result};

/// Metrics computed in-process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinMetric {
    Mse,
    Psnr,
    Ssim,
}

impl BuiltinMetric {
    fn scorer(self) -> Box<dyn PairwiseMetric + Send + Sync> {
        match self {
            BuiltinMetric::Mse => Box::new(Mse),
            BuiltinMetric::Psnr => Box::new(Psnr::default()),
            BuiltinMetric::Ssim => Box::new(Ssim::default()),
        }
    }
}

impl std::str::FromStr for BuiltinMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(BuiltinMetric::Mse),
            "psnr" => Ok(BuiltinMetric::Psnr),
            "ssim" => Ok(BuiltinMetric::Ssim),
            other => Err(Error::Input(format!(
                "unknown metric {other:?}; expected mse, psnr or ssim"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub dataset: String,
    pub gt_dir: PathBuf,
    pub pred_dir: PathBuf,
    pub metrics: Vec<BuiltinMetric>,
    /// Directory holding `gt_<background>.afs` and `pred_<background>.afs`,
    /// rows in sorted-stem order; enables rFID.
    pub features_dir: Option<PathBuf>,
    pub plugins: Vec<PluginSpec>,
    /// CSV of `stem,label` lines driving subtype breakdowns.
    pub labels: Option<PathBuf>,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
}

impl EvalConfig {
    pub fn new(dataset: impl Into<String>, gt_dir: impl Into<PathBuf>, pred_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            gt_dir: gt_dir.into(),
            pred_dir: pred_dir.into(),
            metrics: Vec::new(),
            features_dir: None,
            plugins: Vec::new(),
            labels: None,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePair {
    pub stem: String,
    pub gt: PathBuf,
    pub pred: PathBuf,
}

fn png_stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if !is_png || !path.is_file() {
            continue;
        }
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            return Err(Error::Input(format!(
                "duplicate stem {stem:?}: {} and {}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Matches PNG files by exact stem; any unmatched file is an error. Pairs
/// come back sorted by stem.
pub fn match_pairs(gt_dir: &Path, pred_dir: &Path) -> Result<Vec<ImagePair>> {
    let gt = png_stems(gt_dir)?;
    let mut pred = png_stems(pred_dir)?;
    let mut pairs = Vec::with_capacity(gt.len());
    let mut missing = Vec::new();
    for (stem, g) in gt {
        match pred.remove(&stem) {
            Some(p) => pairs.push(ImagePair { stem, gt: g, pred: p }),
            None => missing.push(stem),
        }
    }
    if !missing.is_empty() || !pred.is_empty() {
        let extra: Vec<&String> = pred.keys().collect();
        return Err(Error::Input(format!(
            "unmatched files: missing predictions for {missing:?}, predictions without ground truth {extra:?}"
        )));
    }
    if pairs.is_empty() {
        return Err(Error::Input(format!("no PNG files in {}", gt_dir.display())));
    }
    Ok(pairs)
}

/// Per-pair scores of one metric, `scores[background][pair]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub metric: String,
    pub direction: Direction,
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn reduce(&self) -> Result<M4Result> {
        Ok(M4Result::from_scores(&self.metric, self.direction, &self.scores)?)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            metric: self.metric.clone(),
            direction: self.direction,
            scores: self
                .scores
                .iter()
                .map(|row| indices.iter().map(|&i| row[i]).collect())
                .collect(),
        }
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Input(format!("cannot build worker pool: {e}")))
}

/// Scores every (background, pair) item with each metric. Items are scored
/// independently and collected in index order, so the tables do not depend
/// on the worker count.
pub fn score_pairs(
    gt: &[RgbaImage],
    pred: &[RgbaImage],
    metrics: &[BuiltinMetric],
    threads: usize,
) -> Result<Vec<ScoreTable>> {
    check_pairs(gt, pred)?;
    let scorers: Vec<_> = metrics.iter().map(|m| m.scorer()).collect();
    let backgrounds: Vec<Background> = CanonicalBackgroundSet.iter().map(Background::from).collect();
    let n = gt.len();
    let items: Vec<Vec<f64>> = pool(threads)?.install(|| {
        (0..backgrounds.len() * n)
            .into_par_iter()
            .map(|item| {
                let (b, i) = (item / n, item % n);
                let x = blend(&gt[i], &backgrounds[b])?;
                let xh = blend(&pred[i], &backgrounds[b])?;
                scorers.iter().map(|s| s.score(&x, &xh)).collect()
            })
            .collect::<alphabench_core::Result<_>>()
    })?;
    Ok(scorers
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let d = s.descriptor();
            ScoreTable {
                metric: d.name,
                direction: d.direction,
                scores: (0..backgrounds.len())
                    .map(|b| (0..n).map(|i| items[b * n + i][k]).collect())
                    .collect(),
            }
        })
        .collect())
}

/// In-memory evaluation with the built-in metrics.
pub fn evaluate(
    gt: &[RgbaImage],
    pred: &[RgbaImage],
    metrics: &[BuiltinMetric],
    threads: usize,
) -> Result<Vec<M4Result>> {
    score_pairs(gt, pred, metrics, threads)?
        .iter()
        .map(ScoreTable::reduce)
        .collect()
}

/// Feature files for one background.
#[derive(Debug, Clone)]
pub struct BackgroundFeatures {
    pub gt: FeatureFile,
    pub pred: FeatureFile,
}

pub fn feature_paths(dir: &Path, background: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("gt_{background}.afs")),
        dir.join(format!("pred_{background}.afs")),
    )
}

pub fn load_features(dir: &Path, n_pairs: usize) -> Result<Vec<BackgroundFeatures>> {
    CanonicalBackgroundSet::labels()
        .iter()
        .map(|label| {
            let (g, p) = feature_paths(dir, label);
            for path in [&g, &p] {
                if !path.is_file() {
                    return Err(Error::Input(format!("missing feature file {}", path.display())));
                }
            }
            let (gt, pred) = (FeatureFile::read(&g)?, FeatureFile::read(&p)?);
            check_compatible(&gt, &pred)?;
            for (f, path) in [(&gt, &g), (&pred, &p)] {
                if f.features.len() != n_pairs {
                    return Err(Error::Input(format!(
                        "{} has {} rows, expected one per pair ({n_pairs})",
                        path.display(),
                        f.features.len()
                    )));
                }
            }
            Ok(BackgroundFeatures { gt, pred })
        })
        .collect()
}

/// rFID per background over the selected rows (all rows when `None`).
pub fn fid_result(features: &[BackgroundFeatures], rows: Option<&[usize]>) -> Result<M4Result> {
    let mut values = [0.0; 9];
    for (v, f) in values.iter_mut().zip(features) {
        let (g, p) = match rows {
            Some(r) => (f.gt.features.select(r)?, f.pred.features.select(r)?),
            None => (f.gt.features.clone(), f.pred.features.clone()),
        };
        *v = frechet_distance(&gaussian_stats(&g)?, &gaussian_stats(&p)?, SqrtMethod::Eigen)?;
    }
    Ok(M4Result::new("rFID", Direction::LowerBetter, values))
}

/// Blends every pair over each background, writes 16-bit PNGs under
/// `workdir` and scores them with one plugin call per background.
pub fn score_plugin(
    spec: &PluginSpec,
    gt: &[RgbaImage],
    pred: &[RgbaImage],
    workdir: &Path,
    threads: usize,
) -> Result<ScoreTable> {
    check_pairs(gt, pred)?;
    let run_one = |(b, named): (usize, alphabench_core::NamedBackground)| -> Result<Vec<f64>> {
        let dir = workdir.join(format!("{}-{b}-{}", spec.name, named.name));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let bg = Background::from(named);
        let mut pairs = Vec::with_capacity(gt.len());
        for (i, (x, xh)) in gt.iter().zip(pred).enumerate() {
            let (gp, pp) = (dir.join(format!("{i:06}_gt.png")), dir.join(format!("{i:06}_pred.png")));
            save_rgb(&gp, &blend(x, &bg)?, BitDepth::Sixteen)?;
            save_rgb(&pp, &blend(xh, &bg)?, BitDepth::Sixteen)?;
            pairs.push((gp, pp));
        }
        run_plugin(spec, &pairs, &dir)
    };
    let jobs: Vec<_> = CanonicalBackgroundSet.iter().enumerate().collect();
    let scores = if spec.reentrant {
        pool(threads)?.install(|| jobs.into_par_iter().map(run_one).collect::<Result<Vec<_>>>())?
    } else {
        jobs.into_iter().map(run_one).collect::<Result<Vec<_>>>()?
    };
    Ok(ScoreTable {
        metric: spec.name.clone(),
        direction: spec.direction,
        scores,
    })
}

/// Reads a `stem,label` CSV (an optional `stem,label` header is skipped).
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.eq_ignore_ascii_case("stem,label")) {
            continue;
        }
        let Some((stem, label)) = line.split_once(',') else {
            return Err(Error::format(path, format!("line {}: expected stem,label", n + 1)));
        };
        if out.insert(stem.trim().to_owned(), label.trim().to_owned()).is_some() {
            return Err(Error::format(path, format!("stem {:?} labelled twice", stem.trim())));
        }
    }
    Ok(out)
}

/// Groups pair indices by label; every labelled stem must be a known pair.
fn label_groups(pairs: &[ImagePair], labels: &BTreeMap<String, String>) -> Result<BTreeMap<String, Vec<usize>>> {
    let index: BTreeMap<&str, usize> = pairs.iter().enumerate().map(|(i, p)| (p.stem.as_str(), i)).collect();
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (stem, label) in labels {
        let &i = index
            .get(stem.as_str())
            .ok_or_else(|| Error::Input(format!("labels name unknown stem {stem:?}")))?;
        groups.entry(label.clone()).or_default().push(i);
    }
    for g in groups.values_mut() {
        g.sort_unstable();
    }
    Ok(groups)
}

/// Runs the configured metrics over matched directories.
pub fn run_eval(config: &EvalConfig) -> Result<MetricReport> {
    if config.metrics.is_empty() && config.features_dir.is_none() && config.plugins.is_empty() {
        return Err(Error::Input("no metrics requested".into()));
    }
    let pairs = match_pairs(&config.gt_dir, &config.pred_dir)?;
    let (gt, pred): (Vec<RgbaImage>, Vec<RgbaImage>) = pool(config.threads)?.install(|| {
        pairs
            .par_iter()
            .map(|p| Ok((load_rgba(&p.gt)?, load_rgba(&p.pred)?)))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().unzip())
    })?;

    let mut tables = score_pairs(&gt, &pred, &config.metrics, config.threads)?;
    if !config.plugins.is_empty() {
        let work = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        for spec in &config.plugins {
            tables.push(score_plugin(spec, &gt, &pred, work.path(), config.threads)?);
        }
    }
    let features = match &config.features_dir {
        Some(dir) => Some(load_features(dir, pairs.len())?),
        None => None,
    };

    let rows_for = |indices: Option<&[usize]>| -> Result<Vec<MetricRow>> {
        let mut rows = Vec::with_capacity(tables.len() + 1);
        for t in &tables {
            let r = match indices {
                Some(ix) => t.subset(ix).reduce()?,
                None => t.reduce()?,
            };
            rows.push(MetricRow::from_m4(&r));
        }
        if let Some(f) = &features {
            rows.push(MetricRow::from_m4(&fid_result(f, indices)?));
        }
        Ok(rows)
    };

    let mut report = MetricReport::new(config.dataset.clone());
    report.rows = rows_for(None)?;
    if let Some(path) = &config.labels {
        for (label, indices) in label_groups(&pairs, &read_labels(path)?)? {
            report.subtypes.push(SubtypeReport {
                label,
                rows: rows_for(Some(&indices))?,
            });
        }
    }
    Ok(report)
}
