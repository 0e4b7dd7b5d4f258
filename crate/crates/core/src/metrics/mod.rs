//! RGB base metrics and their lift to RGBA by background averaging.
//!
//! A pairwise metric `M3(a, b)` on RGB images becomes an RGBA metric by
//! blending both images over every canonical background, averaging the
//! per-pair scores for each background, and then averaging the nine
//! per-background means.

mod fid;

pub use fid::{frechet_distance, gaussian_stats, FeatureSet, GaussianStats, SqrtMethod};

use alloc::string::String;
use alloc::vec::Vec;

use crate::numeric::CompensatedSum;
use crate::{blend, CanonicalBackgroundSet, Error, Result, RgbImage, RgbaImage};

/// Whether larger or smaller scores are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Direction {
    /// Whether moving from `baseline` by `delta` is an improvement.
    pub fn improved(self, delta: f64) -> bool {
        match self {
            Direction::HigherBetter => delta > 0.0,
            Direction::LowerBetter => delta < 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MetricKind {
    /// Scored per image pair.
    Pairwise,
    /// Scored per image set (FID).
    SetLevel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricDescriptor {
    pub name: String,
    pub direction: Direction,
    pub kind: MetricKind,
}

impl MetricDescriptor {
    pub fn pairwise(name: &str, direction: Direction) -> Self {
        Self {
            name: name.into(),
            direction,
            kind: MetricKind::Pairwise,
        }
    }
}

/// A three-channel metric scored on one `(ground truth, prediction)` pair.
pub trait PairwiseMetric {
    fn descriptor(&self) -> MetricDescriptor;
    fn score(&self, gt: &RgbImage, pred: &RgbImage) -> Result<f64>;
}

fn check_same_dims(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    Ok(())
}

/// Mean squared difference over all pixels and channels.
pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    check_same_dims(a, b)?;
    let s: CompensatedSum = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .collect();
    Ok(s.value() / a.data().len() as f64)
}

/// Smallest MSE used by [`psnr`]; caps the score at 120 dB for unit peak.
pub const MSE_FLOOR: f64 = 1e-12;

pub fn psnr(a: &RgbImage, b: &RgbImage, peak: f64) -> Result<f64> {
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::InvalidArgument(alloc::format!(
            "peak must be positive, got {peak}"
        )));
    }
    let m = mse(a, b)?;
    Ok(10.0 * libm::log10(peak * peak / m.max(MSE_FLOOR)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub peak: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            peak: 1.0,
        }
    }
}

impl SsimParams {
    /// Normalised 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn taps(&self) -> Vec<f64> {
        let c = (self.window as f64 - 1.0) / 2.0;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - c;
                libm::exp(-d * d / (2.0 * self.sigma * self.sigma))
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

/// Gaussian-windowed SSIM averaged over valid window positions and the three
/// channels.
pub fn ssim(a: &RgbImage, b: &RgbImage, params: &SsimParams) -> Result<f64> {
    check_same_dims(a, b)?;
    let k = params.window;
    let (w, h) = a.dims();
    if k == 0 || w < k || h < k {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            window: k,
        });
    }
    let taps = params.taps();
    let c1 = (params.k1 * params.peak) * (params.k1 * params.peak);
    let c2 = (params.k2 * params.peak) * (params.k2 * params.peak);
    let (ow, oh) = (w - k + 1, h - k + 1);

    let mut total = 0.0;
    for c in 0..3 {
        let x = a.channel(c);
        let y = b.channel(c);
        // Horizontal pass: five moment maps over (h rows x ow columns).
        let mut hm = [
            alloc::vec![0.0f64; h * ow],
            alloc::vec![0.0f64; h * ow],
            alloc::vec![0.0f64; h * ow],
            alloc::vec![0.0f64; h * ow],
            alloc::vec![0.0f64; h * ow],
        ];
        for r in 0..h {
            let xr = &x[r * w..(r + 1) * w];
            let yr = &y[r * w..(r + 1) * w];
            for col in 0..ow {
                let mut acc = [0.0f64; 5];
                for (t, &wt) in taps.iter().enumerate() {
                    let xv = xr[col + t] as f64;
                    let yv = yr[col + t] as f64;
                    acc[0] += wt * xv;
                    acc[1] += wt * yv;
                    acc[2] += wt * (xv * xv);
                    acc[3] += wt * (yv * yv);
                    acc[4] += wt * (xv * yv);
                }
                for (m, v) in hm.iter_mut().zip(acc) {
                    m[r * ow + col] = v;
                }
            }
        }
        let mut channel_sum = CompensatedSum::new();
        for r in 0..oh {
            for col in 0..ow {
                let mut acc = [0.0f64; 5];
                for (t, &wt) in taps.iter().enumerate() {
                    let idx = (r + t) * ow + col;
                    for (s, m) in acc.iter_mut().zip(&hm) {
                        *s += wt * m[idx];
                    }
                }
                let [mx, my, exx, eyy, exy] = acc;
                let vx = exx - mx * mx;
                let vy = eyy - my * my;
                let cov = exy - mx * my;
                let num = (2.0 * (mx * my) + c1) * (2.0 * cov + c2);
                let den = ((mx * mx + my * my) + c1) * ((vx + vy) + c2);
                channel_sum.add(num / den);
            }
        }
        total += channel_sum.value() / (ow * oh) as f64;
    }
    Ok(total / 3.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mse;

impl PairwiseMetric for Mse {
    fn descriptor(&self) -> MetricDescriptor {
        MetricDescriptor::pairwise("MSE", Direction::LowerBetter)
    }

    fn score(&self, gt: &RgbImage, pred: &RgbImage) -> Result<f64> {
        mse(gt, pred)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psnr {
    pub peak: f64,
}

impl Default for Psnr {
    fn default() -> Self {
        Self { peak: 1.0 }
    }
}

impl PairwiseMetric for Psnr {
    fn descriptor(&self) -> MetricDescriptor {
        MetricDescriptor::pairwise("PSNR", Direction::HigherBetter)
    }

    fn score(&self, gt: &RgbImage, pred: &RgbImage) -> Result<f64> {
        psnr(gt, pred, self.peak)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Ssim {
    pub params: SsimParams,
}

impl PairwiseMetric for Ssim {
    fn descriptor(&self) -> MetricDescriptor {
        MetricDescriptor::pairwise("SSIM", Direction::HigherBetter)
    }

    fn score(&self, gt: &RgbImage, pred: &RgbImage) -> Result<f64> {
        ssim(gt, pred, &self.params)
    }
}

/// Per-background values of an RGBA-lifted metric plus their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct M4Result {
    pub metric: String,
    pub direction: Direction,
    /// Indexed like [`CanonicalBackgroundSet::COLORS`].
    pub per_background: [f64; 9],
    pub overall: f64,
}

impl M4Result {
    pub fn new(metric: &str, direction: Direction, per_background: [f64; 9]) -> Self {
        let overall = mean_of_nine(&per_background);
        Self {
            metric: metric.into(),
            direction,
            per_background,
            overall,
        }
    }

    pub fn labelled(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        CanonicalBackgroundSet::labels().into_iter().zip(self.per_background)
    }

    /// Reduces per-pair scores (`scores[background][pair]`) in fixed
    /// background-then-pair order.
    pub fn from_scores(metric: &str, direction: Direction, scores: &[Vec<f64>]) -> Result<Self> {
        if scores.len() != CanonicalBackgroundSet::LEN {
            return Err(Error::WrongCount {
                expected: CanonicalBackgroundSet::LEN,
                found: scores.len(),
            });
        }
        let mut per_background = [0.0; 9];
        for (slot, pair_scores) in per_background.iter_mut().zip(scores) {
            if pair_scores.is_empty() {
                return Err(Error::EmptyInput("per-background pair scores"));
            }
            *slot = mean_in_order(pair_scores);
        }
        Ok(Self::new(metric, direction, per_background))
    }
}

fn mean_in_order(values: &[f64]) -> f64 {
    let mut s = 0.0;
    for &v in values {
        s += v;
    }
    s / values.len() as f64
}

fn mean_of_nine(values: &[f64; 9]) -> f64 {
    mean_in_order(values)
}

/// Arithmetic mean of exactly nine per-background scores.
pub fn aggregate_overall(per_background: &[f64]) -> Result<f64> {
    let nine: &[f64; 9] = per_background.try_into().map_err(|_| Error::WrongCount {
        expected: CanonicalBackgroundSet::LEN,
        found: per_background.len(),
    })?;
    Ok(mean_of_nine(nine))
}

/// Lifts a pairwise RGB metric to RGBA over the canonical backgrounds.
pub fn extend_metric<M: PairwiseMetric + ?Sized>(
    metric: &M,
    gt: &[RgbaImage],
    pred: &[RgbaImage],
    backgrounds: &CanonicalBackgroundSet,
) -> Result<M4Result> {
    check_pairs(gt, pred)?;
    let mut scores = Vec::with_capacity(CanonicalBackgroundSet::LEN);
    for bg in backgrounds.iter() {
        let bg = bg.into();
        let mut row = Vec::with_capacity(gt.len());
        for (x, xhat) in gt.iter().zip(pred) {
            row.push(metric.score(&blend(x, &bg)?, &blend(xhat, &bg)?)?);
        }
        scores.push(row);
    }
    let d = metric.descriptor();
    M4Result::from_scores(&d.name, d.direction, &scores)
}

/// Validates that two image sets are aligned, non-empty and pairwise
/// same-sized.
pub fn check_pairs(gt: &[RgbaImage], pred: &[RgbaImage]) -> Result<()> {
    if gt.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gt.len(),
            right: pred.len(),
        });
    }
    if gt.is_empty() {
        return Err(Error::EmptyInput("image pairs"));
    }
    for (x, xhat) in gt.iter().zip(pred) {
        if x.dims() != xhat.dims() {
            return Err(Error::DimensionMismatch {
                expected: x.dims(),
                found: xhat.dims(),
            });
        }
    }
    Ok(())
}
