//! Background pixel distribution moments and channel histograms.

use alloc::vec;
use alloc::vec::Vec;

use crate::numeric::CompensatedSum;
use crate::{Domain, Error, Result, RgbImage};

/// Per-channel first and second raw moments of a background distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BackgroundMoments {
    pub domain: Domain,
    /// `E[b]` per channel.
    pub mean: [f64; 3],
    /// `E[b^2]` per channel.
    pub second_raw: [f64; 3],
    pub sample_count: u64,
}

const MOMENT_SLACK: f64 = 1e-12;

impl BackgroundMoments {
    pub fn new(domain: Domain, mean: [f64; 3], second_raw: [f64; 3], sample_count: u64) -> Result<Self> {
        let m = Self {
            domain,
            mean,
            second_raw,
            sample_count,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks range and variance-nonnegativity invariants.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.domain.range();
        for c in 0..3 {
            let (m, s) = (self.mean[c], self.second_raw[c]);
            if !m.is_finite() || !s.is_finite() {
                return Err(Error::NonFinite(c));
            }
            if m < lo as f64 - MOMENT_SLACK || m > hi as f64 + MOMENT_SLACK {
                return Err(Error::OutOfRange {
                    index: c,
                    value: m,
                    min: lo as f64,
                    max: hi as f64,
                });
            }
            if !(-MOMENT_SLACK..=1.0 + MOMENT_SLACK).contains(&s) {
                return Err(Error::OutOfRange {
                    index: 3 + c,
                    value: s,
                    min: 0.0,
                    max: 1.0,
                });
            }
            if s - m * m < -MOMENT_SLACK {
                return Err(Error::InvalidArgument(alloc::format!(
                    "channel {c}: second raw moment {s} below squared mean {}",
                    m * m
                )));
            }
        }
        Ok(())
    }

    pub fn variance(&self) -> [f64; 3] {
        core::array::from_fn(|c| self.second_raw[c] - self.mean[c] * self.mean[c])
    }

    pub fn require_domain(&self, domain: Domain) -> Result<()> {
        if self.domain != domain {
            return Err(Error::DomainMismatch {
                expected: domain,
                found: self.domain,
            });
        }
        Ok(())
    }
}

/// ImageNet training-split background statistics in the signed domain, as
/// published (four decimals).
pub fn default_moments() -> BackgroundMoments {
    BackgroundMoments {
        domain: Domain::Signed,
        mean: [-0.0357, -0.0811, -0.1797],
        second_raw: [0.3163, 0.3060, 0.3634],
        sample_count: 0,
    }
}

/// Streaming moment accumulator. Partials from disjoint corpus shards can be
/// merged; merge them in corpus order for reproducible output.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    domain: Domain,
    sum: [CompensatedSum; 3],
    sum_sq: [CompensatedSum; 3],
    pixels: u64,
}

impl MomentAccumulator {
    pub fn new(domain: Domain) -> Self {
        Self {
            domain,
            sum: [CompensatedSum::new(); 3],
            sum_sq: [CompensatedSum::new(); 3],
            pixels: 0,
        }
    }

    pub fn push(&mut self, image: &RgbImage) {
        for c in 0..3 {
            for &v in image.channel(c) {
                let b = self.domain.from_unit(v) as f64;
                self.sum[c].add(b);
                self.sum_sq[c].add(b * b);
            }
        }
        self.pixels += image.pixel_count() as u64;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if other.domain != self.domain {
            return Err(Error::DomainMismatch {
                expected: self.domain,
                found: other.domain,
            });
        }
        for c in 0..3 {
            self.sum[c].merge(&other.sum[c]);
            self.sum_sq[c].merge(&other.sum_sq[c]);
        }
        self.pixels += other.pixels;
        Ok(())
    }

    pub fn pixel_count(&self) -> u64 {
        self.pixels
    }

    pub fn finish(&self) -> Result<BackgroundMoments> {
        if self.pixels == 0 {
            return Err(Error::EmptyInput("moment corpus"));
        }
        let n = self.pixels as f64;
        let mean = core::array::from_fn(|c| self.sum[c].value() / n);
        let second_raw = core::array::from_fn(|c| self.sum_sq[c].value() / n);
        BackgroundMoments::new(self.domain, mean, second_raw, self.pixels)
    }
}

/// Estimates per-channel `E[b]` and `E[b^2]` over every pixel of a corpus.
/// Pixels are converted into `domain` before accumulation.
pub fn estimate_moments<'a, I>(corpus: I, domain: Domain) -> Result<BackgroundMoments>
where
    I: IntoIterator<Item = &'a RgbImage>,
{
    let mut acc = MomentAccumulator::new(domain);
    for img in corpus {
        acc.push(img);
    }
    acc.finish()
}

/// Per-channel counts of unit-domain pixel values. Bin `i` covers
/// `[i / bins, (i + 1) / bins)`; the last bin is closed at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelHistogram {
    pub domain: Domain,
    pub bins: usize,
    counts: Vec<u64>,
}

impl ChannelHistogram {
    pub fn new(bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "histogram needs at least 2 bins, got {bins}"
            )));
        }
        Ok(Self {
            domain: Domain::Unit,
            bins,
            counts: vec![0; 3 * bins],
        })
    }

    #[inline]
    pub fn bin_of(&self, v: f32) -> usize {
        let b = (v as f64 * self.bins as f64) as usize;
        b.min(self.bins - 1)
    }

    pub fn push(&mut self, image: &RgbImage) {
        for c in 0..3 {
            for &v in image.channel(c) {
                let b = self.bin_of(v);
                self.counts[c * self.bins + b] += 1;
            }
        }
    }

    pub fn counts(&self, channel: usize) -> &[u64] {
        &self.counts[channel * self.bins..(channel + 1) * self.bins]
    }

    pub fn total(&self, channel: usize) -> u64 {
        self.counts(channel).iter().sum()
    }

    /// Lower edge of bin `i` in the unit domain.
    pub fn lower_edge(&self, i: usize) -> f64 {
        i as f64 / self.bins as f64
    }
}

pub fn histogram<'a, I>(corpus: I, bins: usize) -> Result<ChannelHistogram>
where
    I: IntoIterator<Item = &'a RgbImage>,
{
    let mut h = ChannelHistogram::new(bins)?;
    let mut any = false;
    for img in corpus {
        h.push(img);
        any = true;
    }
    if !any {
        return Err(Error::EmptyInput("histogram corpus"));
    }
    Ok(h)
}
