//! Monte-Carlo estimate of the blended squared error under a random
//! per-pixel background. Used as the reference for the closed form.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::numeric::RunningStats;
use crate::{BackgroundMoments, Error, Result, Rgba, ValueDomain};

/// A per-pixel, per-channel i.i.d. background distribution.
pub trait BackgroundSampler {
    /// Draws one background value for `channel`.
    fn sample<R: RngCore + ?Sized>(&self, channel: usize, rng: &mut R) -> f64;

    /// Discrete samplers with power-of-two outcome counts expose their
    /// outcome table so estimation can decode several draws per random byte.
    fn as_dyadic(&self) -> Option<&DyadicSampler> {
        None
    }
}

#[inline]
fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Always returns the same colour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSampler(pub [f64; 3]);

impl BackgroundSampler for ConstantSampler {
    fn sample<R: RngCore + ?Sized>(&self, channel: usize, _rng: &mut R) -> f64 {
        self.0[channel]
    }
}

/// Uniform on `[lo, hi)` per channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformSampler {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl UniformSampler {
    /// Uniform distribution with the given first and second raw moments.
    /// The support may extend outside the value domain.
    pub fn matching(m: &BackgroundMoments) -> Self {
        let var = m.variance();
        let half: [f64; 3] = core::array::from_fn(|c| libm::sqrt(3.0 * var[c].max(0.0)));
        Self {
            lo: core::array::from_fn(|c| m.mean[c] - half[c]),
            hi: core::array::from_fn(|c| m.mean[c] + half[c]),
        }
    }
}

impl BackgroundSampler for UniformSampler {
    fn sample<R: RngCore + ?Sized>(&self, channel: usize, rng: &mut R) -> f64 {
        let u = unit_f64(rng);
        self.lo[channel] + u * (self.hi[channel] - self.lo[channel])
    }
}

/// Normal per channel (Box–Muller).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSampler {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl GaussianSampler {
    pub fn matching(m: &BackgroundMoments) -> Self {
        let var = m.variance();
        Self {
            mean: m.mean,
            std: core::array::from_fn(|c| libm::sqrt(var[c].max(0.0))),
        }
    }
}

impl BackgroundSampler for GaussianSampler {
    fn sample<R: RngCore + ?Sized>(&self, channel: usize, rng: &mut R) -> f64 {
        let u1 = 1.0 - unit_f64(rng);
        let u2 = unit_f64(rng);
        let z = libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2);
        self.mean[channel] + self.std[channel] * z
    }
}

/// Discrete distribution whose `2^bits` outcomes are equally likely
/// (repeated outcomes encode dyadic probabilities). `bits` is 1, 2, 4 or 8.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSampler {
    bits: u32,
    outcomes: [Vec<f64>; 3],
}

impl DyadicSampler {
    pub fn new(bits: u32, outcomes: [Vec<f64>; 3]) -> Result<Self> {
        if ![1, 2, 4, 8].contains(&bits) {
            return Err(Error::InvalidArgument(alloc::format!(
                "dyadic sampler bits must be 1, 2, 4 or 8, got {bits}"
            )));
        }
        for o in &outcomes {
            if o.len() != 1usize << bits {
                return Err(Error::WrongCount {
                    expected: 1 << bits,
                    found: o.len(),
                });
            }
            if let Some(i) = o.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self { bits, outcomes })
    }

    fn from_standardized(m: &BackgroundMoments, bits: u32, z: &[f64]) -> Self {
        let var = m.variance();
        let outcomes = core::array::from_fn(|c| {
            let s = libm::sqrt(var[c].max(0.0));
            z.iter().map(|&z| m.mean[c] + s * z).collect()
        });
        Self { bits, outcomes }
    }

    /// `mean +- std` with probability 1/2 each (zero skew).
    pub fn symmetric_two_point(m: &BackgroundMoments) -> Self {
        Self::from_standardized(m, 1, &[-1.0, 1.0])
    }

    /// `mean + std * sqrt(3)` with probability 1/4, `mean - std / sqrt(3)`
    /// otherwise: matching mean and variance, positive skew.
    pub fn skewed_two_point(m: &BackgroundMoments) -> Self {
        let r3 = libm::sqrt(3.0);
        Self::from_standardized(m, 2, &[-1.0 / r3, -1.0 / r3, -1.0 / r3, r3])
    }

    /// `mean + std * {-sqrt 2, 0, +sqrt 2}` with probabilities 1/4, 1/2, 1/4.
    pub fn three_point(m: &BackgroundMoments) -> Self {
        let r2 = core::f64::consts::SQRT_2;
        Self::from_standardized(m, 2, &[-r2, 0.0, 0.0, r2])
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn outcomes(&self, channel: usize) -> &[f64] {
        &self.outcomes[channel]
    }

    /// Exact `k`-th raw moment of the channel distribution.
    pub fn raw_moment(&self, channel: usize, k: i32) -> f64 {
        let o = &self.outcomes[channel];
        o.iter().map(|v| libm::pow(*v, k as f64)).sum::<f64>() / o.len() as f64
    }
}

impl BackgroundSampler for DyadicSampler {
    fn sample<R: RngCore + ?Sized>(&self, channel: usize, rng: &mut R) -> f64 {
        let idx = (rng.next_u32() >> (32 - self.bits)) as usize;
        self.outcomes[channel][idx]
    }

    fn as_dyadic(&self) -> Option<&DyadicSampler> {
        Some(self)
    }
}

/// Monte-Carlo mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

/// Estimates `E_b mean((A(xhat, b) - A(x, b))^2)` by drawing `n_samples`
/// full background images, each pixel and channel independently.
///
/// The reported standard error comes from the sample variance of the
/// per-background means.
pub fn abmse_mc<D, S, R>(x: &Rgba<D>, xhat: &Rgba<D>, sampler: &S, n_samples: u64, rng: &mut R) -> Result<McEstimate>
where
    D: ValueDomain,
    S: BackgroundSampler + ?Sized,
    R: RngCore + ?Sized,
{
    if x.dims() != xhat.dims() {
        return Err(Error::DimensionMismatch {
            expected: x.dims(),
            found: xhat.dims(),
        });
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let stats = match sampler.as_dyadic() {
        Some(d) => sample_dyadic(x, xhat, d, n_samples, rng),
        None => sample_generic(x, xhat, sampler, n_samples, rng),
    };
    Ok(McEstimate {
        estimate: stats.mean(),
        stderr: stats.std_error(),
        n_samples,
    })
}

#[inline]
fn blended_sq<D: ValueDomain>(x: &Rgba<D>, xhat: &Rgba<D>, e: usize, b: f64) -> f64 {
    let n = x.pixel_count();
    let (a, ah) = (x.alpha()[e % n] as f64, xhat.alpha()[e % n] as f64);
    let on_x = x.rgb()[e] as f64 * a + b * (1.0 - a);
    let on_xhat = xhat.rgb()[e] as f64 * ah + b * (1.0 - ah);
    let d = on_xhat - on_x;
    d * d
}

fn sample_generic<D, S, R>(x: &Rgba<D>, xhat: &Rgba<D>, sampler: &S, n_samples: u64, rng: &mut R) -> RunningStats
where
    D: ValueDomain,
    S: BackgroundSampler + ?Sized,
    R: RngCore + ?Sized,
{
    let n = x.pixel_count();
    let elems = 3 * n;
    let mut stats = RunningStats::new();
    for _ in 0..n_samples {
        let mut sum = 0.0;
        for e in 0..elems {
            let b = sampler.sample(e / n, rng);
            sum += blended_sq(x, xhat, e, b);
        }
        stats.push(sum / elems as f64);
    }
    stats
}

/// Each random byte encodes `8 / bits` outcome indices. For every chunk of
/// that many consecutive elements a 256-entry table holds the summed squared
/// blend difference for each byte value, so a background draw costs one
/// lookup per chunk.
fn sample_dyadic<D, R>(
    x: &Rgba<D>,
    xhat: &Rgba<D>,
    sampler: &DyadicSampler,
    n_samples: u64,
    rng: &mut R,
) -> RunningStats
where
    D: ValueDomain,
    R: RngCore + ?Sized,
{
    let n = x.pixel_count();
    let elems = 3 * n;
    let bits = sampler.bits as usize;
    let outcomes = 1usize << bits;
    let mask = outcomes - 1;
    let per_byte = 8 / bits;
    let chunks = elems.div_ceil(per_byte);

    let mut sq = vec![0.0f64; elems * outcomes];
    for e in 0..elems {
        for (o, &b) in sampler.outcomes[e / n].iter().enumerate() {
            sq[e * outcomes + o] = blended_sq(x, xhat, e, b);
        }
    }
    let mut tables = vec![0.0f64; chunks * 256];
    for t in 0..chunks {
        let first = t * per_byte;
        let last = (first + per_byte).min(elems);
        for v in 0..256usize {
            let mut s = 0.0;
            for (j, e) in (first..last).enumerate() {
                let o = (v >> (j * bits)) & mask;
                s += sq[e * outcomes + o];
            }
            tables[t * 256 + v] = s;
        }
    }

    let mut buf = vec![0u8; chunks];
    let mut stats = RunningStats::new();
    for _ in 0..n_samples {
        rng.fill_bytes(&mut buf);
        let mut sum = 0.0;
        for (table, &byte) in tables.chunks_exact(256).zip(&buf) {
            sum += table[byte as usize];
        }
        stats.push(sum / elems as f64);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{default_moments, SignedImage};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair() -> (SignedImage, SignedImage) {
        let x = SignedImage::from_fn(3, 3, |x, y| {
            ([0.2 * x as f32 - 0.3, -0.1 * y as f32, 0.9], [0.0, 0.5, 1.0][x])
        })
        .unwrap();
        let xh = SignedImage::from_fn(3, 3, |_, y| ([0.1, 0.3 * y as f32 - 0.2, -0.4], [1.0, 0.25, 0.0][y])).unwrap();
        (x, xh)
    }

    #[test]
    fn identical_images_give_zero() {
        let (x, _) = pair();
        let s = DyadicSampler::symmetric_two_point(&default_moments());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = abmse_mc(&x, &x, &s, 1000, &mut rng).unwrap();
        assert_eq!((r.estimate, r.stderr), (0.0, 0.0));
    }

    #[test]
    fn constant_sampler_is_deterministic_blend_mse() {
        let (x, xh) = pair();
        let c = [-0.25, 0.5, 0.125];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = abmse_mc(&x, &xh, &ConstantSampler(c), 50, &mut rng).unwrap();
        let bx = crate::blend_signed(&x, c.map(|v| v as f32)).unwrap();
        let bh = crate::blend_signed(&xh, c.map(|v| v as f32)).unwrap();
        let want: f64 = bx
            .data()
            .iter()
            .zip(bh.data())
            .map(|(&p, &q)| (p as f64 - q as f64).powi(2))
            .sum::<f64>()
            / bx.data().len() as f64;
        assert!((r.estimate - want).abs() < 1e-6, "{} vs {}", r.estimate, want);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let (x, xh) = pair();
        let s = DyadicSampler::skewed_two_point(&default_moments());
        let a = abmse_mc(&x, &xh, &s, 2000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = abmse_mc(&x, &xh, &s, 2000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let g = GaussianSampler::matching(&default_moments());
        let a = abmse_mc(&x, &xh, &g, 200, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = abmse_mc(&x, &xh, &g, 200, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dyadic_moments_match_targets() {
        let m = default_moments();
        for s in [
            DyadicSampler::symmetric_two_point(&m),
            DyadicSampler::skewed_two_point(&m),
            DyadicSampler::three_point(&m),
        ] {
            for c in 0..3 {
                assert!((s.raw_moment(c, 1) - m.mean[c]).abs() < 1e-15);
                assert!((s.raw_moment(c, 2) - m.second_raw[c]).abs() < 1e-15);
                assert!(s.outcomes(c).iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn dyadic_table_path_matches_generic_path() {
        // Same per-element outcome distribution decoded two ways.
        let (x, xh) = pair();
        let s = DyadicSampler::three_point(&default_moments());
        struct Opaque<'a>(&'a DyadicSampler);
        impl BackgroundSampler for Opaque<'_> {
            fn sample<R: RngCore + ?Sized>(&self, c: usize, rng: &mut R) -> f64 {
                self.0.sample(c, rng)
            }
        }
        let fast = abmse_mc(&x, &xh, &s, 40_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let slow = abmse_mc(&x, &xh, &Opaque(&s), 40_000, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let tol = 4.0 * (fast.stderr.powi(2) + slow.stderr.powi(2)).sqrt();
        assert!((fast.estimate - slow.estimate).abs() < tol);
    }

    #[test]
    fn input_errors() {
        let (x, _) = pair();
        let other = SignedImage::from_fn(2, 2, |_, _| ([0.0; 3], 1.0)).unwrap();
        let s = ConstantSampler([0.0; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(abmse_mc(&x, &other, &s, 1, &mut rng).is_err());
        assert!(abmse_mc(&x, &x, &s, 0, &mut rng).is_err());
        assert!(DyadicSampler::new(3, [vec![0.0; 8], vec![0.0; 8], vec![0.0; 8]]).is_err());
        assert!(DyadicSampler::new(1, [vec![0.0; 2], vec![0.0; 2], vec![0.0; 3]]).is_err());
    }
}
