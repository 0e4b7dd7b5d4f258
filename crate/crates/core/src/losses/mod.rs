//! Training-objective numerics for an RGBA autoencoder.
//!
//! The reconstruction term is the expected squared error between the two
//! images blended over a random background. With per-pixel i.i.d.
//! backgrounds the expectation only depends on `E[b]` and `E[b^2]`:
//!
//! ```text
//! E |P - b * da|^2 = |P|^2 - 2 da <E[b], P> + da^2 E[b^2]
//! ```
//!
//! where `P` is the premultiplied colour difference and `da` the alpha
//! difference (see [`crate::premultiplied_diff`]). [`abmse_closed`] evaluates
//! that form; [`abmse_mc`] samples backgrounds and blends directly.

mod montecarlo;

pub use montecarlo::{
    abmse_mc, BackgroundSampler, ConstantSampler, DyadicSampler, GaussianSampler, McEstimate, UniformSampler,
};

use alloc::vec;
use alloc::vec::Vec;

use crate::numeric::CompensatedSum;
use crate::{
    blend, premultiplied_diff, Background, BackgroundMoments, Error, Result, RgbImage, Rgba, RgbaImage, SignedImage,
    ValueDomain,
};

/// Closed-form alpha-blending mean squared error.
///
/// Averaged over pixels and the three channels. `moments` must be expressed
/// in the images' value domain.
pub fn abmse_closed<D: ValueDomain>(x: &Rgba<D>, xhat: &Rgba<D>, moments: &BackgroundMoments) -> Result<f64> {
    moments.require_domain(D::KIND)?;
    let diff = premultiplied_diff(x, xhat)?;
    let n = x.pixel_count();
    let mut acc = CompensatedSum::new();
    for c in 0..3 {
        let (eb, eb2) = (moments.mean[c], moments.second_raw[c]);
        let p = &diff.p[c * n..(c + 1) * n];
        for (&p, &da) in p.iter().zip(&diff.delta_alpha) {
            acc.add(p * p - 2.0 * da * eb * p + da * da * eb2);
        }
    }
    Ok(acc.value() / (3 * n) as f64)
}

/// Averaged perceptual score over black and white backgrounds:
/// `(s(A(xhat, 0), A(x, 0)) + s(A(xhat, 1), A(x, 1))) / 2`.
pub fn perceptual_protocol<F, E>(x: &RgbaImage, xhat: &RgbaImage, mut scorer: F) -> core::result::Result<f64, E>
where
    F: FnMut(&RgbImage, &RgbImage) -> core::result::Result<f64, E>,
    E: From<Error>,
{
    let black = Background::Solid([0.0; 3]);
    let white = Background::Solid([1.0; 3]);
    let on_black = scorer(&blend(xhat, &black)?, &blend(x, &black)?)?;
    let on_white = scorer(&blend(xhat, &white)?, &blend(x, &white)?)?;
    Ok(0.5 * (on_black + on_white))
}

/// Encoder input for the reference-KL term: the blended image with an
/// all-ones fourth channel.
pub fn ref_kl_input(x: &RgbaImage, b: &Background) -> Result<RgbaImage> {
    let rgb = blend(x, b)?;
    Ok(RgbaImage::opaque(rgb))
}

/// Signed-domain variant of [`ref_kl_input`].
pub fn ref_kl_input_signed(x: &SignedImage, b: [f32; 3]) -> Result<SignedImage> {
    Ok(SignedImage::opaque(crate::blend_signed(x, b)?))
}

/// Diagonal Gaussian latent posterior over a `D x h x w` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGaussian {
    pub shape: (usize, usize, usize),
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl LatentGaussian {
    pub fn new(shape: (usize, usize, usize), mu: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        let n = shape.0 * shape.1 * shape.2;
        for len in [mu.len(), log_var.len()] {
            if len != n {
                return Err(Error::BufferLength {
                    expected: n,
                    found: len,
                });
            }
        }
        if let Some(i) = mu.iter().chain(&log_var).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i % n));
        }
        Ok(Self { shape, mu, log_var })
    }

    /// `N(0, I)` on the given grid.
    pub fn standard(shape: (usize, usize, usize)) -> Self {
        let n = shape.0 * shape.1 * shape.2;
        Self {
            shape,
            mu: vec![0.0; n],
            log_var: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

fn reduce(sum: CompensatedSum, count: usize, reduction: Reduction) -> f64 {
    match reduction {
        Reduction::Sum => sum.value(),
        Reduction::Mean if count == 0 => 0.0,
        Reduction::Mean => sum.value() / count as f64,
    }
}

/// `KL(q || N(0, I)) = sum 1/2 (mu^2 + exp(lv) - lv - 1)`.
pub fn kl_standard(q: &LatentGaussian, reduction: Reduction) -> f64 {
    // exp(lv) - 1 - lv via expm1 keeps small-variance terms accurate.
    let s: CompensatedSum =
        q.mu.iter()
            .zip(&q.log_var)
            .map(|(&m, &lv)| 0.5 * (m * m + (libm::expm1(lv) - lv)))
            .collect();
    reduce(s, q.len(), reduction)
}

/// `KL(q1 || q2)` for diagonal Gaussians of identical shape.
pub fn kl_between(q1: &LatentGaussian, q2: &LatentGaussian, reduction: Reduction) -> Result<f64> {
    if q1.shape != q2.shape {
        return Err(Error::InvalidArgument(alloc::format!(
            "latent shape mismatch: {:?} vs {:?}",
            q1.shape,
            q2.shape
        )));
    }
    let mut s = CompensatedSum::new();
    for i in 0..q1.len() {
        let r = q1.log_var[i] - q2.log_var[i];
        let dm = q1.mu[i] - q2.mu[i];
        // 1/2 (log(s2/s1) + (s1 + dm^2)/s2 - 1) rewritten around r = lv1 - lv2.
        s.add(0.5 * ((libm::expm1(r) - r) + dm * dm * libm::exp(-q2.log_var[i])));
    }
    Ok(reduce(s, q1.len(), reduction))
}

/// Discriminator probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-7;

/// `mean log D(x) + mean log(1 - D(xhat))` over discriminator patches.
pub fn gan_loss(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(Error::EmptyInput("discriminator outputs"));
    }
    let clamp = |p: f64| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let real: CompensatedSum = d_real.iter().map(|&p| libm::log(clamp(p))).collect();
    let fake: CompensatedSum = d_fake.iter().map(|&p| libm::log(1.0 - clamp(p))).collect();
    Ok(real.value() / d_real.len() as f64 + fake.value() / d_fake.len() as f64)
}

/// Adaptive GAN weight from last-layer gradient norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveWeight {
    pub epsilon: f64,
    /// Optional upper clamp; `None` leaves the ratio untouched.
    pub max: Option<f64>,
}

impl Default for AdaptiveWeight {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max: None,
        }
    }
}

impl AdaptiveWeight {
    pub fn compute(&self, grad_norm_rec: f64, grad_norm_gan: f64) -> Result<f64> {
        for (i, v) in [grad_norm_rec, grad_norm_gan].into_iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if v < 0.0 {
                return Err(Error::InvalidArgument(alloc::format!(
                    "gradient norm must be >= 0, got {v}"
                )));
            }
        }
        let w = grad_norm_rec / (grad_norm_gan + self.epsilon);
        Ok(match self.max {
            Some(m) => w.min(m),
            None => w,
        })
    }
}

/// `grad_norm_rec / (grad_norm_gan + epsilon)`.
pub fn adaptive_weight(grad_norm_rec: f64, grad_norm_gan: f64, epsilon: f64) -> Result<f64> {
    AdaptiveWeight { epsilon, max: None }.compute(grad_norm_rec, grad_norm_gan)
}

/// Objective weights; defaults are the published training configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LossWeights {
    pub w_rec: f64,
    pub w_perc: f64,
    pub w_norm_kl: f64,
    pub w_ref_kl: f64,
    pub w_gan: f64,
    /// First step (inclusive) at which the GAN term is active.
    pub gan_start_step: u64,
    pub epsilon_adapt: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_rec: 1.0,
            w_perc: 0.5,
            w_norm_kl: 1e-6,
            w_ref_kl: 1e-16,
            w_gan: 1.0,
            gan_start_step: 4000,
            epsilon_adapt: 1e-4,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.w_rec,
            self.w_perc,
            self.w_norm_kl,
            self.w_ref_kl,
            self.w_gan,
            self.epsilon_adapt,
        ];
        if let Some(w) = all.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "loss weights must be finite and >= 0, got {w}"
            )));
        }
        Ok(())
    }

    pub fn gan_active(&self, step: u64) -> bool {
        step >= self.gan_start_step
    }
}

/// Unweighted loss components for one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub rec: f64,
    pub perc: f64,
    pub norm_kl: f64,
    pub ref_kl: f64,
    pub gan: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown {
    pub rec: f64,
    pub perc: f64,
    pub norm_kl: f64,
    pub ref_kl: f64,
    pub gan: f64,
    pub lambda_adapt: f64,
    pub gan_active: bool,
    pub total: f64,
}

pub fn compose_objective(terms: LossTerms, lambda_adapt: f64, w: &LossWeights, step: u64) -> ObjectiveBreakdown {
    let gan_active = w.gan_active(step);
    let mut total =
        w.w_rec * terms.rec + w.w_perc * terms.perc + w.w_norm_kl * terms.norm_kl + w.w_ref_kl * terms.ref_kl;
    if gan_active {
        total += w.w_gan * lambda_adapt * terms.gan;
    }
    ObjectiveBreakdown {
        rec: terms.rec,
        perc: terms.perc,
        norm_kl: terms.norm_kl,
        ref_kl: terms.ref_kl,
        gan: terms.gan,
        lambda_adapt,
        gan_active,
        total,
    }
}
