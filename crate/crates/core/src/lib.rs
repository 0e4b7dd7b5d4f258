//! Transparency-aware image evaluation and RGBA autoencoder loss numerics.
//!
//! Everything in this crate is pure computation over in-memory buffers and
//! runs without `std`; only `alloc` is required. File formats, process
//! plumbing and the command-line front end live in the `alphabench` crate.
//!
//! The central object is [`RgbaImage`], a planar RGB + alpha float image in
//! the unit domain `[0, 1]`. Blending it over a background
//! (`rgb * alpha + background * (1 - alpha)`) yields an ordinary RGB image,
//! which is how every three-channel metric is lifted to RGBA: score the pair
//! on each of the nine [`CanonicalBackgroundSet`] colours and average.
//!
//! Loss numerics work in the signed domain `[-1, 1]` ([`SignedImage`]), where
//! the expected blended squared error over a random background has a closed
//! form in the background's first two raw moments ([`losses::abmse_closed`]).
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
mod error;
pub mod image;
pub mod linalg;
pub mod losses;
pub mod metrics;
pub mod moments;
pub mod numeric;
pub mod report;
pub mod surgery;

pub use error::{Error, Result};
pub use image::{
    blend, blend_signed, premultiplied_diff, to_signed, to_unit, Background, CanonicalBackgroundSet, Domain,
    NamedBackground, PremultipliedDiff, Rgb, RgbImage, Rgba, RgbaImage, Signed, SignedImage, SignedRgbImage, Unit,
    ValueDomain,
};
pub use moments::{default_moments, estimate_moments, histogram, BackgroundMoments, ChannelHistogram};
