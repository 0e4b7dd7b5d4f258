//! Planar RGBA / RGB float images, alpha blending and premultiplied
//! differences.
//!
//! Images are stored channel-major: an RGB plane of `3 * H * W` floats laid
//! out as `[r-plane, g-plane, b-plane]`, followed for RGBA by a separate
//! `H * W` alpha plane. The value domain is carried in the type: [`Unit`]
//! images hold colour in `[0, 1]`, [`Signed`] images in `[-1, 1]`. Alpha is
//! always in `[0, 1]`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::marker::PhantomData;

use crate::{Error, Result};

/// Value domain tag for colour channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Domain {
    Unit,
    Signed,
}

impl Domain {
    pub fn range(self) -> (f32, f32) {
        match self {
            Domain::Unit => (0.0, 1.0),
            Domain::Signed => (-1.0, 1.0),
        }
    }

    /// Maps a unit-domain value into this domain.
    #[inline]
    pub fn from_unit(self, v: f32) -> f32 {
        match self {
            Domain::Unit => v,
            Domain::Signed => 2.0 * v - 1.0,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Unit => "unit",
            Domain::Signed => "signed",
        })
    }
}

/// Type-level colour domain.
pub trait ValueDomain: Copy + fmt::Debug + PartialEq + Send + Sync + 'static {
    const KIND: Domain;
    const MIN: f32;
    const MAX: f32;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signed;

impl ValueDomain for Unit {
    const KIND: Domain = Domain::Unit;
    const MIN: f32 = 0.0;
    const MAX: f32 = 1.0;
}

impl ValueDomain for Signed {
    const KIND: Domain = Domain::Signed;
    const MIN: f32 = -1.0;
    const MAX: f32 = 1.0;
}

fn check_dims(width: usize, height: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    Ok(width * height)
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::BufferLength { expected, found });
    }
    Ok(())
}

fn check_range(values: &[f32], min: f32, max: f32) -> Result<()> {
    for (index, &v) in values.iter().enumerate() {
        if !(min..=max).contains(&v) {
            return Err(Error::OutOfRange {
                index,
                value: v as f64,
                min: min as f64,
                max: max as f64,
            });
        }
    }
    Ok(())
}

/// Three-channel planar image.
#[derive(Debug, Clone, PartialEq)]
pub struct Rgb<D> {
    width: usize,
    height: usize,
    data: Vec<f32>,
    _domain: PhantomData<D>,
}

pub type RgbImage = Rgb<Unit>;
pub type SignedRgbImage = Rgb<Signed>;

impl<D: ValueDomain> Rgb<D> {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        let n = check_dims(width, height)?;
        check_len(3 * n, data.len())?;
        check_range(&data, D::MIN, D::MAX)?;
        Ok(Self {
            width,
            height,
            data,
            _domain: PhantomData,
        })
    }

    /// Builds an image from a per-pixel colour function `f(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Result<Self> {
        let n = check_dims(width, height)?;
        let mut data = vec![0.0; 3 * n];
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                let i = y * width + x;
                for c in 0..3 {
                    data[c * n + i] = px[c];
                }
            }
        }
        Self::new(width, height, data)
    }

    pub fn constant(width: usize, height: usize, color: [f32; 3]) -> Result<Self> {
        Self::from_fn(width, height, |_, _| color)
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), 3 * width * height);
        Self {
            width,
            height,
            data,
            _domain: PhantomData,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// All three planes, channel-major.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let n = self.pixel_count();
        let i = y * self.width + x;
        [self.data[i], self.data[n + i], self.data[2 * n + i]]
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

/// Four-channel planar image: colour plus a separate alpha plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Rgba<D> {
    width: usize,
    height: usize,
    rgb: Vec<f32>,
    alpha: Vec<f32>,
    _domain: PhantomData<D>,
}

pub type RgbaImage = Rgba<Unit>;
pub type SignedImage = Rgba<Signed>;

impl<D: ValueDomain> Rgba<D> {
    pub fn new(width: usize, height: usize, rgb: Vec<f32>, alpha: Vec<f32>) -> Result<Self> {
        let n = check_dims(width, height)?;
        check_len(3 * n, rgb.len())?;
        check_len(n, alpha.len())?;
        check_range(&rgb, D::MIN, D::MAX)?;
        check_range(&alpha, 0.0, 1.0)?;
        Ok(Self {
            width,
            height,
            rgb,
            alpha,
            _domain: PhantomData,
        })
    }

    /// Builds an image from a per-pixel function returning `(rgb, alpha)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> ([f32; 3], f32)) -> Result<Self> {
        let n = check_dims(width, height)?;
        let mut rgb = vec![0.0; 3 * n];
        let mut alpha = vec![0.0; n];
        for y in 0..height {
            for x in 0..width {
                let (px, a) = f(x, y);
                let i = y * width + x;
                for c in 0..3 {
                    rgb[c * n + i] = px[c];
                }
                alpha[i] = a;
            }
        }
        Self::new(width, height, rgb, alpha)
    }

    /// Wraps an RGB image with an alpha plane of ones.
    pub fn opaque(rgb: Rgb<D>) -> Self {
        let n = rgb.pixel_count();
        Self {
            width: rgb.width,
            height: rgb.height,
            rgb: rgb.data,
            alpha: vec![1.0; n],
            _domain: PhantomData,
        }
    }

    /// Concatenates an RGB image and an alpha plane.
    pub fn from_parts(rgb: Rgb<D>, alpha: Vec<f32>) -> Result<Self> {
        check_len(rgb.pixel_count(), alpha.len())?;
        check_range(&alpha, 0.0, 1.0)?;
        Ok(Self {
            width: rgb.width,
            height: rgb.height,
            rgb: rgb.data,
            alpha,
            _domain: PhantomData,
        })
    }

    pub(crate) fn from_raw(width: usize, height: usize, rgb: Vec<f32>, alpha: Vec<f32>) -> Self {
        debug_assert_eq!(rgb.len(), 3 * width * height);
        debug_assert_eq!(alpha.len(), width * height);
        Self {
            width,
            height,
            rgb,
            alpha,
            _domain: PhantomData,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn rgb(&self) -> &[f32] {
        &self.rgb
    }

    pub fn alpha(&self) -> &[f32] {
        &self.alpha
    }

    pub fn pixel(&self, x: usize, y: usize) -> ([f32; 3], f32) {
        let n = self.pixel_count();
        let i = y * self.width + x;
        ([self.rgb[i], self.rgb[n + i], self.rgb[2 * n + i]], self.alpha[i])
    }

    /// The colour planes as a standalone RGB image (alpha dropped).
    pub fn color(&self) -> Rgb<D> {
        Rgb::from_raw(self.width, self.height, self.rgb.clone())
    }

    pub fn into_parts(self) -> (Rgb<D>, Vec<f32>) {
        (Rgb::from_raw(self.width, self.height, self.rgb), self.alpha)
    }

    pub fn is_opaque(&self) -> bool {
        self.alpha.iter().all(|&a| a == 1.0)
    }
}

/// Something an RGBA image can be composited over.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Solid([f32; 3]),
    Image(RgbImage),
}

impl Background {
    pub fn solid(color: [f32; 3]) -> Result<Self> {
        check_range(&color, 0.0, 1.0)?;
        Ok(Background::Solid(color))
    }
}

impl From<NamedBackground> for Background {
    fn from(b: NamedBackground) -> Self {
        Background::Solid(b.rgb)
    }
}

/// A labelled solid background colour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NamedBackground {
    pub name: &'static str,
    pub rgb: [f32; 3],
}

const fn named(name: &'static str, rgb: [f32; 3]) -> NamedBackground {
    NamedBackground { name, rgb }
}

/// The nine evaluation backgrounds spanning `{0, 0.5, 1}^3`, in report order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CanonicalBackgroundSet;

impl CanonicalBackgroundSet {
    pub const LEN: usize = 9;

    pub const COLORS: [NamedBackground; 9] = [
        named("black", [0.0, 0.0, 0.0]),
        named("gray", [0.5, 0.5, 0.5]),
        named("white", [1.0, 1.0, 1.0]),
        named("red", [1.0, 0.0, 0.0]),
        named("green", [0.0, 1.0, 0.0]),
        named("blue", [0.0, 0.0, 1.0]),
        named("yellow", [1.0, 1.0, 0.0]),
        named("cyan", [0.0, 1.0, 1.0]),
        named("magenta", [1.0, 0.0, 1.0]),
    ];

    pub fn iter(&self) -> impl Iterator<Item = NamedBackground> {
        Self::COLORS.into_iter()
    }

    pub fn labels() -> [&'static str; 9] {
        Self::COLORS.map(|b| b.name)
    }

    pub fn get(name: &str) -> Option<NamedBackground> {
        Self::COLORS.iter().copied().find(|b| b.name == name)
    }

    pub fn index_of(name: &str) -> Option<usize> {
        Self::COLORS.iter().position(|b| b.name == name)
    }
}

#[inline]
fn mix(c: f32, a: f32, b: f32) -> f32 {
    c * a + b * (1.0 - a)
}

fn blend_solid<D: ValueDomain>(x: &Rgba<D>, color: [f32; 3]) -> Rgb<D> {
    let n = x.pixel_count();
    let mut out = Vec::with_capacity(3 * n);
    for (c, &bg) in color.iter().enumerate() {
        let plane = &x.rgb[c * n..(c + 1) * n];
        out.extend(
            plane
                .iter()
                .zip(&x.alpha)
                .map(|(&v, &a)| mix(v, a, bg).clamp(D::MIN, D::MAX)),
        );
    }
    Rgb::from_raw(x.width, x.height, out)
}

/// Composites `x` over `b`: `x_rgb * x_alpha + b * (1 - x_alpha)`.
pub fn blend(x: &RgbaImage, b: &Background) -> Result<RgbImage> {
    match b {
        Background::Solid(color) => {
            check_range(color, 0.0, 1.0)?;
            Ok(blend_solid(x, *color))
        }
        Background::Image(img) => {
            if img.dims() != x.dims() {
                return Err(Error::DimensionMismatch {
                    expected: x.dims(),
                    found: img.dims(),
                });
            }
            let n = x.pixel_count();
            let out = x
                .rgb
                .iter()
                .zip(&img.data)
                .enumerate()
                .map(|(i, (&v, &bg))| mix(v, x.alpha[i % n], bg).clamp(0.0, 1.0))
                .collect();
            Ok(Rgb::from_raw(x.width, x.height, out))
        }
    }
}

/// Composites a signed-domain image over a solid signed-domain colour.
pub fn blend_signed(x: &SignedImage, b: [f32; 3]) -> Result<SignedRgbImage> {
    check_range(&b, -1.0, 1.0)?;
    Ok(blend_solid(x, b))
}

/// Difference of premultiplied colour and of alpha between a reconstruction
/// and its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct PremultipliedDiff {
    pub width: usize,
    pub height: usize,
    /// `xhat_rgb * xhat_alpha - x_rgb * x_alpha`, channel-major.
    pub p: Vec<f64>,
    /// `xhat_alpha - x_alpha`.
    pub delta_alpha: Vec<f64>,
}

pub fn premultiplied_diff<D: ValueDomain>(x: &Rgba<D>, xhat: &Rgba<D>) -> Result<PremultipliedDiff> {
    if x.dims() != xhat.dims() {
        return Err(Error::DimensionMismatch {
            expected: x.dims(),
            found: xhat.dims(),
        });
    }
    let n = x.pixel_count();
    let p = (0..3 * n)
        .map(|i| {
            let a = x.alpha[i % n] as f64;
            let ah = xhat.alpha[i % n] as f64;
            xhat.rgb[i] as f64 * ah - x.rgb[i] as f64 * a
        })
        .collect();
    let delta_alpha = x
        .alpha
        .iter()
        .zip(&xhat.alpha)
        .map(|(&a, &ah)| ah as f64 - a as f64)
        .collect();
    Ok(PremultipliedDiff {
        width: x.width,
        height: x.height,
        p,
        delta_alpha,
    })
}

/// `rgb' = 2 * rgb - 1`; alpha unchanged.
pub fn to_signed(x: &RgbaImage) -> SignedImage {
    let rgb = x.rgb.iter().map(|&v| (2.0 * v - 1.0).clamp(-1.0, 1.0)).collect();
    Rgba::from_raw(x.width, x.height, rgb, x.alpha.clone())
}

/// `rgb' = (rgb + 1) / 2`; alpha unchanged.
pub fn to_unit(x: &SignedImage) -> RgbaImage {
    let rgb = x.rgb.iter().map(|&v| ((v + 1.0) * 0.5).clamp(0.0, 1.0)).collect();
    Rgba::from_raw(x.width, x.height, rgb, x.alpha.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(rgb: [f32; 3], a: f32) -> RgbaImage {
        RgbaImage::from_fn(1, 1, |_, _| (rgb, a)).unwrap()
    }

    #[test]
    fn opaque_ignores_background() {
        let x = RgbaImage::from_fn(3, 2, |x, y| ([x as f32 / 2.0, y as f32, 0.25], 1.0)).unwrap();
        for bg in CanonicalBackgroundSet.iter() {
            assert_eq!(blend(&x, &bg.into()).unwrap(), x.color());
        }
    }

    #[test]
    fn transparent_yields_background() {
        let x = RgbaImage::from_fn(2, 2, |_, _| ([0.9, 0.1, 0.3], 0.0)).unwrap();
        let out = blend(&x, &Background::Solid([0.5; 3])).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn half_alpha_red_over_gray() {
        let out = blend(&px([1.0, 0.0, 0.0], 0.5), &Background::Solid([0.5; 3])).unwrap();
        assert_eq!(out.pixel(0, 0), [0.75, 0.25, 0.25]);
    }

    #[test]
    fn image_background_dimension_mismatch() {
        let x = px([0.0; 3], 0.5);
        let bg = Background::Image(RgbImage::constant(2, 1, [0.0; 3]).unwrap());
        assert!(matches!(blend(&x, &bg), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn image_background_per_pixel() {
        let x = RgbaImage::from_fn(2, 1, |_, _| ([1.0; 3], 0.5)).unwrap();
        let bg = RgbImage::from_fn(2, 1, |x, _| [x as f32; 3]).unwrap();
        let out = blend(&x, &Background::Image(bg)).unwrap();
        assert_eq!(out.pixel(0, 0), [0.5; 3]);
        assert_eq!(out.pixel(1, 0), [1.0; 3]);
    }

    #[test]
    fn signed_blend_cases() {
        let x = SignedImage::from_fn(2, 2, |_, _| ([1.0; 3], 0.5)).unwrap();
        let out = blend_signed(&x, [-1.0; 3]).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));

        let x = SignedImage::from_fn(2, 2, |_, _| ([0.3, -0.2, 0.9], 1.0)).unwrap();
        assert_eq!(blend_signed(&x, [-1.0, 0.0, 1.0]).unwrap(), x.color());

        let x = SignedImage::from_fn(2, 2, |_, _| ([0.3, -0.2, 0.9], 0.0)).unwrap();
        let out = blend_signed(&x, [-0.5, 0.0, 0.25]).unwrap();
        assert_eq!(out.pixel(1, 1), [-0.5, 0.0, 0.25]);

        assert!(blend_signed(&x, [1.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn premultiplied_diff_cases() {
        let x = px([0.5; 3], 1.0);
        let d = premultiplied_diff(&x, &x).unwrap();
        assert!(d.p.iter().chain(&d.delta_alpha).all(|&v| v == 0.0));

        let d = premultiplied_diff(&x, &px([1.0; 3], 0.5)).unwrap();
        assert_eq!(d.p, vec![0.0; 3]);
        assert_eq!(d.delta_alpha, vec![-0.5]);

        let a = px([0.2, 0.4, 0.6], 1.0);
        let b = px([0.7, 0.1, 0.6], 1.0);
        let d = premultiplied_diff(&a, &b).unwrap();
        let expect = [0.7f32 as f64 - 0.2f32 as f64, 0.1f32 as f64 - 0.4f32 as f64, 0.0];
        assert_eq!(d.p, expect.to_vec());
        assert_eq!(d.delta_alpha, vec![0.0]);
    }

    #[test]
    fn domain_conversion_endpoints() {
        let x = RgbaImage::from_fn(3, 1, |x, _| ([x as f32 * 0.5; 3], 0.7)).unwrap();
        let s = to_signed(&x);
        assert_eq!(s.pixel(0, 0).0, [-1.0; 3]);
        assert_eq!(s.pixel(1, 0).0, [0.0; 3]);
        assert_eq!(s.pixel(2, 0).0, [1.0; 3]);
        assert_eq!(s.alpha(), x.alpha());
        assert_eq!(to_unit(&s), x);
    }

    #[test]
    fn constructor_validation() {
        assert_eq!(RgbaImage::new(0, 1, vec![], vec![]), Err(Error::EmptyImage));
        assert!(matches!(
            RgbaImage::new(1, 1, vec![0.0; 2], vec![1.0]),
            Err(Error::BufferLength { .. })
        ));
        assert!(matches!(
            RgbaImage::new(1, 1, vec![0.0, 1.5, 0.0], vec![1.0]),
            Err(Error::OutOfRange { index: 1, .. })
        ));
        assert!(RgbaImage::new(1, 1, vec![0.0; 3], vec![f32::NAN]).is_err());
        assert!(SignedImage::new(1, 1, vec![-1.0, 0.0, 1.0], vec![0.0]).is_ok());
        assert!(Background::solid([0.0, 1.1, 0.0]).is_err());
    }

    #[test]
    fn canonical_set_order() {
        assert_eq!(
            CanonicalBackgroundSet::labels(),
            ["black", "gray", "white", "red", "green", "blue", "yellow", "cyan", "magenta"]
        );
        for b in CanonicalBackgroundSet.iter() {
            assert!(b.rgb.iter().all(|v| [0.0, 0.5, 1.0].contains(v)));
        }
        assert_eq!(CanonicalBackgroundSet::index_of("cyan"), Some(7));
    }
}
