//! PNG raster IO. 8-bit code values are divided by 255 and 16-bit by 65535;
//! no gamma conversion is applied.

use std::path::Path;

use alphabench_core::dataset::Matte;
use alphabench_core::{RgbImage, RgbaImage};
use image::{ColorType, DynamicImage, ImageBuffer, Luma, Rgb, Rgba};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })
}

fn is_16bit(c: ColorType) -> bool {
    matches!(
        c,
        ColorType::L16 | ColorType::La16 | ColorType::Rgb16 | ColorType::Rgba16
    )
}

/// Bit depth of a stored raster.
pub fn stored_depth(path: &Path) -> Result<BitDepth> {
    Ok(if is_16bit(open(path)?.color()) {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    })
}

fn planar<const N: usize>(w: usize, h: usize, px: impl Iterator<Item = [f32; N]>) -> Vec<Vec<f32>> {
    let mut planes = vec![Vec::with_capacity(w * h); N];
    for p in px {
        for (plane, v) in planes.iter_mut().zip(p) {
            plane.push(v);
        }
    }
    planes
}

fn rgba_planes(img: &DynamicImage) -> (usize, usize, Vec<Vec<f32>>) {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let planes = if is_16bit(img.color()) {
        let buf = img.to_rgba16();
        planar(w, h, buf.pixels().map(|p| p.0.map(|v| v as f32 / 65535.0)))
    } else {
        let buf = img.to_rgba8();
        planar(w, h, buf.pixels().map(|p| p.0.map(|v| v as f32 / 255.0)))
    };
    (w, h, planes)
}

/// Loads an RGBA raster; images without an alpha channel load as opaque.
pub fn load_rgba(path: &Path) -> Result<RgbaImage> {
    let (w, h, mut planes) = rgba_planes(&open(path)?);
    let alpha = planes.pop().unwrap_or_default();
    let rgb = planes.concat();
    Ok(RgbaImage::new(w, h, rgb, alpha)?)
}

/// Loads the colour planes of a raster, ignoring any alpha channel.
pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let (w, h, mut planes) = rgba_planes(&open(path)?);
    planes.pop();
    Ok(RgbImage::new(w, h, planes.concat())?)
}

/// Loads a single-channel matte.
pub fn load_matte(path: &Path) -> Result<Matte> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img.color() {
        ColorType::L8 => img
            .to_luma8()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 255.0)
            .collect(),
        ColorType::L16 => img
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 65535.0)
            .collect(),
        other => {
            return Err(Error::format(
                path,
                format!("matte must have a single channel, found {other:?}"),
            ))
        }
    };
    Ok(Matte::new(w, h, data)?)
}

fn quantize8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn quantize16(v: f32) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

fn write(path: &Path, img: DynamicImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.into(),
            source,
        })
}

pub fn save_rgba(path: &Path, x: &RgbaImage, depth: BitDepth) -> Result<()> {
    let (w, h) = x.dims();
    let n = w * h;
    let (rgb, a) = (x.rgb(), x.alpha());
    let img = match depth {
        BitDepth::Eight => DynamicImage::ImageRgba8(ImageBuffer::from_fn(w as u32, h as u32, |px, py| {
            let i = py as usize * w + px as usize;
            Rgba([
                quantize8(rgb[i]),
                quantize8(rgb[n + i]),
                quantize8(rgb[2 * n + i]),
                quantize8(a[i]),
            ])
        })),
        BitDepth::Sixteen => DynamicImage::ImageRgba16(ImageBuffer::from_fn(w as u32, h as u32, |px, py| {
            let i = py as usize * w + px as usize;
            Rgba([
                quantize16(rgb[i]),
                quantize16(rgb[n + i]),
                quantize16(rgb[2 * n + i]),
                quantize16(a[i]),
            ])
        })),
    };
    write(path, img)
}

pub fn save_rgb(path: &Path, x: &RgbImage, depth: BitDepth) -> Result<()> {
    let (w, h) = x.dims();
    let n = w * h;
    let d = x.data();
    let img = match depth {
        BitDepth::Eight => DynamicImage::ImageRgb8(ImageBuffer::from_fn(w as u32, h as u32, |px, py| {
            let i = py as usize * w + px as usize;
            Rgb([quantize8(d[i]), quantize8(d[n + i]), quantize8(d[2 * n + i])])
        })),
        BitDepth::Sixteen => DynamicImage::ImageRgb16(ImageBuffer::from_fn(w as u32, h as u32, |px, py| {
            let i = py as usize * w + px as usize;
            Rgb([quantize16(d[i]), quantize16(d[n + i]), quantize16(d[2 * n + i])])
        })),
    };
    write(path, img)
}

pub fn save_matte(path: &Path, m: &Matte, depth: BitDepth) -> Result<()> {
    let (w, h) = m.dims();
    let d = m.data();
    let img = match depth {
        BitDepth::Eight => DynamicImage::ImageLuma8(ImageBuffer::from_fn(w as u32, h as u32, |px, py| {
            Luma([quantize8(d[py as usize * w + px as usize])])
        })),
        BitDepth::Sixteen => DynamicImage::ImageLuma16(ImageBuffer::from_fn(w as u32, h as u32, |px, py| {
            Luma([quantize16(d[py as usize * w + px as usize])])
        })),
    };
    write(path, img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RgbaImage {
        RgbaImage::from_fn(5, 3, |x, y| {
            let v = |k: usize| ((x * 31 + y * 17 + k * 7) % 256) as f32 / 255.0;
            ([v(0), v(1), v(2)], v(3))
        })
        .unwrap()
    }

    #[test]
    fn rgba_round_trip_8bit_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let x = sample();
        save_rgba(&p, &x, BitDepth::Eight).unwrap();
        assert_eq!(load_rgba(&p).unwrap(), x);
        assert_eq!(stored_depth(&p).unwrap(), BitDepth::Eight);
    }

    #[test]
    fn rgba_round_trip_16bit_within_quantum() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let x = RgbaImage::from_fn(4, 4, |x, y| ([x as f32 / 7.0, y as f32 / 9.0, 0.123_456], 0.654_321)).unwrap();
        save_rgba(&p, &x, BitDepth::Sixteen).unwrap();
        let y = load_rgba(&p).unwrap();
        assert_eq!(stored_depth(&p).unwrap(), BitDepth::Sixteen);
        for (a, b) in x.rgb().iter().chain(x.alpha()).zip(y.rgb().iter().chain(y.alpha())) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-7);
        }
    }

    #[test]
    fn rgb_loads_opaque() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgb.png");
        let x = sample().color();
        save_rgb(&p, &x, BitDepth::Eight).unwrap();
        let y = load_rgba(&p).unwrap();
        assert!(y.is_opaque());
        assert_eq!(y.color(), x);
        assert_eq!(load_rgb(&p).unwrap(), x);
    }

    #[test]
    fn matte_requires_single_channel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let m = Matte::new(2, 2, vec![0.0, 1.0, 128.0 / 255.0, 1.0 / 255.0]).unwrap();
        save_matte(&p, &m, BitDepth::Eight).unwrap();
        assert_eq!(load_matte(&p).unwrap(), m);
        let q = dir.path().join("rgb.png");
        save_rgb(&q, &sample().color(), BitDepth::Eight).unwrap();
        assert!(matches!(load_matte(&q), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_file_is_an_image_error() {
        assert!(matches!(
            load_rgba(Path::new("/nonexistent/x.png")),
            Err(Error::Image { .. })
        ));
    }
}
