//! Matting-corpus conversion, deterministic train/test splits, corpus
//! statistics and background augmentation.

use alloc::string::String;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::{blend, Background, Error, Result, RgbImage, RgbaImage};

/// Single-channel alpha matte in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matte {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Matte {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::BufferLength {
                expected: width * height,
                found: data.len(),
            });
        }
        if let Some((index, &v)) = data.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                index,
                value: v as f64,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Stacks a foreground and its matte into a straight (unpremultiplied)
/// RGBA image.
pub fn ingest_pair(fg: &RgbImage, matte: &Matte) -> Result<RgbaImage> {
    if fg.dims() != matte.dims() {
        return Err(Error::DimensionMismatch {
            expected: fg.dims(),
            found: matte.dims(),
        });
    }
    RgbaImage::from_parts(fg.clone(), matte.data.clone())
}

/// Inverse of [`ingest_pair`].
pub fn split_planes(x: &RgbaImage) -> (RgbImage, Matte) {
    let (w, h) = x.dims();
    let matte = Matte {
        width: w,
        height: h,
        data: x.alpha().to_vec(),
    };
    (x.color(), matte)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManifestEntry {
    pub id: String,
    pub rgba_path: String,
    pub width: usize,
    pub height: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetManifest {
    pub dataset_name: String,
    pub seed: u64,
    pub test_fraction: f64,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Re-assigns every entry's split with [`split`].
    pub fn resplit(&mut self, test_fraction: f64, seed: u64) -> Result<()> {
        let ids: Vec<&str> = self.entries.iter().map(|e| e.id.as_str()).collect();
        let assignment = split(&ids, test_fraction, seed)?;
        for (e, s) in self.entries.iter_mut().zip(assignment) {
            e.split = s;
        }
        self.seed = seed;
        self.test_fraction = test_fraction;
        Ok(())
    }

    pub fn check_unique_ids(&self) -> Result<()> {
        let mut ids: Vec<&str> = self.entries.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateName(w[0].into()));
        }
        Ok(())
    }
}

/// 64-bit xorshift* generator (shifts 12, 25, 27; multiplier
/// `0x2545F4914F6CDD1D`), seeded through one SplitMix64 step. Fixed so that
/// splits and augmentation draws reproduce across platforms and
/// implementations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xorshift64Star {
    state: u64,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Xorshift64Star {
    pub fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        Self {
            state: if s == 0 { 0x9E37_79B9_7F4A_7C15 } else { s },
        }
    }

    /// Uniform integer in `0..bound` by rejection (no modulo bias).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let r = self.next_u64();
            if r < zone {
                return r % bound;
            }
        }
    }
}

impl RngCore for Xorshift64Star {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uses only the upper 32 bits of each output; the low bits of
    /// xorshift* are linearly weak.
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(4) {
            let bytes = self.next_u32().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> core::result::Result<(), rand_core::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// `floor(test_fraction * n)`, guarded against the product landing one ulp
/// under an integer.
pub fn test_count(n: usize, test_fraction: f64) -> usize {
    libm::floor(test_fraction * n as f64 + 1e-9) as usize
}

/// Assigns each id to train or test. Ids are sorted, shuffled with a seeded
/// [`Xorshift64Star`] Fisher–Yates pass, and the first
/// `floor(test_fraction * n)` become test. The result is aligned with `ids`.
pub fn split<S: AsRef<str>>(ids: &[S], test_fraction: f64, seed: u64) -> Result<Vec<Split>> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument(alloc::format!(
            "test fraction must be in [0, 1), got {test_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].as_ref().cmp(ids[b].as_ref()));
    if let Some(w) = order.windows(2).find(|w| ids[w[0]].as_ref() == ids[w[1]].as_ref()) {
        return Err(Error::DuplicateName(ids[w[0]].as_ref().into()));
    }
    let mut rng = Xorshift64Star::new(seed);
    for i in (1..order.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    let n_test = test_count(ids.len(), test_fraction);
    let mut out = alloc::vec![Split::Train; ids.len()];
    for &i in &order[..n_test] {
        out[i] = Split::Test;
    }
    Ok(out)
}

/// Result of [`augment_background`].
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub image: RgbaImage,
    /// The composited colour, or `None` when the image passed through.
    pub background: Option<[f32; 3]>,
}

fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// With probability `probability`, composites `x` over a random solid colour
/// (uniform per channel) and marks the result fully opaque.
pub fn augment_background<R: RngCore + ?Sized>(x: &RgbaImage, probability: f64, rng: &mut R) -> Result<Augmented> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::InvalidArgument(alloc::format!(
            "probability must be in [0, 1], got {probability}"
        )));
    }
    if unit(rng) >= probability {
        return Ok(Augmented {
            image: x.clone(),
            background: None,
        });
    }
    let color: [f32; 3] = core::array::from_fn(|_| unit(rng) as f32);
    let rgb = blend(x, &Background::Solid(color))?;
    Ok(Augmented {
        image: RgbaImage::opaque(rgb),
        background: Some(color),
    })
}

/// FNV-1a over the id bytes.
fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Per-entry generator seed, independent of processing order.
pub fn entry_seed(global_seed: u64, id: &str) -> u64 {
    splitmix64(global_seed ^ fnv1a64(id))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorpusStats {
    pub n_train: usize,
    pub n_test: usize,
    pub mean_height: f64,
    pub mean_width: f64,
    /// `mean_height * mean_width`.
    pub resolution_product: f64,
}

/// Split counts and mean resolution over the given entries.
pub fn stats<'a, I>(entries: I) -> Result<CorpusStats>
where
    I: IntoIterator<Item = &'a ManifestEntry>,
{
    let (mut n_train, mut n_test) = (0usize, 0usize);
    let (mut sum_h, mut sum_w) = (0.0f64, 0.0f64);
    for e in entries {
        match e.split {
            Split::Train => n_train += 1,
            Split::Test => n_test += 1,
        }
        sum_h += e.height as f64;
        sum_w += e.width as f64;
    }
    let n = n_train + n_test;
    if n == 0 {
        return Err(Error::EmptyInput("manifest entries"));
    }
    let mean_height = sum_h / n as f64;
    let mean_width = sum_w / n as f64;
    Ok(CorpusStats {
        n_train,
        n_test,
        mean_height,
        mean_width,
        resolution_product: mean_height * mean_width,
    })
}
