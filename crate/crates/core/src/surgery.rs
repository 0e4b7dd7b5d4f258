//! Channel surgery on the autoencoder's boundary convolutions, extending an
//! RGB encoder/decoder pair to RGBA while preserving its RGB behaviour.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Square 2-D convolution kernel stored in HWIO order: the weight linking
/// input channel `ci` to output channel `co` at tap `(ky, kx)` lives at
/// `((ky * kernel + kx) * in_channels + ci) * out_channels + co`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvTensor {
    kernel: usize,
    in_channels: usize,
    out_channels: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl ConvTensor {
    pub fn new(
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if kernel == 0 || in_channels == 0 || out_channels == 0 {
            return Err(Error::InvalidArgument("convolution shape must be non-zero".into()));
        }
        let expected = kernel * kernel * in_channels * out_channels;
        if weights.len() != expected {
            return Err(Error::BufferLength {
                expected,
                found: weights.len(),
            });
        }
        if bias.len() != out_channels {
            return Err(Error::BufferLength {
                expected: out_channels,
                found: bias.len(),
            });
        }
        if let Some(i) = weights.iter().chain(&bias).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            kernel,
            in_channels,
            out_channels,
            weights,
            bias,
        })
    }

    pub fn from_fn(
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        mut weight: impl FnMut(usize, usize, usize, usize) -> f32,
        bias: Vec<f32>,
    ) -> Result<Self> {
        let mut weights = Vec::with_capacity(kernel * kernel * in_channels * out_channels);
        for ky in 0..kernel {
            for kx in 0..kernel {
                for ci in 0..in_channels {
                    for co in 0..out_channels {
                        weights.push(weight(ky, kx, ci, co));
                    }
                }
            }
        }
        Self::new(kernel, in_channels, out_channels, weights, bias)
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    fn index(&self, ky: usize, kx: usize, ci: usize, co: usize) -> usize {
        ((ky * self.kernel + kx) * self.in_channels + ci) * self.out_channels + co
    }

    pub fn weight(&self, ky: usize, kx: usize, ci: usize, co: usize) -> f32 {
        self.weights[self.index(ky, kx, ci, co)]
    }
}

fn expect_channels(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::ChannelMismatch { expected, found });
    }
    Ok(())
}

/// Turns a 3-input encoder stem into a 4-input one. The alpha slice is zero,
/// so on any input the RGB response is unchanged.
pub fn extend_encoder_first_conv(conv: &ConvTensor) -> Result<ConvTensor> {
    expect_channels(conv.in_channels, 3)?;
    ConvTensor::from_fn(
        conv.kernel,
        4,
        conv.out_channels,
        |ky, kx, ci, co| if ci < 3 { conv.weight(ky, kx, ci, co) } else { 0.0 },
        conv.bias.clone(),
    )
}

/// Turns a 3-output decoder head into a 4-output one. The alpha output has
/// zero weights and unit bias, so an unfine-tuned decoder predicts opaque
/// images.
pub fn extend_decoder_last_conv(conv: &ConvTensor) -> Result<ConvTensor> {
    expect_channels(conv.out_channels, 3)?;
    let mut bias = conv.bias.clone();
    bias.push(1.0);
    ConvTensor::from_fn(
        conv.kernel,
        conv.in_channels,
        4,
        |ky, kx, ci, co| if co < 3 { conv.weight(ky, kx, ci, co) } else { 0.0 },
        bias,
    )
}

/// Keeps the first `count` input channels.
pub fn slice_input_channels(conv: &ConvTensor, count: usize) -> Result<ConvTensor> {
    if count == 0 || count > conv.in_channels {
        return Err(Error::ChannelMismatch {
            expected: conv.in_channels,
            found: count,
        });
    }
    ConvTensor::from_fn(
        conv.kernel,
        count,
        conv.out_channels,
        |ky, kx, ci, co| conv.weight(ky, kx, ci, co),
        conv.bias.clone(),
    )
}

/// Keeps the first `count` output channels and their biases.
pub fn slice_output_channels(conv: &ConvTensor, count: usize) -> Result<ConvTensor> {
    if count == 0 || count > conv.out_channels {
        return Err(Error::ChannelMismatch {
            expected: conv.out_channels,
            found: count,
        });
    }
    ConvTensor::from_fn(
        conv.kernel,
        conv.in_channels,
        count,
        |ky, kx, ci, co| conv.weight(ky, kx, ci, co),
        conv.bias[..count].to_vec(),
    )
}

/// Channel-major activation tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != channels * height * width {
            return Err(Error::BufferLength {
                expected: channels * height * width,
                found: data.len(),
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// First `count` channels.
    pub fn take_channels(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.channels {
            return Err(Error::ChannelMismatch {
                expected: self.channels,
                found: count,
            });
        }
        let n = self.height * self.width;
        Self::new(count, self.height, self.width, self.data[..count * n].to_vec())
    }

    /// Appends channels from `other`, which must share the spatial size.
    pub fn concat(&self, other: &FeatureMap) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::new(self.channels + other.channels, self.height, self.width, data)
    }
}

/// Direct stride-1 convolution with zero "same" padding (`(k - 1) / 2`
/// before, the rest after), accumulated in f64.
pub fn conv2d_reference(x: &FeatureMap, w: &ConvTensor) -> Result<FeatureMap> {
    expect_channels(x.channels, w.in_channels)?;
    let (h, wd, k) = (x.height, x.width, w.kernel);
    let pad = (k - 1) / 2;
    let mut out = vec![0.0f32; w.out_channels * h * wd];
    let mut acc = vec![0.0f64; w.out_channels];
    for y in 0..h {
        for xx in 0..wd {
            for (a, &b) in acc.iter_mut().zip(&w.bias) {
                *a = b as f64;
            }
            for ky in 0..k {
                let Some(sy) = (y + ky).checked_sub(pad).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..k {
                    let Some(sx) = (xx + kx).checked_sub(pad).filter(|&v| v < wd) else {
                        continue;
                    };
                    for ci in 0..w.in_channels {
                        let v = x.at(ci, sy, sx) as f64;
                        if v == 0.0 {
                            continue;
                        }
                        let base = w.index(ky, kx, ci, 0);
                        for (a, &wt) in acc.iter_mut().zip(&w.weights[base..base + w.out_channels]) {
                            *a += v * wt as f64;
                        }
                    }
                }
            }
            for (co, &a) in acc.iter().enumerate() {
                out[(co * h + y) * wd + xx] = a as f32;
            }
        }
    }
    FeatureMap::new(w.out_channels, h, wd, out)
}

/// Named collection of convolution tensors with a free-form provenance tag.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TensorContainer {
    pub source: String,
    tensors: BTreeMap<String, ConvTensor>,
}

impl TensorContainer {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            tensors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: ConvTensor) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    /// Replaces an existing tensor, returning the previous one.
    pub fn replace(&mut self, name: &str, tensor: ConvTensor) -> Result<ConvTensor> {
        match self.tensors.get_mut(name) {
            Some(slot) => Ok(core::mem::replace(slot, tensor)),
            None => Err(Error::InvalidArgument(alloc::format!("no tensor named {name:?}"))),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ConvTensor> {
        self.tensors.get(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Tensors in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &ConvTensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }
}
