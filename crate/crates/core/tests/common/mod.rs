#![allow(dead_code)]

use alphabench_core::{RgbImage, RgbaImage, SignedImage};
use proptest::prelude::*;

pub fn unit_rgba(max_side: usize) -> impl Strategy<Value = RgbaImage> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(0.0f32..=1.0, 3 * w * h),
            prop::collection::vec(0.0f32..=1.0, w * h),
        )
            .prop_map(move |(rgb, a)| RgbaImage::new(w, h, rgb, a).unwrap())
    })
}

/// Two unit-domain RGBA images of the same size.
pub fn unit_pair(min_side: usize, max_side: usize) -> impl Strategy<Value = (RgbaImage, RgbaImage)> {
    (min_side..=max_side, min_side..=max_side).prop_flat_map(|(w, h)| {
        let img = move || {
            (
                prop::collection::vec(0.0f32..=1.0, 3 * w * h),
                prop::collection::vec(0.0f32..=1.0, w * h),
            )
                .prop_map(move |(rgb, a)| RgbaImage::new(w, h, rgb, a).unwrap())
        };
        (img(), img())
    })
}

pub fn signed_pair(max_side: usize) -> impl Strategy<Value = (SignedImage, SignedImage)> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        let img = move || {
            (
                prop::collection::vec(-1.0f32..=1.0, 3 * w * h),
                prop::collection::vec(0.0f32..=1.0, w * h),
            )
                .prop_map(move |(rgb, a)| SignedImage::new(w, h, rgb, a).unwrap())
        };
        (img(), img())
    })
}

pub fn unit_rgb(w: usize, h: usize) -> impl Strategy<Value = RgbImage> {
    prop::collection::vec(0.0f32..=1.0, 3 * w * h).prop_map(move |v| RgbImage::new(w, h, v).unwrap())
}

pub fn corpus(max_len: usize, max_side: usize) -> impl Strategy<Value = Vec<RgbImage>> {
    prop::collection::vec(
        (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| unit_rgb(w, h)),
        1..=max_len,
    )
}
