//! Filesystem side of corpus preparation: ingestion, split assignment,
//! statistics tables and background augmentation passes.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use alphabench_core::dataset::{
    augment_background, entry_seed, ingest_pair, split, stats, DatasetManifest, ManifestEntry, Split, Xorshift64Star,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{load_matte, load_rgb, load_rgba, save_rgba, stored_depth, BitDepth};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

fn stems(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            out.push((
                path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                path,
            ));
        }
    }
    out.sort();
    Ok(out)
}

/// Combines `fg_dir/<id>.png` with `matte_dir/<id>.png` into
/// `out_dir/<id>.png` and writes `out_dir/manifest.json`. Outputs are 16-bit
/// when either input is.
pub fn ingest(
    fg_dir: &Path,
    matte_dir: &Path,
    out_dir: &Path,
    dataset_name: &str,
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetManifest> {
    let fgs = stems(fg_dir)?;
    let mattes = stems(matte_dir)?;
    let fg_ids: Vec<&str> = fgs.iter().map(|(s, _)| s.as_str()).collect();
    let matte_ids: Vec<&str> = mattes.iter().map(|(s, _)| s.as_str()).collect();
    if fg_ids != matte_ids {
        return Err(Error::Input(format!(
            "foreground and matte stems differ ({} vs {} files)",
            fg_ids.len(),
            matte_ids.len()
        )));
    }
    if fgs.is_empty() {
        return Err(Error::Input(format!("no PNG files in {}", fg_dir.display())));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let splits = split(&fg_ids, test_fraction, seed)?;
    let entries = fgs
        .par_iter()
        .zip(&mattes)
        .zip(splits)
        .map(|(((id, fg_path), (_, matte_path)), split)| {
            let x = ingest_pair(&load_rgb(fg_path)?, &load_matte(matte_path)?)?;
            let depth = if stored_depth(fg_path)? == BitDepth::Sixteen || stored_depth(matte_path)? == BitDepth::Sixteen
            {
                BitDepth::Sixteen
            } else {
                BitDepth::Eight
            };
            let rgba_path = format!("{id}.png");
            save_rgba(&out_dir.join(&rgba_path), &x, depth)?;
            Ok(ManifestEntry {
                id: id.clone(),
                rgba_path,
                width: x.width(),
                height: x.height(),
                split,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        dataset_name: dataset_name.into(),
        seed,
        test_fraction,
        entries,
    };
    crate::config::write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Builds a manifest from existing RGBA files without rewriting them.
pub fn manifest_from_dir(dir: &Path, dataset_name: &str, test_fraction: f64, seed: u64) -> Result<DatasetManifest> {
    let files = stems(dir)?;
    let entries = files
        .iter()
        .map(|(id, path)| {
            let (w, h) = image::image_dimensions(path).map_err(|source| Error::Image {
                path: path.clone(),
                source,
            })?;
            Ok(ManifestEntry {
                id: id.clone(),
                rgba_path: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                width: w as usize,
                height: h as usize,
                split: Split::Train,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m = DatasetManifest {
        dataset_name: dataset_name.into(),
        seed,
        test_fraction,
        entries,
    };
    m.resplit(test_fraction, seed)?;
    Ok(m)
}

/// Table of split counts and mean resolution, one row per manifest plus a
/// `Total` row over all entries.
pub fn stats_csv(manifests: &[DatasetManifest]) -> Result<String> {
    let mut out = String::from("dataset,train,test,mean_height,mean_width,resolution\n");
    let mut line = |name: &str, s: alphabench_core::dataset::CorpusStats| {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{:.0}x{:.0}",
            s.n_train, s.n_test, s.mean_height, s.mean_width, s.mean_height, s.mean_width
        );
    };
    for m in manifests {
        line(&m.dataset_name, stats(&m.entries)?);
    }
    line("Total", stats(manifests.iter().flat_map(|m| &m.entries))?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub id: String,
    pub background: Option<[f32; 3]>,
}

/// Augments every entry with an independent generator seeded from
/// `(seed, id)`, writing `out_dir/<id>.png`.
pub fn augment_manifest(
    manifest: &DatasetManifest,
    manifest_dir: &Path,
    out_dir: &Path,
    probability: f64,
    seed: u64,
) -> Result<Vec<AugmentRecord>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let src = manifest_dir.join(&e.rgba_path);
            let x = load_rgba(&src)?;
            let mut rng = Xorshift64Star::new(entry_seed(seed, &e.id));
            let a = augment_background(&x, probability, &mut rng)?;
            save_rgba(&out_dir.join(format!("{}.png", e.id)), &a.image, stored_depth(&src)?)?;
            Ok(AugmentRecord {
                id: e.id.clone(),
                background: a.background,
            })
        })
        .collect()
}
