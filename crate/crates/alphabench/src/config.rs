//! JSON files: background moments, loss weights, dataset manifests and
//! plugin declarations.

use std::path::Path;

use alphabench_core::dataset::DatasetManifest;
use alphabench_core::losses::LossWeights;
use alphabench_core::BackgroundMoments;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)).map_err(|e| Error::io(path, e))
}

pub fn load_moments(path: &Path) -> Result<BackgroundMoments> {
    let m: BackgroundMoments = read_json(path)?;
    m.validate()?;
    Ok(m)
}

pub fn load_loss_weights(path: &Path) -> Result<LossWeights> {
    let w: LossWeights = read_json(path)?;
    w.validate()?;
    Ok(w)
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let m: DatasetManifest = read_json(path)?;
    m.check_unique_ids()?;
    Ok(m)
}
