//! AFS1 feature files: `b"AFS1"`, `u32` LE row count N, `u32` LE dimension
//! D, N·D `f32` LE values row-major, then a UTF-8 JSON trailer holding at
//! least an `"extractor"` tag.

use std::path::Path;

use alphabench_core::metrics::FeatureSet;
use serde_json::{Map, Value};

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AFS1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub features: FeatureSet,
    pub extractor: String,
    /// Remaining trailer keys, preserved verbatim.
    pub metadata: Map<String, Value>,
}

impl FeatureFile {
    pub fn new(features: FeatureSet, extractor: impl Into<String>) -> Self {
        Self {
            features,
            extractor: extractor.into(),
            metadata: Map::new(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let f = &self.features;
        let mut out = Vec::with_capacity(12 + 4 * f.rows().len() + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(f.len() as u32).to_le_bytes());
        out.extend_from_slice(&(f.dim() as u32).to_le_bytes());
        for v in f.rows() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let mut trailer = self.metadata.clone();
        trailer.insert("extractor".into(), Value::String(self.extractor.clone()));
        out.extend_from_slice(Value::Object(trailer).to_string().as_bytes());
        out
    }

    /// Parses a feature file; `path` is only used in error messages.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |m: &str| Error::format(path, m.to_string());
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("not an AFS1 feature file"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let (n, d) = (word(4), word(8));
        let payload = n
            .checked_mul(d)
            .and_then(|v| v.checked_mul(4))
            .filter(|&len| 12 + len <= bytes.len())
            .ok_or_else(|| bad("truncated feature payload"))?;
        let rows = bytes[12..12 + payload]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let trailer = std::str::from_utf8(&bytes[12 + payload..]).map_err(|_| bad("trailer is not UTF-8"))?;
        let Value::Object(mut metadata) = serde_json::from_str(trailer).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?
        else {
            return Err(bad("trailer is not a JSON object"));
        };
        let extractor = match metadata.remove("extractor") {
            Some(Value::String(s)) => s,
            _ => return Err(bad("trailer lacks a string \"extractor\" tag")),
        };
        Ok(Self {
            features: FeatureSet::new(n, d, rows)?,
            extractor,
            metadata,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Features from different extractors are not comparable.
pub fn check_compatible(a: &FeatureFile, b: &FeatureFile) -> Result<()> {
    if a.extractor != b.extractor {
        return Err(Error::Input(format!(
            "feature extractor tags differ: {:?} vs {:?}",
            a.extractor, b.extractor
        )));
    }
    if a.features.dim() != b.features.dim() {
        return Err(Error::Input(format!(
            "feature dimensions differ: {} vs {}",
            a.features.dim(),
            b.features.dim()
        )));
    }
    Ok(())
}
