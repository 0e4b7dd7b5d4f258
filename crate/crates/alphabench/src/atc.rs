//! ATC1 tensor containers: `b"ATC1"`, `u32` LE header length, UTF-8 JSON
//! header, `u64` LE payload length in bytes, then the `f32` LE payload.
//! Header offsets count `f32` elements from the start of the payload.

use std::path::Path;

use alphabench_core::surgery::{ConvTensor, TensorContainer};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ATC1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    source: String,
    tensors: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    name: String,
    /// `[kernel, kernel, in_channels, out_channels]`.
    shape: [usize; 4],
    weight_offset: usize,
    bias_offset: usize,
}

pub fn to_bytes(c: &TensorContainer) -> Vec<u8> {
    let mut payload: Vec<f32> = Vec::new();
    let mut tensors = Vec::with_capacity(c.len());
    for (name, t) in c.iter() {
        let weight_offset = payload.len();
        payload.extend_from_slice(t.weights());
        let bias_offset = payload.len();
        payload.extend_from_slice(t.bias());
        tensors.push(Entry {
            name: name.into(),
            shape: [t.kernel(), t.kernel(), t.in_channels(), t.out_channels()],
            weight_offset,
            bias_offset,
        });
    }
    let header = serde_json::to_vec(&Header {
        source: c.source.clone(),
        tensors,
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(16 + header.len() + 4 * payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&((4 * payload.len()) as u64).to_le_bytes());
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<TensorContainer> {
    let bad = |m: String| Error::format(path, m);
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(bad("not an ATC1 container".into()));
    }
    let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let hend = 8 + hlen;
    if bytes.len() < hend + 8 {
        return Err(bad("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[8..hend]).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    let plen = u64::from_le_bytes(bytes[hend..hend + 8].try_into().unwrap()) as usize;
    let body = &bytes[hend + 8..];
    if body.len() != plen || plen % 4 != 0 {
        return Err(bad(format!("payload is {} bytes, header says {plen}", body.len())));
    }
    let payload: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let slice = |off: usize, len: usize, what: &str, name: &str| -> Result<Vec<f32>> {
        off.checked_add(len)
            .and_then(|end| payload.get(off..end))
            .map(<[f32]>::to_vec)
            .ok_or_else(|| bad(format!("{name}: {what} extends past the payload")))
    };
    let mut c = TensorContainer::new(header.source);
    for e in header.tensors {
        let [k, k2, cin, cout] = e.shape;
        if k != k2 {
            return Err(bad(format!("{}: non-square kernel {k}x{k2}", e.name)));
        }
        let weights = slice(e.weight_offset, k * k * cin * cout, "weights", &e.name)?;
        let bias = slice(e.bias_offset, cout, "bias", &e.name)?;
        c.insert(e.name, ConvTensor::new(k, cin, cout, weights, bias)?)?;
    }
    Ok(c)
}

pub fn read(path: &Path) -> Result<TensorContainer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes, path)
}

pub fn write(c: &TensorContainer, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(c)).map_err(|e| Error::io(path, e))
}
