//! FNW1 weights container.
//!
//! Layout (little-endian): `"FNW1"`, `u32` header length `n`, `n` bytes of
//! JSON header, then the `f32` blob. The header lists every tensor with its
//! byte offset into the blob and carries the blob's SHA-256.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::NormError;
use crate::rng::stream_rng;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"FNW1";
/// Convolution kernel side.
pub const KERNEL: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub depth: usize,
    pub base_channels: usize,
    pub input_size: usize,
}

impl Default for Arch {
    fn default() -> Self {
        Self { depth: 5, base_channels: 16, input_size: 256 }
    }
}

impl Arch {
    /// Encoder-decoder with 8 levels and 64 base channels.
    pub fn full() -> Self {
        Self { depth: 8, base_channels: 64, input_size: 256 }
    }

    pub fn validate(&self) -> Result<(), NormError> {
        if self.depth < 2 || self.depth > 12 || self.base_channels == 0 {
            return Err(NormError::BadArch(format!("depth {} / base {}", self.depth, self.base_channels)));
        }
        if self.input_size == 0 || !self.input_size.is_multiple_of(1 << self.depth) {
            return Err(NormError::BadArch(format!(
                "input size {} not divisible by 2^{}",
                self.input_size, self.depth
            )));
        }
        Ok(())
    }

    /// Output channels of encoder block `i`.
    pub fn enc_channels(&self, i: usize) -> usize {
        self.base_channels << i.min(3)
    }

    /// Every tensor in forward order.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let d = self.depth;
        let mut v = Vec::new();
        let norm = |v: &mut Vec<LayerSpec>, prefix: &str, c: usize| {
            v.push(LayerSpec { name: format!("{prefix}.norm.scale"), kind: LayerKind::NormScale, shape: vec![c] });
            v.push(LayerSpec { name: format!("{prefix}.norm.bias"), kind: LayerKind::NormBias, shape: vec![c] });
        };
        for i in 0..d {
            let cin = if i == 0 { 1 } else { self.enc_channels(i - 1) };
            let cout = self.enc_channels(i);
            v.push(LayerSpec { name: format!("enc{i}.conv"), kind: LayerKind::Conv, shape: vec![cout, cin, KERNEL, KERNEL] });
            if i > 0 {
                norm(&mut v, &format!("enc{i}"), cout);
            }
        }
        for j in 0..d - 1 {
            let cin = if j == 0 { self.enc_channels(d - 1) } else { 2 * self.enc_channels(d - 1 - j) };
            let cout = self.enc_channels(d - 2 - j);
            v.push(LayerSpec {
                name: format!("dec{j}.tconv"),
                kind: LayerKind::TransposedConv,
                shape: vec![cin, cout, KERNEL, KERNEL],
            });
            norm(&mut v, &format!("dec{j}"), cout);
        }
        v.push(LayerSpec {
            name: "out.tconv".into(),
            kind: LayerKind::TransposedConv,
            shape: vec![2 * self.enc_channels(0), 1, KERNEL, KERNEL],
        });
        v
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_specs().iter().map(|s| s.shape.iter().product::<usize>()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Conv,
    TransposedConv,
    NormScale,
    NormBias,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub arch: Arch,
    pub layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLayer {
    name: String,
    kind: LayerKind,
    shape: Vec<usize>,
    byte_offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    arch: Arch,
    layers: Vec<HeaderLayer>,
    blob_sha256: String,
}

impl ModelWeights {
    /// Checks names, kinds and shapes against the architecture.
    pub fn validate(&self) -> Result<(), NormError> {
        self.arch.validate()?;
        let specs = self.arch.layer_specs();
        if specs.len() != self.layers.len() {
            return Err(NormError::ShapeMismatch(format!("{} tensors, architecture needs {}", self.layers.len(), specs.len())));
        }
        for (s, l) in specs.iter().zip(&self.layers) {
            if s.name != l.name || s.kind != l.kind || s.shape != l.shape {
                return Err(NormError::ShapeMismatch(format!("{} {:?} {:?}, expected {} {:?} {:?}", l.name, l.kind, l.shape, s.name, s.kind, s.shape)));
            }
            if l.data.len() != l.shape.iter().product::<usize>() {
                return Err(NormError::ShapeMismatch(format!("{}: {} values for shape {:?}", l.name, l.data.len(), l.shape)));
            }
        }
        Ok(())
    }

    /// He-style random convolutions, unit scales and zero biases jittered a
    /// little; used for tests and smoke runs.
    pub fn random(arch: Arch, seed: u64) -> Result<Self, NormError> {
        arch.validate()?;
        let mut rng = stream_rng(seed, 0);
        let layers = arch
            .layer_specs()
            .into_iter()
            .map(|s| {
                let n: usize = s.shape.iter().product();
                let data = match s.kind {
                    LayerKind::Conv | LayerKind::TransposedConv => {
                        let fan_in = if s.kind == LayerKind::Conv { s.shape[1] } else { s.shape[0] / 4 };
                        let std = (2.0 / (fan_in * KERNEL * KERNEL) as f64).sqrt();
                        (0..n).map(|_| (std * rng.sample::<f64, _>(StandardNormal)) as f32).collect()
                    }
                    LayerKind::NormScale => (0..n).map(|_| 1.0 + 0.1 * rng.sample::<f32, _>(StandardNormal)).collect(),
                    LayerKind::NormBias => (0..n).map(|_| 0.1 * rng.sample::<f32, _>(StandardNormal)).collect(),
                };
                Layer { name: s.name, kind: s.kind, shape: s.shape, data }
            })
            .collect();
        Ok(Self { arch, layers })
    }

    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.name == name)
    }
}

fn blob_of(layers: &[Layer]) -> Vec<u8> {
    layers.iter().flat_map(|l| l.data.iter().flat_map(|v| v.to_le_bytes())).collect()
}

pub fn encode_weights(w: &ModelWeights) -> Result<Vec<u8>, NormError> {
    w.validate()?;
    let blob = blob_of(&w.layers);
    let mut offset = 0;
    let layers = w
        .layers
        .iter()
        .map(|l| {
            let h = HeaderLayer { name: l.name.clone(), kind: l.kind, shape: l.shape.clone(), byte_offset: offset };
            offset += 4 * l.data.len();
            h
        })
        .collect();
    let header = Header { arch: w.arch, layers, blob_sha256: hex::encode(Sha256::digest(&blob)) };
    let json = serde_json::to_vec(&header).map_err(|e| NormError::Header(e.to_string()))?;
    let mut out = Vec::with_capacity(8 + json.len() + blob.len());
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&blob);
    Ok(out)
}

pub fn decode_weights(bytes: &[u8]) -> Result<ModelWeights, NormError> {
    if bytes.len() < 4 || &bytes[..4] != WEIGHTS_MAGIC {
        return Err(NormError::BadMagic);
    }
    if bytes.len() < 8 {
        return Err(NormError::Truncated);
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let json = bytes.get(8..8 + n).ok_or(NormError::Truncated)?;
    let header: Header = serde_json::from_slice(json).map_err(|e| NormError::Header(e.to_string()))?;
    let blob = &bytes[8 + n..];
    if hex::encode(Sha256::digest(blob)) != header.blob_sha256.to_ascii_lowercase() {
        return Err(NormError::HashMismatch);
    }
    let mut layers = Vec::with_capacity(header.layers.len());
    let mut expected_offset = 0;
    for h in header.layers {
        let len = h.shape.iter().product::<usize>();
        if h.byte_offset != expected_offset {
            return Err(NormError::ShapeMismatch(format!("{}: offset {} (expected {expected_offset})", h.name, h.byte_offset)));
        }
        let raw = blob.get(h.byte_offset..h.byte_offset + 4 * len).ok_or(NormError::Truncated)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        expected_offset += 4 * len;
        layers.push(Layer { name: h.name, kind: h.kind, shape: h.shape, data });
    }
    if expected_offset != blob.len() {
        return Err(NormError::ShapeMismatch(format!("blob has {} bytes, tensors use {expected_offset}", blob.len())));
    }
    let w = ModelWeights { arch: header.arch, layers };
    w.validate()?;
    Ok(w)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<ModelWeights, NormError> {
    let p = path.as_ref();
    let bytes = fs::read(p).map_err(|e| NormError::Io { path: p.display().to_string(), source: e })?;
    decode_weights(&bytes)
}

pub fn save_weights(w: &ModelWeights, path: impl AsRef<Path>) -> Result<(), NormError> {
    let p = path.as_ref();
    fs::write(p, encode_weights(w)?).map_err(|e| NormError::Io { path: p.display().to_string(), source: e })
}
