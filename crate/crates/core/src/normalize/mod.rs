//! Fringe normalization: remove the background and flatten the modulation so
//! the pattern reads `cos(2 pi fx x + phi)`.
//!
//! Two paths exist: a spectral estimator that needs no model, and forward
//! inference of an encoder-decoder network loaded from an FNW1 file.

mod classical;
mod parity;
mod unet;
mod weights;

use thiserror::Error;

use crate::raster::{RasterError, RealField};

pub use classical::{classical_normalize, BACKGROUND_RADIUS};
pub use parity::{canonical_inputs, check_parity, parity_paths, write_canonical_inputs, ParityReport, PARITY_COUNT, PARITY_TOLERANCE};
pub use unet::{rescale_unit, tile_origins, unet_forward, unet_tiled, TILE_OVERLAP};
pub use weights::{
    decode_weights, encode_weights, load_weights, save_weights, Arch, Layer, LayerKind, LayerSpec, ModelWeights,
    KERNEL, WEIGHTS_MAGIC,
};

#[derive(Debug, Error)]
pub enum NormError {
    #[error("no resolvable carrier in the input")]
    NoCarrier,
    #[error("not an FNW1 weights file")]
    BadMagic,
    #[error("tensor shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("weights blob hash does not match header")]
    HashMismatch,
    #[error("bad weights header: {0}")]
    Header(String),
    #[error("weights file truncated")]
    Truncated,
    #[error("cannot access {path}")]
    Io { path: String, source: std::io::Error },
    #[error("input is {got:?}, network expects {want}x{want}")]
    SizeMismatch { got: (usize, usize), want: usize },
    #[error("unsupported architecture: {0}")]
    BadArch(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Background-free, unit-modulation fringe with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFringe {
    field: RealField,
}

impl NormalizedFringe {
    /// Clamps into `[-1, 1]`.
    pub fn new(field: RealField) -> Self {
        let (w, h) = field.dims();
        let data = field.into_data().into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        Self { field: RealField::from_vec_unchecked(w, h, data) }
    }

    pub fn field(&self) -> &RealField {
        &self.field
    }

    pub fn into_field(self) -> RealField {
        self.field
    }
}

/// Network inference when weights are given, tiled for any input size;
/// otherwise the classical estimator.
pub fn normalize_auto(img: &RealField, weights: Option<&ModelWeights>) -> Result<NormalizedFringe, NormError> {
    match weights {
        Some(w) => unet_tiled(w, img),
        None => classical_normalize(img),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constructor_clamps() {
        let f = NormalizedFringe::new(RealField::new(3, 1, vec![-2.0, 0.5, 1.5]).unwrap());
        assert_eq!(f.field().data(), &[-1.0, 0.5, 1.0]);
    }

    #[test]
    fn dispatch() {
        let img = RealField::from_fn(128, 64, |x, _| 0.5 + 0.4 * (2.0 * PI * 0.05 * x as f64).cos());
        assert_eq!(normalize_auto(&img, None).unwrap(), classical_normalize(&img).unwrap());
        let arch = Arch { depth: 3, base_channels: 2, input_size: 64 };
        let w = ModelWeights::random(arch, 9).unwrap();
        let tile = img.crop(0, 0, 64, 64).unwrap();
        assert_eq!(normalize_auto(&tile, Some(&w)).unwrap(), unet_forward(&w, &tile).unwrap());
    }
}
