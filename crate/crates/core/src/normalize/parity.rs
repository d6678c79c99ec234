//! Cross-checking the forward pass against reference outputs.
//!
//! A parity directory holds `parity_input_{k}.fpr` and
//! `parity_output_{k}.fpr` for `k` in `0..5`. The inputs are the canonical
//! rasters below; the outputs come from an independent implementation of the
//! same network run on the same weights.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::unet::unet_forward;
use super::weights::ModelWeights;
use super::NormError;
use crate::raster::{read_real, write_real, RealField};
use crate::rng::stream_rng;
use crate::simulate::{build_scene, preset, synth_fringe};

pub const PARITY_COUNT: usize = 5;
pub const PARITY_TOLERANCE: f64 = 1e-4;
const CANONICAL_SEED: u64 = 20_240_601;

pub fn parity_paths(dir: impl AsRef<Path>, k: usize) -> (PathBuf, PathBuf) {
    let d = dir.as_ref();
    (d.join(format!("parity_input_{k}.fpr")), d.join(format!("parity_output_{k}.fpr")))
}

/// Zeros, a pure carrier, a speckled M1 scene, an M2 scene at 0 dB and
/// uniform noise, all `size x size`.
pub fn canonical_inputs(size: usize) -> Result<Vec<RealField>, NormError> {
    let scene = |name: &str, speckle: Option<f64>, seed: u64| -> Result<RealField, NormError> {
        let mut p = preset(name).map_err(|e| NormError::BadArch(e.to_string()))?;
        p.width = size;
        p.height = size;
        p.speckle_px = speckle;
        let s = build_scene(&p, seed).map_err(|e| NormError::BadArch(e.to_string()))?;
        synth_fringe(&s).map_err(|e| NormError::BadArch(e.to_string()))
    };
    let mut rng = stream_rng(CANONICAL_SEED, 9);
    Ok(vec![
        RealField::filled(size, size, 0.0),
        RealField::from_fn(size, size, |x, _| 0.5 + 0.5 * (2.0 * PI * 0.05 * x as f64).cos()),
        scene("m1-20db", Some(6.0_f64.min(size as f64 / 4.0)), CANONICAL_SEED + 1)?,
        scene("m2-0db", None, CANONICAL_SEED + 2)?,
        RealField::from_fn(size, size, |_, _| rng.random_range(0.0..1.0)),
    ])
}

pub fn write_canonical_inputs(dir: impl AsRef<Path>, size: usize) -> Result<Vec<PathBuf>, NormError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| NormError::Io { path: dir.display().to_string(), source: e })?;
    canonical_inputs(size)?
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let (p, _) = parity_paths(dir, k);
            write_real(f, &p)?;
            Ok(p)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityReport {
    /// Max absolute difference per input.
    pub max_abs: Vec<f64>,
    pub tolerance: f64,
}

impl ParityReport {
    pub fn passed(&self) -> bool {
        self.max_abs.len() == PARITY_COUNT && self.max_abs.iter().all(|&d| d <= self.tolerance)
    }
}

/// Runs the forward pass on every stored input and compares it with the
/// stored output.
pub fn check_parity(weights: &ModelWeights, dir: impl AsRef<Path>) -> Result<ParityReport, NormError> {
    let mut max_abs = Vec::with_capacity(PARITY_COUNT);
    for k in 0..PARITY_COUNT {
        let (pi, po) = parity_paths(&dir, k);
        let input = read_real(&pi)?;
        let want = read_real(&po)?;
        let got = unet_forward(weights, &input)?;
        if want.dims() != got.field().dims() {
            return Err(NormError::SizeMismatch { got: want.dims(), want: weights.arch.input_size });
        }
        let d = got.field().data().iter().zip(want.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        max_abs.push(d);
    }
    Ok(ParityReport { max_abs, tolerance: PARITY_TOLERANCE })
}
