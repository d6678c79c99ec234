//! Paired (degraded, normalized) training data.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modulation::rescale;
use super::scene::random_phase;
use super::zernike::{zernike_eval, ZernikeSpec};
use super::{streams, synth_fringe, SimError, SimScene};
use crate::raster::{write_real, RealField};
use crate::rng::{derive_seed, stream_rng};

pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetParams {
    pub width: usize,
    pub height: usize,
    pub fx: (f64, f64),
    pub snr_db: (f64, f64),
    pub speckle_px: (f64, f64),
    pub phase_pv: (f64, f64),
    pub zernike_terms: usize,
    pub max_slope: f64,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            fx: (0.04, 0.06),
            snr_db: (10.0, 40.0),
            speckle_px: (4.0, 8.0),
            phase_pv: (10.0, 30.0),
            zernike_terms: 20,
            max_slope: 0.6,
        }
    }
}

/// One line of `manifest.jsonl`. Paths are relative to the dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub index: usize,
    pub seed: u64,
    pub fx: f64,
    pub snr_db: f64,
    pub speckle_px: f64,
    pub input_path: String,
    pub target_path: String,
}

/// Random smooth field with values in `[lo, hi]`.
fn smooth_map(p: &DatasetParams, lo: f64, hi: f64, rng: &mut impl Rng) -> Result<RealField, SimError> {
    let c: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Ok(rescale(&zernike_eval(&ZernikeSpec { coefficients: c }, p.width, p.height)?, lo, hi))
}

fn item(p: &DatasetParams, index: usize, seed: u64) -> Result<(SimScene, ManifestRecord), SimError> {
    let mut rng = stream_rng(seed, streams::PHASE);
    let fx = rng.random_range(p.fx.0..=p.fx.1);
    let snr_db = rng.random_range(p.snr_db.0..=p.snr_db.1);
    let speckle_px = rng.random_range(p.speckle_px.0..=p.speckle_px.1);
    let pv = rng.random_range(p.phase_pv.0..=p.phase_pv.1);
    let phase = random_phase(p.width, p.height, p.zernike_terms, pv, p.max_slope * 2.0 * PI * fx, &mut rng)?;
    let mut maps = stream_rng(seed, streams::MODULATION);
    let i1_lo = maps.random_range(0.05..=0.3);
    let i1_hi = maps.random_range(i1_lo + 0.2..=0.9);
    let modulation = smooth_map(p, i1_lo, i1_hi, &mut maps)?;
    let i0_hi = maps.random_range(0.0..=1.0) * (1.0 - i1_hi);
    let background = smooth_map(p, 0.0, i0_hi, &mut maps)?;
    let scene = SimScene {
        width: p.width,
        height: p.height,
        phase,
        background,
        modulation,
        fx,
        snr_db: Some(snr_db),
        noise_sigma: None,
        speckle_px: Some(speckle_px),
        seed,
        saturate: false,
    };
    let rec = ManifestRecord {
        index,
        seed,
        fx,
        snr_db,
        speckle_px,
        input_path: format!("input_{index:05}.fpr"),
        target_path: format!("target_{index:05}.fpr"),
    };
    Ok((scene, rec))
}

/// Writes `n` input/target raster pairs plus `manifest.jsonl` into `out_dir`.
///
/// Item `i` uses seed `derive_seed(master_seed, i)`, so the output does not
/// depend on how the items are scheduled across threads.
pub fn gen_dataset(
    n: usize,
    out_dir: impl AsRef<Path>,
    params: &DatasetParams,
    master_seed: u64,
) -> Result<Vec<ManifestRecord>, SimError> {
    if n == 0 {
        return Err(SimError::BadParam("dataset size must be >= 1".into()));
    }
    let dir = out_dir.as_ref();
    let io = |e| SimError::IoFailure { path: dir.display().to_string(), source: e };
    fs::create_dir_all(dir).map_err(io)?;
    let records = (0..n)
        .into_par_iter()
        .map(|i| {
            let (scene, rec) = item(params, i, derive_seed(master_seed, i as u64))?;
            write_real(&synth_fringe(&scene)?, dir.join(&rec.input_path))?;
            write_real(&scene.normalized_truth(), dir.join(&rec.target_path))?;
            Ok(rec)
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).expect("manifest record serializes"));
        text.push('\n');
    }
    let path = dir.join(MANIFEST_NAME);
    fs::File::create(&path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| SimError::IoFailure { path: path.display().to_string(), source: e })?;
    Ok(records)
}
