//! Synthetic carrier fringes with ground truth.
//!
//! A scene holds the phase `phi`, background `i0` and modulation `i1`; the
//! clean pattern is `i0 + i1 cos(2 pi fx x + phi)`. Speckle multiplies the
//! modulated term and white Gaussian noise is added last. Every random draw
//! comes from a stream derived from the scene seed (see [`crate::rng`]).

mod dataset;
mod modulation;
mod noise;
mod scene;
mod sequence;
mod zernike;

use std::f64::consts::PI;

use thiserror::Error;

use crate::raster::{RasterError, RealField};
use crate::rng::stream_rng;

pub use dataset::{gen_dataset, DatasetParams, ManifestRecord, MANIFEST_NAME};
pub use modulation::{modulation_map, ModulationKind, MOD_HI, MOD_LO, UNIFORM_MODULATION};
pub use noise::{add_awgn, add_gaussian, apply_speckle, awgn_sigma, gen_speckle};
pub use scene::{build_scene, preset, random_phase, SceneParams, SPECKLE_STUDY_SIGMA};
pub use sequence::{diffusion_profile, synth_diffusion_sequence, DiffusionSequence};
pub use zernike::{disk_coords, osa_to_nm, zernike_eval, zernike_term, ZernikeSpec};

/// Random stream indices within one scene seed.
pub(crate) mod streams {
    pub const PHASE: u64 = 0;
    pub const SPECKLE: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const BACKGROUND: u64 = 3;
    pub const MODULATION: u64 = 4;
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("Zernike coefficient list is empty")]
    EmptySpec,
    #[error("scene invariant violated: {0}")]
    InvariantViolation(String),
    #[error("field is constant; SNR is undefined")]
    ConstantField,
    #[error("speckle size {0} outside [2, min(width, height)/4]")]
    BadSpeckleSize(f64),
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("times must be positive and strictly ascending")]
    BadTimes,
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("cannot write {path}")]
    IoFailure { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScene {
    pub width: usize,
    pub height: usize,
    /// Radians, carrier excluded.
    pub phase: RealField,
    pub background: RealField,
    pub modulation: RealField,
    /// Cycles per pixel along `x`.
    pub fx: f64,
    /// Noise referenced to the power of the clean modulated term.
    pub snr_db: Option<f64>,
    /// Fixed noise standard deviation (exclusive with `snr_db`).
    pub noise_sigma: Option<f64>,
    pub speckle_px: Option<f64>,
    pub seed: u64,
    /// Clip the output to `[0, 1.5]`.
    pub saturate: bool,
}

impl SimScene {
    pub fn validate(&self) -> Result<(), SimError> {
        let dims = (self.width, self.height);
        if self.phase.dims() != dims || self.background.dims() != dims || self.modulation.dims() != dims {
            return Err(SimError::DimensionMismatch);
        }
        if !(self.fx > 0.0 && self.fx < 0.5) {
            return Err(SimError::InvariantViolation(format!("fx = {} outside (0, 0.5)", self.fx)));
        }
        for (&b, &m) in self.background.data().iter().zip(self.modulation.data()) {
            if !(0.0..=1.0).contains(&b) || !(0.0..=1.0).contains(&m) || b + m > 1.0 + 1e-12 {
                return Err(SimError::InvariantViolation(format!("i0 = {b}, i1 = {m}")));
            }
        }
        if self.snr_db.is_some() && self.noise_sigma.is_some() {
            return Err(SimError::InvariantViolation("both snr_db and noise_sigma set".into()));
        }
        if let Some(s) = self.noise_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(SimError::BadParam(format!("noise_sigma = {s}")));
            }
        }
        Ok(())
    }

    /// Total phase `2 pi fx x + phi`.
    pub fn total_phase(&self, x: usize, y: usize) -> f64 {
        2.0 * PI * self.fx * x as f64 + self.phase.get(x, y)
    }

    /// Noise-free `i1 cos(2 pi fx x + phi)`.
    pub fn modulated_term(&self) -> RealField {
        RealField::from_fn(self.width, self.height, |x, y| self.modulation.get(x, y) * self.total_phase(x, y).cos())
    }

    /// Ideal normalized fringe `cos(2 pi fx x + phi)`.
    pub fn normalized_truth(&self) -> RealField {
        RealField::from_fn(self.width, self.height, |x, y| self.total_phase(x, y).cos())
    }
}

/// Renders the degraded fringe pattern of `scene`.
pub fn synth_fringe(scene: &SimScene) -> Result<RealField, SimError> {
    scene.validate()?;
    let ac = scene.modulated_term();
    let mut out = RealField::from_vec_unchecked(
        scene.width,
        scene.height,
        ac.data().iter().zip(scene.background.data()).map(|(a, b)| a + b).collect(),
    );
    if let Some(px) = scene.speckle_px {
        let s = gen_speckle(scene.width, scene.height, px, &mut stream_rng(scene.seed, streams::SPECKLE))?;
        out = apply_speckle(&out, &scene.background, &s)?;
    }
    let sigma = match (scene.snr_db, scene.noise_sigma) {
        (Some(snr), _) if snr.is_finite() => {
            let p_ac = ac.variance();
            if !(p_ac > 0.0) {
                return Err(SimError::ConstantField);
            }
            awgn_sigma(p_ac, snr)
        }
        (_, Some(s)) => s,
        _ => 0.0,
    };
    out = add_gaussian(&out, sigma, &mut stream_rng(scene.seed, streams::NOISE));
    if scene.saturate {
        out = out.map(|v| v.clamp(0.0, 1.5))?;
    }
    Ok(out)
}
