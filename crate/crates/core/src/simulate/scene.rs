use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::modulation::{modulation_map, rescale, smooth_noise, ModulationKind};
use super::zernike::{zernike_eval, ZernikeSpec};
use super::{streams, SimError, SimScene};
use crate::raster::RealField;
use crate::rng::stream_rng;

/// Fixed AWGN standard deviation of the speckle-size study.
pub const SPECKLE_STUDY_SIGMA: f64 = 0.3645;

/// Recipe for a random test scene; [`build_scene`] turns it into a
/// [`SimScene`] for a given seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    pub modulation: ModulationKind,
    pub fx: f64,
    /// Peak-to-valley range of the random Zernike phase, radians.
    pub phase_pv: (f64, f64),
    /// Number of OSA/ANSI terms (piston excluded from the draw).
    pub zernike_terms: usize,
    /// Cap on `|d phi / dx|` as a fraction of the carrier `2 pi fx`, so the
    /// local fringe frequency never changes sign.
    pub max_slope: f64,
    /// Background range.
    pub background: (f64, f64),
    pub snr_db: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub speckle_px: Option<f64>,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            modulation: ModulationKind::Uniform,
            fx: 0.05,
            phase_pv: (10.0, 30.0),
            zernike_terms: 20,
            max_slope: 0.6,
            background: (0.05, 0.2),
            snr_db: None,
            noise_sigma: None,
            speckle_px: None,
        }
    }
}

/// Named scene recipes: `clean`, `<mod>-clean`, `<mod>-<snr>db` with
/// `<mod>` one of `m1`, `m2`, `uniform`.
pub fn preset(name: &str) -> Result<SceneParams, SimError> {
    let bad = || SimError::BadParam(format!("unknown preset '{name}'"));
    let mut p = SceneParams::default();
    if name == "clean" {
        return Ok(p);
    }
    let (m, rest) = name.split_once('-').ok_or_else(bad)?;
    p.modulation = m.parse().map_err(|_| bad())?;
    if rest == "clean" {
        return Ok(p);
    }
    let snr = rest.strip_suffix("db").ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?;
    p.snr_db = Some(snr);
    Ok(p)
}

/// Random Zernike phase with `terms` modes, rescaled to peak-to-valley `pv`
/// and then flattened if its steepest `x` step exceeds `max_grad` rad/px.
pub fn random_phase(
    width: usize,
    height: usize,
    terms: usize,
    pv: f64,
    max_grad: f64,
    rng: &mut impl Rng,
) -> Result<RealField, SimError> {
    if terms < 2 {
        return Err(SimError::BadParam(format!("zernike_terms = {terms} < 2")));
    }
    let mut c = vec![0.0];
    c.extend((1..terms).map(|_| rng.random_range(-1.0..=1.0)));
    let raw = zernike_eval(&ZernikeSpec { coefficients: c }, width, height)?;
    let (lo, hi) = raw.min_max();
    let mean = raw.mean();
    let mut scale = if hi > lo { pv / (hi - lo) } else { 0.0 };
    let steepest = (0..height)
        .flat_map(|y| raw.row(y).windows(2).map(|p| (p[1] - p[0]).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    if steepest * scale > max_grad {
        scale = max_grad / steepest;
    }
    Ok(raw.map(|v| (v - mean) * scale)?)
}

fn draw(range: (f64, f64), rng: &mut impl Rng) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..=range.1)
    } else {
        range.0
    }
}

pub fn build_scene(p: &SceneParams, seed: u64) -> Result<SimScene, SimError> {
    if !(p.fx > 0.0 && p.fx < 0.5) {
        return Err(SimError::InvariantViolation(format!("fx = {} outside (0, 0.5)", p.fx)));
    }
    let mut rng = stream_rng(seed, streams::PHASE);
    let pv = draw(p.phase_pv, &mut rng);
    let phase = random_phase(p.width, p.height, p.zernike_terms, pv, p.max_slope * 2.0 * PI * p.fx, &mut rng)?;
    let bg_noise = smooth_noise(p.width, p.height, p.width.min(p.height) as f64 / 8.0, &mut stream_rng(seed, streams::BACKGROUND));
    let background = rescale(&bg_noise, p.background.0, p.background.1);
    let modulation = modulation_map(p.modulation, p.width, p.height, &mut stream_rng(seed, streams::MODULATION));
    let scene = SimScene {
        width: p.width,
        height: p.height,
        phase,
        background,
        modulation,
        fx: p.fx,
        snr_db: p.snr_db,
        noise_sigma: p.noise_sigma,
        speckle_px: p.speckle_px,
        seed,
        saturate: false,
    };
    scene.validate()?;
    Ok(scene)
}
