use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::fft::{bin_freq, Fft2};
use crate::raster::RealField;

pub const MOD_LO: f64 = 0.1;
pub const MOD_HI: f64 = 0.8;
pub const UNIFORM_MODULATION: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationKind {
    /// Piecewise-constant patches with step edges.
    M1,
    /// Smooth product of sinusoids.
    M2,
    Uniform,
}

impl std::str::FromStr for ModulationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(Self::M1),
            "m2" => Ok(Self::M2),
            "uniform" => Ok(Self::Uniform),
            _ => Err(format!("unknown modulation '{s}' (m1, m2, uniform)")),
        }
    }
}

/// Fringe amplitude map `i1` in `[0.1, 0.8]`.
pub fn modulation_map(kind: ModulationKind, width: usize, height: usize, rng: &mut impl Rng) -> RealField {
    match kind {
        ModulationKind::Uniform => RealField::filled(width, height, UNIFORM_MODULATION),
        ModulationKind::M2 => {
            let (px, py) = (width as f64 / 3.0, height as f64 / 3.0);
            let raw = RealField::from_fn(width, height, |x, y| {
                0.45 + 0.35 * (2.0 * PI * x as f64 / px).sin() * (2.0 * PI * y as f64 / py).sin()
            });
            rescale(&raw, MOD_LO, MOD_HI)
        }
        ModulationKind::M1 => {
            let noise = smooth_noise(width, height, width.min(height) as f64 / 16.0, rng);
            quantize(&noise, 4, MOD_LO, MOD_HI)
        }
    }
}

/// White Gaussian noise low-passed by a Gaussian of spatial width `sigma_px`.
pub(crate) fn smooth_noise(width: usize, height: usize, sigma_px: f64, rng: &mut impl Rng) -> RealField {
    let mut buf: Vec<Complex64> =
        (0..width * height).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect();
    let plan = Fft2::new(width, height);
    plan.forward(&mut buf);
    let k = 2.0 * PI * PI * sigma_px * sigma_px;
    for ky in 0..height {
        let fy = bin_freq(ky, height);
        for kx in 0..width {
            let fx = bin_freq(kx, width);
            buf[ky * width + kx] *= (-k * (fx * fx + fy * fy)).exp();
        }
    }
    plan.inverse(&mut buf);
    RealField::from_vec_unchecked(width, height, buf.iter().map(|c| c.re).collect())
}

/// Affine map of `f` onto `[lo, hi]`; a constant field goes to the midpoint.
pub(crate) fn rescale(f: &RealField, lo: f64, hi: f64) -> RealField {
    let (a, b) = f.min_max();
    let data = if b > a {
        f.data().iter().map(|&v| lo + (hi - lo) * (v - a) / (b - a)).collect()
    } else {
        vec![0.5 * (lo + hi); f.data().len()]
    };
    RealField::from_vec_unchecked(f.width(), f.height(), data)
}

/// Splits `f` at its quantiles into `levels` equally populated classes
/// mapped to evenly spaced values in `[lo, hi]`.
fn quantize(f: &RealField, levels: usize, lo: f64, hi: f64) -> RealField {
    let mut sorted = f.data().to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let cuts: Vec<f64> = (1..levels).map(|k| sorted[k * sorted.len() / levels]).collect();
    let step = (hi - lo) / (levels - 1) as f64;
    let data = f
        .data()
        .iter()
        .map(|&v| lo + step * cuts.iter().filter(|&&c| v >= c).count() as f64)
        .collect();
    RealField::from_vec_unchecked(f.width(), f.height(), data)
}
