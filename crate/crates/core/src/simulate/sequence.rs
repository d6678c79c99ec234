//! Phase frames of a one-dimensional diffusion front.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::raster::RealField;
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSequence {
    /// Diffusion coefficient, m^2/s.
    pub d: f64,
    /// Frame times, seconds, strictly ascending.
    pub times: Vec<f64>,
    /// Metres per pixel.
    pub px: f64,
    pub width: usize,
    pub height: usize,
    /// Peak-to-valley of the first frame, radians.
    pub first_pv: f64,
    /// Standard deviation of additive phase noise, radians.
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for DiffusionSequence {
    fn default() -> Self {
        Self {
            d: 1.47e-9,
            times: vec![120.0, 240.0, 360.0, 480.0, 600.0, 900.0, 1200.0, 1500.0, 1800.0],
            px: 9.1e-6,
            width: 2048,
            height: 1024,
            first_pv: 6.0,
            noise_sd: 0.0,
            seed: 0,
        }
    }
}

impl DiffusionSequence {
    /// Column of the separation point.
    pub fn center_column(&self) -> usize {
        self.width / 2
    }

    /// Amplitude `A` giving the requested first-frame peak-to-valley.
    pub fn amplitude(&self) -> f64 {
        let t0 = self.times[0];
        let c = self.center_column() as f64;
        let prof = |x: usize| diffusion_profile((x as f64 - c) * self.px, self.d, t0);
        let (lo, hi) = (0..self.width).map(prof).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        self.first_pv / (hi - lo)
    }
}

/// `exp(-x^2 / (4 D t)) / (2 sqrt(D t))`.
pub fn diffusion_profile(x: f64, d: f64, t: f64) -> f64 {
    (-x * x / (4.0 * d * t)).exp() / (2.0 * (d * t).sqrt())
}

/// One phase frame per time, constant down the columns, plus Gaussian noise.
pub fn synth_diffusion_sequence(p: &DiffusionSequence) -> Result<Vec<RealField>, SimError> {
    if !(p.d > 0.0 && p.d.is_finite()) || !(p.px > 0.0) || p.width < 2 || p.height < 1 {
        return Err(SimError::BadParam("need D > 0, px > 0, width >= 2".into()));
    }
    if p.times.is_empty() || p.times[0] <= 0.0 || p.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SimError::BadTimes);
    }
    if !(p.noise_sd >= 0.0) {
        return Err(SimError::BadParam(format!("noise_sd = {}", p.noise_sd)));
    }
    let a = p.amplitude();
    let c = p.center_column() as f64;
    let noise = Normal::new(0.0, p.noise_sd).expect("finite sd");
    Ok(p.times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let row: Vec<f64> = (0..p.width).map(|x| a * diffusion_profile((x as f64 - c) * p.px, p.d, t)).collect();
            let mut rng = stream_rng(p.seed, k as u64);
            RealField::from_fn(p.width, p.height, |x, _| {
                if p.noise_sd > 0.0 { row[x] + noise.sample(&mut rng) } else { row[x] }
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DiffusionSequence {
        DiffusionSequence { width: 512, height: 4, times: vec![120.0, 900.0], ..Default::default() }
    }

    #[test]
    fn first_frame_pv_and_pointwise_value() {
        let p = small();
        let f = synth_diffusion_sequence(&p).unwrap();
        let (lo, hi) = f[0].min_max();
        assert!((hi - lo - 6.0).abs() < 1e-9);
        let a = p.amplitude();
        let x: f64 = 100.0 * 9.1e-6;
        let want = a * (-x * x / (4.0 * 1.47e-9 * 900.0)).exp() / (2.0 * (1.47e-9_f64 * 900.0).sqrt());
        assert!((f[1].get(256 + 100, 2) - want).abs() < 1e-12);
    }

    #[test]
    fn late_frames_decay() {
        let mut p = small();
        p.times = vec![120.0, 1e6, 1e12];
        let f = synth_diffusion_sequence(&p).unwrap();
        assert!(f[2].min_max().1 < 1e-3 * f[0].min_max().1);
    }

    #[test]
    fn bad_times() {
        let mut p = small();
        p.times = vec![900.0, 120.0];
        assert!(matches!(synth_diffusion_sequence(&p), Err(SimError::BadTimes)));
        p.times = vec![];
        assert!(matches!(synth_diffusion_sequence(&p), Err(SimError::BadTimes)));
    }

    #[test]
    fn noise_is_seeded() {
        let mut p = small();
        p.noise_sd = 0.05;
        assert_eq!(synth_diffusion_sequence(&p).unwrap(), synth_diffusion_sequence(&p).unwrap());
    }
}
