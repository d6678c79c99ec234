use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::demodulate::estimate_carrier_real;
use crate::fft::{bin_freq, Fft2};
use crate::raster::{ComplexField, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FtConfig {
    /// Cycles/pixel along `x`; estimated from the image when absent.
    pub band_center: Option<f64>,
    /// Cycles/pixel; `0.8 * band_center` when absent.
    pub band_halfwidth: Option<f64>,
}

impl FtConfig {
    fn resolve(&self, img: &RealField) -> Result<(f64, f64), BaselineError> {
        let c = match self.band_center {
            Some(c) => c,
            None => estimate_carrier_real(img, 0.01).map_err(|_| BaselineError::NoCarrier)?,
        };
        let hw = self.band_halfwidth.unwrap_or(0.8 * c);
        if !(c > 0.0 && c < 0.5 && hw > 0.0 && c - hw > 0.0) {
            return Err(BaselineError::BadConfig(format!("band {c} +- {hw} must exclude DC")));
        }
        Ok((c, hw))
    }
}

/// Gaussian-filtered `+fx` sideband shifted to baseband. Its argument is the
/// wrapped phase without carrier and its magnitude is about `i1 / 2`.
pub fn ft_sideband(img: &RealField, cfg: &FtConfig) -> Result<ComplexField, BaselineError> {
    let (c, hw) = cfg.resolve(img)?;
    let (w, h) = img.dims();
    let mean = img.mean();
    let mut buf: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
    let plan = Fft2::new(w, h);
    plan.forward(&mut buf);
    let sigma = hw / 2.0;
    let k = 1.0 / (2.0 * sigma * sigma);
    for ky in 0..h {
        let fy = bin_freq(ky, h);
        for kx in 0..w {
            let fx = bin_freq(kx, w) - c;
            buf[ky * w + kx] *= (-k * (fx * fx + fy * fy)).exp();
        }
    }
    plan.inverse(&mut buf);
    let shift: Vec<Complex64> = (0..w).map(|x| Complex64::from_polar(1.0, -2.0 * PI * c * x as f64)).collect();
    for row in buf.chunks_exact_mut(w) {
        for (v, s) in row.iter_mut().zip(&shift) {
            *v *= s;
        }
    }
    Ok(ComplexField::new(w, h, buf).expect("finite spectrum"))
}

/// Wrapped phase with the carrier removed.
pub fn ft_demodulate(img: &RealField, cfg: &FtConfig) -> Result<RealField, BaselineError> {
    Ok(ft_sideband(img, cfg)?.arg())
}
