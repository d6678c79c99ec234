//! Phase-map quality: piston-free RMSE and single-scale SSIM.

mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::RealField;

pub use sweep::{sweep_csv, sweep_eval, SweepAxis, SweepError, SweepRow, SWEEP_CSV_HEADER};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("evaluation region {0}x{1} is too small")]
    RegionTooSmall(usize, usize),
    #[error("dynamic range is zero")]
    DegenerateRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Border excluded from every metric, pixels.
    pub margin: usize,
    /// Centre both maps and take `L` from the larger of the two ranges, which
    /// makes SSIM symmetric. Off: piston removed from `est`, `L` from `truth`.
    pub symmetric: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        // half window 5 of the subspace demodulator, plus 2
        Self { margin: 7, symmetric: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    pub ssim: f64,
    pub piston_removed: f64,
    pub valid_fraction: f64,
}

/// Interior crops of both maps.
fn interior(est: &RealField, truth: &RealField, margin: usize) -> Result<(RealField, RealField), MetricsError> {
    if est.dims() != truth.dims() {
        return Err(MetricsError::DimensionMismatch(est.dims(), truth.dims()));
    }
    let (w, h) = est.dims();
    if w <= 2 * margin || h <= 2 * margin {
        return Err(MetricsError::RegionTooSmall(w.saturating_sub(2 * margin), h.saturating_sub(2 * margin)));
    }
    let (cw, ch) = (w - 2 * margin, h - 2 * margin);
    let crop = |f: &RealField| f.crop(margin, margin, cw, ch).expect("crop inside bounds");
    Ok((crop(est), crop(truth)))
}

/// `mean(est - truth)` over the interior.
pub fn piston(est: &RealField, truth: &RealField, margin: usize) -> Result<f64, MetricsError> {
    let (e, t) = interior(est, truth, margin)?;
    Ok(e.data().iter().zip(t.data()).map(|(a, b)| a - b).sum::<f64>() / e.data().len() as f64)
}

/// Root-mean-square phase error after removing the mean offset.
pub fn rmse_phase(est: &RealField, truth: &RealField, opts: &EvalOptions) -> Result<f64, MetricsError> {
    let (e, t) = interior(est, truth, opts.margin)?;
    let n = e.data().len() as f64;
    let c = e.data().iter().zip(t.data()).map(|(a, b)| a - b).sum::<f64>() / n;
    Ok((e.data().iter().zip(t.data()).map(|(a, b)| (a - c - b).powi(2)).sum::<f64>() / n).sqrt())
}

/// Normalized 1D Gaussian taps of the SSIM window.
pub fn ssim_taps() -> [f64; SSIM_WINDOW] {
    let mut g = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Separable "valid" Gaussian filtering of `data` (`w x h`).
fn filter_valid(data: &[f64], w: usize, h: usize, g: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = g.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = g.iter().enumerate().map(|(k, a)| a * tmp[(y + k) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM of two equally sized maps with dynamic range `l`.
pub fn ssim_with_range(a: &RealField, b: &RealField, l: f64) -> Result<f64, MetricsError> {
    if a.dims() != b.dims() {
        return Err(MetricsError::DimensionMismatch(a.dims(), b.dims()));
    }
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricsError::RegionTooSmall(w, h));
    }
    if !(l > 0.0) {
        return Err(MetricsError::DegenerateRange);
    }
    let g = ssim_taps();
    let (x, y) = (a.data(), b.data());
    let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * v).collect::<Vec<f64>>();
    let mx = filter_valid(x, w, h, &g);
    let my = filter_valid(y, w, h, &g);
    let mxx = filter_valid(&prod(x, x), w, h, &g);
    let myy = filter_valid(&prod(y, y), w, h, &g);
    let mxy = filter_valid(&prod(x, y), w, h, &g);
    let c1 = (SSIM_K1 * l).powi(2);
    let c2 = (SSIM_K2 * l).powi(2);
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = mxx[i] - ux * ux;
            let vy = myy[i] - uy * uy;
            let cxy = mxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// SSIM of an estimated phase map against the truth (see [`EvalOptions`]).
pub fn ssim_phase(est: &RealField, truth: &RealField, opts: &EvalOptions) -> Result<f64, MetricsError> {
    let (e, t) = interior(est, truth, opts.margin)?;
    if opts.symmetric {
        let center = |f: &RealField| {
            let m = f.mean();
            f.map(|v| v - m).expect("finite")
        };
        let range = |f: &RealField| {
            let (lo, hi) = f.min_max();
            hi - lo
        };
        let l = range(&e).max(range(&t));
        return ssim_with_range(&center(&e), &center(&t), l);
    }
    let n = e.data().len() as f64;
    let c = e.data().iter().zip(t.data()).map(|(a, b)| a - b).sum::<f64>() / n;
    let (lo, hi) = t.min_max();
    ssim_with_range(&e.map(|v| v - c).expect("finite"), &t, hi - lo)
}

pub fn evaluate(est: &RealField, truth: &RealField, opts: &EvalOptions) -> Result<EvalReport, MetricsError> {
    let (w, h) = est.dims();
    let valid = (w.saturating_sub(2 * opts.margin) * h.saturating_sub(2 * opts.margin)) as f64 / (w * h) as f64;
    Ok(EvalReport {
        rmse: rmse_phase(est, truth, opts)?,
        ssim: ssim_phase(est, truth, opts)?,
        piston_removed: piston(est, truth, opts.margin)?,
        valid_fraction: valid,
    })
}
