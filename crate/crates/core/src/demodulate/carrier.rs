use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::DemodError;
use crate::fft::bin_freq;
use crate::phase::{wrap, TWO_PI};
use crate::raster::{ComplexField, RealField};

pub const MIN_CARRIER_SIZE: usize = 64;

/// Mean power spectrum over rows of a Hann-windowed row transform.
fn marginal_spectrum(width: usize, height: usize, row: impl Fn(usize) -> Vec<Complex64>) -> Vec<f64> {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(width);
    // periodic Hann: a bin-centred tone leaks symmetrically into its two neighbours
    let hann: Vec<f64> = (0..width).map(|n| 0.5 - 0.5 * (TWO_PI * n as f64 / width as f64).cos()).collect();
    let mut acc = vec![0.0; width];
    for y in 0..height {
        let mut r = row(y);
        for (c, &g) in r.iter_mut().zip(&hann) {
            *c *= g;
        }
        fft.process(&mut r);
        for (a, c) in acc.iter_mut().zip(&r) {
            *a += c.norm_sqr();
        }
    }
    acc.iter_mut().for_each(|a| *a /= height as f64);
    acc
}

/// Peak bin (excluding bins with `|f| < min_freq`) refined by a parabola
/// through the log powers of its two neighbours.
fn refined_peak(spec: &[f64], min_freq: f64, positive_only: bool) -> Result<f64, DemodError> {
    let n = spec.len();
    let mut best: Option<(usize, f64)> = None;
    for (k, &p) in spec.iter().enumerate() {
        let f = bin_freq(k, n);
        if f.abs() < min_freq || (positive_only && f <= 0.0) {
            continue;
        }
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((k, p));
        }
    }
    let (k, peak) = best.ok_or(DemodError::NoPeak)?;
    let total: f64 = spec.iter().sum();
    if !(peak > 0.0) || !(peak > 1e-12 * total) {
        return Err(DemodError::NoPeak);
    }
    let prev = spec[(k + n - 1) % n];
    let next = spec[(k + 1) % n];
    let delta = if prev > 0.0 && next > 0.0 {
        let (a, b, c) = (prev.ln(), peak.ln(), next.ln());
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            (0.5 * (a - c) / den).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(bin_freq(k, n) + delta / n as f64)
}

/// Carrier frequency along `x` in cycles/pixel, from the magnitude peak of the
/// row-averaged spectrum (DC bin excluded).
pub fn estimate_carrier(field: &ComplexField) -> Result<f64, DemodError> {
    let (w, h) = field.dims();
    if w < MIN_CARRIER_SIZE || h < MIN_CARRIER_SIZE {
        return Err(DemodError::FieldTooSmall { width: w, height: h, window: MIN_CARRIER_SIZE });
    }
    let spec = marginal_spectrum(w, h, |y| field.row(y).to_vec());
    // the Hann window spreads DC into bins +-1
    refined_peak(&spec, 1.5 / w as f64, false)
}

/// Positive carrier of a real fringe image, ignoring `|f| < min_freq`.
pub(crate) fn estimate_carrier_real(field: &RealField, min_freq: f64) -> Result<f64, DemodError> {
    let (w, h) = field.dims();
    let mean = field.mean();
    let spec = marginal_spectrum(w, h, |y| field.row(y).iter().map(|&v| Complex64::new(v - mean, 0.0)).collect());
    let f = refined_peak(&spec, min_freq.max(1.5 / w as f64), true)?;
    // a usable carrier stands clearly above the broadband floor
    let mut sorted: Vec<f64> = spec.iter().skip(1).take(w / 2).copied().collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let k = (f * w as f64).round() as usize % w;
    let peak = spec[k].max(spec[(k + 1) % w]).max(spec[(k + w - 1) % w]);
    if !(peak > 4.0 * median) {
        return Err(DemodError::NoPeak);
    }
    Ok(f)
}

/// `wrap(phase - 2 pi fx x)`.
pub fn remove_carrier(wrapped: &RealField, fx: f64) -> RealField {
    let w = wrapped.width();
    let data = wrapped
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| wrap(v - 2.0 * PI * fx * (i % w) as f64))
        .collect();
    RealField::from_vec_unchecked(w, wrapped.height(), data)
}
