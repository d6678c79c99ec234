//! Additive Gaussian noise and fully developed speckle.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::SimError;
use crate::fft::{bin_freq, Fft2};
use crate::raster::RealField;

/// Noise standard deviation giving `snr_db` against signal power `p_ac`.
pub fn awgn_sigma(p_ac: f64, snr_db: f64) -> f64 {
    (p_ac / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Adds zero-mean Gaussian noise of standard deviation `sigma`.
pub fn add_gaussian(field: &RealField, sigma: f64, rng: &mut impl Rng) -> RealField {
    if sigma == 0.0 {
        return field.clone();
    }
    let data = field.data().iter().map(|&v| v + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    RealField::from_vec_unchecked(field.width(), field.height(), data)
}

/// Adds white Gaussian noise at `snr_db`, with the signal power taken as the
/// variance of `field` (its AC power). `+inf` leaves the field unchanged.
pub fn add_awgn(field: &RealField, snr_db: f64, rng: &mut impl Rng) -> Result<RealField, SimError> {
    if snr_db == f64::INFINITY {
        return Ok(field.clone());
    }
    if snr_db.is_nan() {
        return Err(SimError::BadParam("snr_db is NaN".into()));
    }
    let (lo, hi) = field.min_max();
    let p_ac = field.variance();
    if !(hi > lo && p_ac > 0.0) {
        return Err(SimError::ConstantField);
    }
    Ok(add_gaussian(field, awgn_sigma(p_ac, snr_db), rng))
}

/// Speckle intensity with mean 1 and grain size about `speckle_px` pixels.
///
/// A circular complex Gaussian field is low-passed by a disk pupil of radius
/// `1 / (2 speckle_px)` cycles/pixel and squared in magnitude.
pub fn gen_speckle(width: usize, height: usize, speckle_px: f64, rng: &mut impl Rng) -> Result<RealField, SimError> {
    if !(speckle_px >= 2.0 && speckle_px <= width.min(height) as f64 / 4.0) {
        return Err(SimError::BadSpeckleSize(speckle_px));
    }
    let mut buf: Vec<Complex64> = (0..width * height)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let plan = Fft2::new(width, height);
    plan.forward(&mut buf);
    let cut = (0.5 / speckle_px).powi(2);
    for ky in 0..height {
        let fy = bin_freq(ky, height);
        for kx in 0..width {
            let fx = bin_freq(kx, width);
            if fx * fx + fy * fy > cut {
                buf[ky * width + kx] = Complex64::default();
            }
        }
    }
    plan.inverse(&mut buf);
    let mut intensity: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let mean = intensity.iter().sum::<f64>() / intensity.len() as f64;
    intensity.iter_mut().for_each(|v| *v /= mean);
    Ok(RealField::from_vec_unchecked(width, height, intensity))
}

/// `i0 + (clean - i0) * s`: speckle multiplies the modulated term only.
pub fn apply_speckle(clean: &RealField, background: &RealField, speckle: &RealField) -> Result<RealField, SimError> {
    if clean.dims() != speckle.dims() || clean.dims() != background.dims() {
        return Err(SimError::DimensionMismatch);
    }
    let data = clean
        .data()
        .iter()
        .zip(background.data())
        .zip(speckle.data())
        .map(|((&c, &b), &s)| b + (c - b) * s)
        .collect();
    Ok(RealField::from_vec_unchecked(clean.width(), clean.height(), data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use std::f64::consts::PI;

    fn fringe(n: usize) -> RealField {
        RealField::from_fn(n, n, |x, y| 0.5 + 0.4 * (2.0 * PI * 0.05 * x as f64 + 0.01 * (y * y) as f64).cos())
    }

    #[test]
    fn zero_db_noise_power_matches_signal() {
        let clean = fringe(256);
        let noisy = add_awgn(&clean, 0.0, &mut stream_rng(3, 0)).unwrap();
        let noise: Vec<f64> = noisy.data().iter().zip(clean.data()).map(|(a, b)| a - b).collect();
        let m = noise.iter().sum::<f64>() / noise.len() as f64;
        let var = noise.iter().map(|v| (v - m).powi(2)).sum::<f64>() / noise.len() as f64;
        let ratio = var / clean.variance();
        assert!((0.95..=1.05).contains(&ratio), "{ratio}");
    }

    #[test]
    fn empirical_snr_within_half_db() {
        let clean = fringe(128);
        for (i, &snr) in [0.0, 10.0, 25.0, 40.0].iter().enumerate() {
            let noisy = add_awgn(&clean, snr, &mut stream_rng(11, i as u64)).unwrap();
            let pn = noisy.data().iter().zip(clean.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                / clean.data().len() as f64;
            let got = 10.0 * (clean.variance() / pn).log10();
            assert!((got - snr).abs() < 0.5, "{snr} -> {got}");
        }
    }

    #[test]
    fn awgn_edge_cases() {
        let clean = fringe(32);
        assert_eq!(add_awgn(&clean, f64::INFINITY, &mut stream_rng(0, 0)).unwrap(), clean);
        let a = add_awgn(&clean, 5.0, &mut stream_rng(9, 0)).unwrap();
        let b = add_awgn(&clean, 5.0, &mut stream_rng(9, 0)).unwrap();
        assert_eq!(a, b);
        let flat = RealField::filled(8, 8, 0.3);
        assert!(matches!(add_awgn(&flat, 10.0, &mut stream_rng(0, 0)), Err(SimError::ConstantField)));
    }

    #[test]
    fn speckle_mean_and_exponential_statistics() {
        let s = gen_speckle(512, 512, 4.0, &mut stream_rng(21, 0)).unwrap();
        assert!((s.mean() - 1.0).abs() < 0.02);
        // Kolmogorov-Smirnov distance to the unit exponential
        let mut v = s.data().to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len() as f64;
        let ks = v
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = 1.0 - (-x).exp();
                (cdf - i as f64 / n).abs().max((cdf - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.05, "KS = {ks}");
    }

    /// Full width at half maximum of the mean-removed intensity
    /// autocorrelation along x, by direct summation.
    fn autocorr_fwhm(s: &RealField) -> f64 {
        let (w, h) = s.dims();
        let m = s.mean();
        let c = |lag: usize| -> f64 {
            let mut acc = 0.0;
            for y in 0..h {
                let r = s.row(y);
                for x in 0..w {
                    acc += (r[x] - m) * (r[(x + lag) % w] - m);
                }
            }
            acc
        };
        let c0 = c(0);
        let mut prev = 1.0;
        for lag in 1..w / 2 {
            let cur = c(lag) / c0;
            if cur < 0.5 {
                let frac = (prev - 0.5) / (prev - cur);
                return 2.0 * ((lag - 1) as f64 + frac);
            }
            prev = cur;
        }
        f64::INFINITY
    }

    #[test]
    fn speckle_grain_size() {
        for (i, &px) in [4.0, 6.0, 8.0].iter().enumerate() {
            let s = gen_speckle(256, 256, px, &mut stream_rng(4, i as u64)).unwrap();
            let fwhm = autocorr_fwhm(&s);
            assert!((fwhm / px - 1.0).abs() < 0.3, "{px}: {fwhm}");
        }
    }

    #[test]
    fn speckle_size_bounds() {
        assert!(matches!(gen_speckle(64, 64, 1.5, &mut stream_rng(0, 0)), Err(SimError::BadSpeckleSize(_))));
        assert!(matches!(gen_speckle(64, 64, 17.0, &mut stream_rng(0, 0)), Err(SimError::BadSpeckleSize(_))));
    }

    #[test]
    fn speckle_application() {
        let clean = fringe(24);
        let bg = RealField::filled(24, 24, 0.5);
        assert_eq!(apply_speckle(&clean, &bg, &RealField::filled(24, 24, 1.0)).unwrap(), clean);
        assert_eq!(apply_speckle(&clean, &bg, &RealField::filled(24, 24, 0.0)).unwrap(), bg);
        let s = gen_speckle(24, 24, 3.0, &mut stream_rng(1, 0)).unwrap();
        let out = apply_speckle(&clean, &bg, &s).unwrap();
        let mut rng = stream_rng(2, 0);
        for _ in 0..10 {
            let (x, y) = (rng.random_range(0..24), rng.random_range(0..24));
            let i1 = 0.4;
            let want = 0.5 + i1 * s.get(x, y) * (2.0 * PI * 0.05 * x as f64 + 0.01 * (y * y) as f64).cos();
            assert!((out.get(x, y) - want).abs() < 1e-12);
        }
        assert!(matches!(apply_speckle(&clean, &bg, &RealField::filled(3, 3, 1.0)), Err(SimError::DimensionMismatch)));
    }
}
