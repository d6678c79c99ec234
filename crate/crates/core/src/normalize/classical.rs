use num_complex::Complex64;

use super::{NormError, NormalizedFringe};
use crate::demodulate::{analytic_signal, estimate_carrier_real};
use crate::fft::{bin_freq, Fft2};
use crate::phase::mirror_index;
use crate::raster::RealField;

/// Radius of the spectral disk treated as background, cycles/pixel.
pub const BACKGROUND_RADIUS: f64 = 0.01;

/// Background removal in the spectrum followed by envelope division.
///
/// The envelope is the analytic-signal magnitude of the background-free
/// pattern, smoothed by a Gaussian of `1 / (2 fx)` pixels.
pub fn classical_normalize(img: &RealField) -> Result<NormalizedFringe, NormError> {
    let fx = estimate_carrier_real(img, BACKGROUND_RADIUS).map_err(|_| NormError::NoCarrier)?;
    let (w, h) = img.dims();
    let mut buf: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let plan = Fft2::new(w, h);
    plan.forward(&mut buf);
    for ky in 0..h {
        let fy = bin_freq(ky, h);
        for kx in 0..w {
            let f = bin_freq(kx, w);
            if f * f + fy * fy <= BACKGROUND_RADIUS * BACKGROUND_RADIUS {
                buf[ky * w + kx] = Complex64::default();
            }
        }
    }
    plan.inverse(&mut buf);
    let ac = RealField::new(w, h, buf.iter().map(|c| c.re).collect())?;
    let env = gaussian_blur(&analytic_signal(&ac).norm(), 1.0 / (2.0 * fx));
    let eps = 1e-3 * env.min_max().1;
    let data = ac
        .data()
        .iter()
        .zip(env.data())
        .map(|(&a, &e)| (a / e.max(eps)).clamp(-1.0, 1.0))
        .collect();
    Ok(NormalizedFringe::new(RealField::new(w, h, data)?))
}

/// Separable Gaussian blur, mirrored borders, kernel cut at 3 sigma.
pub(crate) fn gaussian_blur(f: &RealField, sigma: f64) -> RealField {
    let r = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-r..=r).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    let (w, h) = f.dims();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = f.row(y);
        for x in 0..w {
            tmp[y * w + x] = taps.iter().enumerate().map(|(k, t)| t * row[mirror_index(x as isize + k as isize - r, w)]).sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] =
                taps.iter().enumerate().map(|(k, t)| t * tmp[mirror_index(y as isize + k as isize - r, h) * w + x]).sum();
        }
    }
    RealField::from_vec_unchecked(w, h, out)
}
