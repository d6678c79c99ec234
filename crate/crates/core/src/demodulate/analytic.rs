use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::raster::{ComplexField, RealField};

/// Row-wise analytic signal of a fringe whose carrier runs along `x`.
///
/// Each row is transformed, strictly negative frequencies are zeroed,
/// strictly positive ones doubled, DC and (for even widths) the Nyquist bin
/// kept as they are, then transformed back. The real part of the result
/// reproduces the input up to round-off.
pub fn analytic_signal(field: &RealField) -> ComplexField {
    let (w, h) = field.dims();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(w);
    let inv = planner.plan_fft_inverse(w);
    let gain = analytic_gain(w);
    let scale = 1.0 / w as f64;
    let mut out = Vec::with_capacity(w * h);
    let mut row = vec![Complex64::default(); w];
    for y in 0..h {
        for (c, &v) in row.iter_mut().zip(field.row(y)) {
            *c = Complex64::new(v, 0.0);
        }
        fwd.process(&mut row);
        for (c, &g) in row.iter_mut().zip(&gain) {
            *c *= g * scale;
        }
        inv.process(&mut row);
        out.extend_from_slice(&row);
    }
    ComplexField::from_vec_unchecked(w, h, out)
}

/// Per-bin multiplier for the one-sided spectrum.
pub(crate) fn analytic_gain(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                1.0
            } else if k < n.div_ceil(2) {
                2.0
            } else {
                0.0
            }
        })
        .collect()
}
