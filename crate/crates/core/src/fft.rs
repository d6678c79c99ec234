//! Thin 2D helpers over `rustfft`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse plans for a fixed `width x height` grid.
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform in place, scaled by `1 / (width * height)`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let s = 1.0 / (self.width * self.height) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.width * self.height);
        rows.process(data);
        let mut col = vec![Complex64::default(); self.height];
        for x in 0..self.width {
            for (y, c) in col.iter_mut().enumerate() {
                *c = data[y * self.width + x];
            }
            cols.process(&mut col);
            for (y, c) in col.iter().enumerate() {
                data[y * self.width + x] = *c;
            }
        }
    }
}

/// Signed frequency of DFT bin `k` for an `n`-point transform, in cycles/sample.
#[inline]
pub fn bin_freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64 / n as f64
    } else {
        k as f64 / n as f64 - 1.0
    }
}
