//! Diffusion coefficient from the phase difference of two frames.
//!
//! The difference between frames at `t1 < t2` is modelled per row as
//! `A (g(x - x0, t1) - g(x - x0, t2))` with
//! `g(x, t) = exp(-x^2 / (4 D t)) / (2 sqrt(D t))`, fitted by
//! Levenberg-Marquardt over `(ln D, A, x0)`.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::RealField;

pub const MIN_FIT_SAMPLES: usize = 30;
pub const MAX_ITERATIONS: usize = 200;
pub const COST_TOLERANCE: f64 = 1e-12;
/// Default far-field band: this fraction of columns from the left edge.
pub const FAR_FIELD_FRACTION: f64 = 0.1;
pub const DEFAULT_ROWS: [usize; 5] = [150, 350, 502, 650, 800];
const INITIAL_D: f64 = 1e-9;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("bad arguments: {0}")]
    BadArguments(String),
    #[error("fit window holds {0} samples, need at least {MIN_FIT_SAMPLES}")]
    WindowTooShort(usize),
    #[error("fit window data is flat")]
    DegenerateWindow,
    #[error("least squares did not converge")]
    NoConvergence,
    #[error("need at least {0}")]
    TooFew(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionFit {
    pub row: usize,
    /// m^2/s.
    pub d: f64,
    pub amplitude: f64,
    /// Metres from column 0.
    pub x0: f64,
    pub r2: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionAggregate {
    pub mean_d: f64,
    pub sd_d: f64,
    pub fits: Vec<DiffusionFit>,
}

/// `phi_t1 - phi_t2` minus its median over the columns in `band`.
pub fn phase_difference(phi_t1: &RealField, phi_t2: &RealField, band: Range<usize>) -> Result<RealField, DiffusionError> {
    if phi_t1.dims() != phi_t2.dims() {
        return Err(DiffusionError::DimensionMismatch);
    }
    let (w, h) = phi_t1.dims();
    if band.is_empty() || band.end > w {
        return Err(DiffusionError::BadArguments(format!("band {band:?} outside 0..{w}")));
    }
    let diff: Vec<f64> = phi_t1.data().iter().zip(phi_t2.data()).map(|(a, b)| a - b).collect();
    let mut sample: Vec<f64> = (0..h).flat_map(|y| diff[y * w + band.start..y * w + band.end].iter().copied()).collect();
    sample.sort_by(|a, b| a.total_cmp(b));
    let n = sample.len();
    let median = if n % 2 == 1 { sample[n / 2] } else { 0.5 * (sample[n / 2 - 1] + sample[n / 2]) };
    Ok(RealField::new(w, h, diff.into_iter().map(|v| v - median).collect()).expect("finite inputs"))
}

/// Leftmost [`FAR_FIELD_FRACTION`] of `width` columns (at least one).
pub fn default_band(width: usize) -> Range<usize> {
    0..((width as f64 * FAR_FIELD_FRACTION) as usize).max(1)
}

fn profile(x: f64, d: f64, t: f64) -> f64 {
    (-x * x / (4.0 * d * t)).exp() / (2.0 * (d * t).sqrt())
}

/// Model phase difference at `x` metres.
pub fn model_dphi(x: f64, d: f64, a: f64, x0: f64, t1: f64, t2: f64) -> Result<f64, DiffusionError> {
    if !(d > 0.0 && t1 > 0.0 && t2 > t1) {
        return Err(DiffusionError::BadArguments(format!("need D > 0 and 0 < t1 < t2 (D {d}, t1 {t1}, t2 {t2})")));
    }
    Ok(a * (profile(x - x0, d, t1) - profile(x - x0, d, t2)))
}

/// Solves the 3x3 system `m z = b` by Gaussian elimination with pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if !(m[p][c].abs() > 0.0) {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let f = m[r][c] / m[c][c];
            for k in c..3 {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut z = [0.0; 3];
    for r in (0..3).rev() {
        z[r] = (b[r] - (r + 1..3).map(|k| m[r][k] * z[k]).sum::<f64>()) / m[r][r];
    }
    Some(z)
}

struct Problem<'a> {
    xs: Vec<f64>,
    ys: &'a [f64],
    px: f64,
    t1: f64,
    t2: f64,
}

impl Problem<'_> {
    /// Parameters `(ln D, A, x0 / px)`.
    fn residuals(&self, p: &[f64; 3], out: &mut [f64]) {
        let (d, a, x0) = (p[0].exp(), p[1], p[2] * self.px);
        for ((r, &x), &y) in out.iter_mut().zip(&self.xs).zip(self.ys) {
            *r = y - a * (profile(x - x0, d, self.t1) - profile(x - x0, d, self.t2));
        }
    }

    fn cost(&self, p: &[f64; 3], buf: &mut [f64]) -> f64 {
        self.residuals(p, buf);
        buf.iter().map(|r| r * r).sum()
    }

    /// Forward-difference Jacobian of the residuals, column-major.
    fn jacobian(&self, p: &[f64; 3], r0: &[f64], jac: &mut [Vec<f64>; 3], buf: &mut [f64]) {
        for (k, col) in jac.iter_mut().enumerate() {
            let mut q = *p;
            let h = FD_STEP * p[k].abs().max(1.0);
            q[k] += h;
            self.residuals(&q, buf);
            for ((c, a), b) in col.iter_mut().zip(buf.iter()).zip(r0) {
                *c = (a - b) / h;
            }
        }
    }
}

/// Least-squares fit of one row over the columns in `window`.
pub fn fit_row(dphi_row: &[f64], px: f64, t1: f64, t2: f64, window: Range<usize>) -> Result<DiffusionFit, DiffusionError> {
    if !(px > 0.0 && t1 > 0.0 && t2 > t1) {
        return Err(DiffusionError::BadArguments(format!("need px > 0 and 0 < t1 < t2 (px {px}, t1 {t1}, t2 {t2})")));
    }
    if window.end > dphi_row.len() {
        return Err(DiffusionError::BadArguments(format!("window {window:?} outside 0..{}", dphi_row.len())));
    }
    if window.len() < MIN_FIT_SAMPLES {
        return Err(DiffusionError::WindowTooShort(window.len()));
    }
    let ys = &dphi_row[window.clone()];
    let n = ys.len();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot < 1e-12 {
        return Err(DiffusionError::DegenerateWindow);
    }
    let prob = Problem { xs: window.clone().map(|c| c as f64 * px).collect(), ys, px, t1, t2 };

    let (k_ext, y_ext) = ys.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).expect("non-empty");
    let peak = profile(0.0, INITIAL_D, t1) - profile(0.0, INITIAL_D, t2);
    let mut p = [INITIAL_D.ln(), y_ext / peak, (window.start + k_ext) as f64];

    let mut r = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let mut jac = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut cost = prob.cost(&p, &mut r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        prob.residuals(&p, &mut r);
        prob.jacobian(&p, &r, &mut jac, &mut buf);
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for i in 0..3 {
            for k in 0..3 {
                jtj[i][k] = jac[i].iter().zip(&jac[k]).map(|(a, b)| a * b).sum();
            }
            jtr[i] = jac[i].iter().zip(&r).map(|(a, b)| a * b).sum();
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut m = jtj;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(step) = solve3(m, [-jtr[0], -jtr[1], -jtr[2]]) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let c = prob.cost(&trial, &mut buf);
            if c.is_finite() && c <= cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                p = trial;
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel < COST_TOLERANCE {
                    lambda = f64::INFINITY;
                }
                break;
            }
            lambda *= 10.0;
        }
        // no downhill step at any damping: at the minimum to working precision
        if !accepted || lambda.is_infinite() {
            break;
        }
    }
    let d = p[0].exp();
    if !(d.is_finite() && p[1].is_finite() && p[2].is_finite() && cost.is_finite()) {
        return Err(DiffusionError::NoConvergence);
    }
    Ok(DiffusionFit { row: 0, d, amplitude: p[1], x0: p[2] * px, r2: 1.0 - cost / ss_tot, iterations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSetup {
    /// Metres per pixel.
    pub px: f64,
    pub t1: f64,
    pub t2: f64,
    pub rows: Vec<usize>,
    pub window: Range<usize>,
    /// Far-field columns for piston removal.
    pub band: Range<usize>,
}

/// Fits every requested row of `phi_t1 - phi_t2` and aggregates `D`.
pub fn fit_diffusion(phi_t1: &RealField, phi_t2: &RealField, setup: &FitSetup) -> Result<DiffusionAggregate, DiffusionError> {
    if setup.rows.len() < 2 {
        return Err(DiffusionError::TooFew("two rows"));
    }
    let (w, h) = phi_t1.dims();
    if let Some(&r) = setup.rows.iter().find(|&&r| r >= h) {
        return Err(DiffusionError::BadArguments(format!("row {r} outside 0..{h}")));
    }
    if setup.window.end > w {
        return Err(DiffusionError::BadArguments(format!("window {:?} outside 0..{w}", setup.window)));
    }
    let dphi = phase_difference(phi_t1, phi_t2, setup.band.clone())?;
    let fits: Vec<DiffusionFit> = setup
        .rows
        .par_iter()
        .map(|&row| {
            let f = fit_row(dphi.row(row), setup.px, setup.t1, setup.t2, setup.window.clone())?;
            Ok(DiffusionFit { row, ..f })
        })
        .collect::<Result<_, DiffusionError>>()?;
    let n = fits.len() as f64;
    let mean_d = fits.iter().map(|f| f.d).sum::<f64>() / n;
    let sd_d = (fits.iter().map(|f| (f.d - mean_d).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Ok(DiffusionAggregate { mean_d, sd_d, fits })
}

/// Frame pair selection from a sequence: indices into `frames` and `times`.
pub fn fit_sequence(
    frames: &[RealField],
    times: &[f64],
    pair: (usize, usize),
    mut setup: FitSetup,
) -> Result<DiffusionAggregate, DiffusionError> {
    if frames.len() < 2 || frames.len() != times.len() {
        return Err(DiffusionError::TooFew("two frames with one time each"));
    }
    let (i, j) = pair;
    if i >= frames.len() || j >= frames.len() || i == j {
        return Err(DiffusionError::BadArguments(format!("frame pair ({i}, {j}) of {}", frames.len())));
    }
    setup.t1 = times[i];
    setup.t2 = times[j];
    fit_diffusion(&frames[i], &frames[j], &setup)
}

pub const FITS_CSV_HEADER: &str = "row,D,A,x0,r2";

pub fn fits_csv(agg: &DiffusionAggregate) -> String {
    let mut s = String::from(FITS_CSV_HEADER);
    s.push('\n');
    for f in &agg.fits {
        let _ = writeln!(s, "{},{:e},{:e},{:e},{:.12}", f.row, f.d, f.amplitude, f.x0, f.r2);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSummary {
    #[serde(rename = "mean_D")]
    pub mean_d: f64,
    #[serde(rename = "sd_D")]
    pub sd_d: f64,
}

impl From<&DiffusionAggregate> for DiffusionSummary {
    fn from(a: &DiffusionAggregate) -> Self {
        Self { mean_d: a.mean_d, sd_d: a.sd_d }
    }
}
