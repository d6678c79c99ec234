//! Windowed-Fourier ridges.
//!
//! For every pixel the response
//! `S(x; xi) = sum_u f(u) g(u - x) exp(-j xi . (u - x))`
//! with a Gaussian window `g` (cut at 3 sigma, zero outside the image) is
//! maximized over a frequency grid; the phase is `arg S` at the ridge.
//!
//! The exhaustive search runs on a node grid with stride `s`: the response
//! for one `xi` is band-limited to a few bins around `xi`, so its samples on
//! the nodes come from a small inverse FFT of those bins. Each pixel then
//! evaluates `S` exactly, by direct summation, for the ridge frequencies of
//! the four nodes around it and keeps the strongest.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::fft::Fft2;
use crate::raster::{ComplexField, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WftConfig {
    /// Window standard deviation, pixels.
    pub sigma: f64,
    /// Search range along `x`, rad/pixel.
    pub wx_range: (f64, f64),
    /// Search range along `y`, rad/pixel.
    pub wy_range: (f64, f64),
    /// Grid step, rad/pixel.
    pub step: f64,
}

impl Default for WftConfig {
    fn default() -> Self {
        Self { sigma: 10.0, wx_range: (-2.0, 2.0), wy_range: (-2.0, 2.0), step: 0.025 }
    }
}

impl WftConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let ok_range = |r: (f64, f64)| r.0 <= r.1 && r.0 >= -PI && r.1 <= PI;
        if !(self.sigma > 0.0 && self.step > 0.0 && self.step <= 1.0 / self.sigma) {
            return Err(BaselineError::BadConfig(format!(
                "need sigma > 0 and 0 < step <= 1/sigma (sigma {}, step {})",
                self.sigma, self.step
            )));
        }
        if !ok_range(self.wx_range) || !ok_range(self.wy_range) {
            return Err(BaselineError::BadConfig("frequency ranges must lie in [-pi, pi]".into()));
        }
        Ok(())
    }

    fn grid(range: (f64, f64), step: f64) -> Vec<f64> {
        let n = ((range.1 - range.0) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| range.0 + i as f64 * step).collect()
    }
}

pub struct WftResult {
    /// Wrapped phase at the ridge (carrier included).
    pub phase: RealField,
    /// Ridge frequency, rad/pixel.
    pub wx: RealField,
    pub wy: RealField,
}

/// One axis of the node-grid search.
struct Axis {
    pad: usize,
    /// Padded transform length.
    p: usize,
    stride: usize,
    /// Nodes per axis, `p / stride`.
    l: usize,
    /// Bins kept on each side of the centre bin.
    d: usize,
    /// Per grid frequency: centre bin and window gains for offsets `-d..=d`.
    bands: Vec<(isize, Vec<f64>)>,
    /// Node index range falling inside the image.
    valid: (usize, usize),
}

impl Axis {
    fn new(n: usize, radius: usize, sigma: f64, taps: &[f64], grid: &[f64]) -> Self {
        let need = n + 2 * radius;
        let mut chosen = None;
        for stride in [4usize, 2, 1] {
            let p = need.div_ceil(4 * stride) * 4 * stride;
            let delta = 2.0 * PI / p as f64;
            let d = (4.0 / (sigma * delta)).ceil() as usize;
            if 2 * d < p / stride {
                chosen = Some((stride, p, d));
                break;
            }
        }
        let (stride, p, d) = chosen.unwrap_or_else(|| {
            let p = need;
            (1, p, (p - 1) / 2)
        });
        let delta = 2.0 * PI / p as f64;
        let bands = grid
            .iter()
            .map(|&xi| {
                let k0 = (xi / delta).round() as isize;
                let gains = (-(d as isize)..=d as isize)
                    .map(|off| window_dtft(taps, (k0 + off) as f64 * delta - xi))
                    .collect();
                (k0, gains)
            })
            .collect();
        let first = radius.div_ceil(stride);
        let last = (radius + n - 1) / stride;
        Self { pad: radius, p, stride, l: p / stride, d, bands, valid: (first, last) }
    }

    /// Nodes bracketing image coordinate `x`, clamped to the valid range.
    fn bracket(&self, x: usize) -> (usize, usize) {
        let pos = x + self.pad;
        let lo = (pos / self.stride).clamp(self.valid.0, self.valid.1);
        let hi = pos.div_ceil(self.stride).clamp(self.valid.0, self.valid.1);
        (lo - self.valid.0, hi - self.valid.0)
    }

    fn node_count(&self) -> usize {
        self.valid.1 - self.valid.0 + 1
    }
}

/// `sum_r g(r) cos(nu r)` for the symmetric taps `g(-R..=R)`.
fn window_dtft(taps: &[f64], nu: f64) -> f64 {
    let r0 = (taps.len() / 2) as isize;
    taps.iter().enumerate().map(|(i, g)| g * (nu * (i as isize - r0) as f64).cos()).sum()
}

struct NodeScratch {
    small: Vec<Complex64>,
    col: Vec<Complex64>,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
}

/// Windowed-Fourier ridge demodulation of `field`.
pub fn wft_demodulate(field: &ComplexField, cfg: &WftConfig) -> Result<WftResult, BaselineError> {
    cfg.validate()?;
    let (w, h) = field.dims();
    let min = (4.0 * cfg.sigma).ceil() as usize;
    if w < min || h < min {
        return Err(BaselineError::FieldTooSmall { width: w, height: h, min });
    }
    let radius = (3.0 * cfg.sigma).ceil() as usize;
    let taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let r = i as f64 - radius as f64;
            (-r * r / (2.0 * cfg.sigma * cfg.sigma)).exp()
        })
        .collect();
    let gx = WftConfig::grid(cfg.wx_range, cfg.step);
    let gy = WftConfig::grid(cfg.wy_range, cfg.step);
    let ax = Axis::new(w, radius, cfg.sigma, &taps, &gx);
    let ay = Axis::new(h, radius, cfg.sigma, &taps, &gy);

    // spectrum of the zero-padded field
    let mut spec = vec![Complex64::default(); ax.p * ay.p];
    for y in 0..h {
        let dst = (y + radius) * ax.p + radius;
        spec[dst..dst + w].copy_from_slice(field.row(y));
    }
    Fft2::new(ax.p, ay.p).forward(&mut spec);

    let (nxn, nyn) = (ax.node_count(), ay.node_count());
    let nfreq = gx.len() * gy.len();
    let mut planner = FftPlanner::<f64>::new();
    let (fx_plan, fy_plan) = (planner.plan_fft_inverse(ax.l), planner.plan_fft_inverse(ay.l));
    let empty = || vec![(f64::NEG_INFINITY, usize::MAX); nxn * nyn];
    let better = |a: (f64, usize), b: (f64, usize)| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a };
    let best = (0..nfreq)
        .into_par_iter()
        .fold(
            || {
                let s = NodeScratch {
                    small: vec![Complex64::default(); ax.l * ay.l],
                    col: vec![Complex64::default(); ay.l],
                    fx: fx_plan.clone(),
                    fy: fy_plan.clone(),
                };
                (empty(), s)
            },
            |(mut acc, mut s), fi| {
                node_response(&spec, &ax, &ay, fi % gx.len(), fi / gx.len(), &mut s);
                for my in 0..nyn {
                    let row = &s.small[(my + ay.valid.0) * ax.l..];
                    for mx in 0..nxn {
                        let m = row[mx + ax.valid.0].norm();
                        let slot = &mut acc[my * nxn + mx];
                        *slot = better(*slot, (m, fi));
                    }
                }
                (acc, s)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(empty, |a, b| a.into_iter().zip(b).map(|(p, q)| better(p, q)).collect());

    // exact response at every pixel for the neighbouring ridges
    let kern = |grid: &[f64]| -> Vec<Vec<Complex64>> {
        grid.iter()
            .map(|&xi| {
                taps.iter()
                    .enumerate()
                    .map(|(i, &g)| Complex64::from_polar(g, -xi * (i as f64 - radius as f64)))
                    .collect()
            })
            .collect()
    };
    let (kx, ky) = (kern(&gx), kern(&gy));
    let rows: Vec<Vec<(f64, f64, f64)>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let (my0, my1) = ay.bracket(y);
            let mut out = Vec::with_capacity(w);
            let mut cands: Vec<usize> = Vec::with_capacity(4);
            for x in 0..w {
                let (mx0, mx1) = ax.bracket(x);
                cands.clear();
                for (mx, my) in [(mx0, my0), (mx1, my0), (mx0, my1), (mx1, my1)] {
                    let fi = best[my * nxn + mx].1;
                    if !cands.contains(&fi) {
                        cands.push(fi);
                    }
                }
                cands.sort_unstable();
                let mut pick = (f64::NEG_INFINITY, 0usize, Complex64::default());
                for &fi in &cands {
                    let s = direct_response(field, x, y, radius, &kx[fi % gx.len()], &ky[fi / gx.len()]);
                    if s.norm() > pick.0 {
                        pick = (s.norm(), fi, s);
                    }
                }
                out.push((pick.2.arg(), gx[pick.1 % gx.len()], gy[pick.1 / gx.len()]));
            }
            out
        })
        .collect();
    let flat: Vec<(f64, f64, f64)> = rows.into_iter().flatten().collect();
    let take = |f: fn(&(f64, f64, f64)) -> f64| RealField::new(w, h, flat.iter().map(f).collect()).expect("finite");
    Ok(WftResult { phase: take(|t| t.0), wx: take(|t| t.1), wy: take(|t| t.2) })
}

/// Node-grid response for grid frequency `(ix, iy)` into `s.small`
/// (row-major `ay.l x ax.l`, up to a unit-modulus factor per node).
fn node_response(spec: &[Complex64], ax: &Axis, ay: &Axis, ix: usize, iy: usize, s: &mut NodeScratch) {
    s.small.iter_mut().for_each(|v| *v = Complex64::default());
    let (k0x, gainx) = &ax.bands[ix];
    let (k0y, gainy) = &ay.bands[iy];
    let (dx, dy) = (ax.d as isize, ay.d as isize);
    for oy in -dy..=dy {
        let by = (k0y + oy).rem_euclid(ay.p as isize) as usize;
        let sy = oy.rem_euclid(ay.l as isize) as usize;
        let gy = gainy[(oy + dy) as usize];
        for ox in -dx..=dx {
            let bx = (k0x + ox).rem_euclid(ax.p as isize) as usize;
            let sx = ox.rem_euclid(ax.l as isize) as usize;
            s.small[sy * ax.l + sx] = spec[by * ax.p + bx] * (gy * gainx[(ox + dx) as usize]);
        }
    }
    for row in s.small.chunks_exact_mut(ax.l) {
        s.fx.process(row);
    }
    for x in 0..ax.l {
        for y in 0..ay.l {
            s.col[y] = s.small[y * ax.l + x];
        }
        s.fy.process(&mut s.col);
        for y in 0..ay.l {
            s.small[y * ax.l + x] = s.col[y];
        }
    }
}

/// `S(x, y; xi)` by direct summation with precomputed kernels
/// `kx[r] = g(r) exp(-j xi_x r)`.
fn direct_response(f: &ComplexField, x: usize, y: usize, radius: usize, kx: &[Complex64], ky: &[Complex64]) -> Complex64 {
    let (w, h) = f.dims();
    let x0 = x.saturating_sub(radius);
    let x1 = (x + radius).min(w - 1);
    let y0 = y.saturating_sub(radius);
    let y1 = (y + radius).min(h - 1);
    let kx = &kx[x0 + radius - x..=x1 + radius - x];
    let mut acc = Complex64::default();
    for v in y0..=y1 {
        let row = &f.row(v)[x0..=x1];
        let inner: Complex64 = row.iter().zip(kx).map(|(a, b)| a * b).sum();
        acc += inner * ky[v + radius - y];
    }
    acc
}
