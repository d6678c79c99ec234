//! Linear-phase fit of one `S x S` window through its signal subspace.
//!
//! A noiseless window `exp(j(a0 + a1 x + a2 y))` is the rank-one matrix
//! `e^{j a0} p q^T` with `p[y] = e^{j a2 y}` down the rows and
//! `q[x] = e^{j a1 x}` across the columns. The leading left singular vector
//! spans `p`, the conjugated leading right singular vector spans `q`, and the
//! phase step between consecutive entries of each gives the frequency along
//! that axis (rotational invariance under a one-sample shift).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::svd::{dominant_svd, power, DominantTriple, PowerScratch, SvdMode};
use super::DemodError;
use crate::phase::wrap;
use crate::raster::ComplexField;

/// Local phase plane `a0 + a1 x + a2 y` in window-centred coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    /// Phase at the window centre, in `(-pi, pi]`.
    pub a0: f64,
    /// Radians per pixel along columns (`x`), carrier included.
    pub a1: f64,
    /// Radians per pixel along rows (`y`).
    pub a2: f64,
}

/// `arg(z_1^+ z_2)` where `z_1`, `z_2` drop the last and first entry of `z`.
///
/// For a column vector the pseudo-inverse is `z_1^H / |z_1|^2`; the positive
/// scale does not move the argument.
#[inline]
fn shift_invariance_phase(z: &[Complex64], conjugate: bool) -> f64 {
    let acc: Complex64 = z.windows(2).map(|p| {
        if conjugate {
            // entries of z* : conj(z*_k) z*_{k+1} = z_k conj(z_{k+1})
            p[0] * p[1].conj()
        } else {
            p[0].conj() * p[1]
        }
    }).sum();
    acc.arg()
}

pub(crate) fn coefficients_from_triple(
    win: &[Complex64],
    s: usize,
    t: &DominantTriple,
) -> Result<WindowEstimate, DemodError> {
    let a2 = shift_invariance_phase(&t.u, false);
    let a1 = shift_invariance_phase(&t.v, true);
    let half = (s / 2) as f64;
    // e^{-j a1 x}, e^{-j a2 y} on centred coordinates
    let mut acc = Complex64::default();
    let ex: Vec<Complex64> = (0..s).map(|i| Complex64::from_polar(1.0, -a1 * (i as f64 - half))).collect();
    for (y, row) in win.chunks_exact(s).enumerate() {
        let ey = Complex64::from_polar(1.0, -a2 * (y as f64 - half));
        let r: Complex64 = row.iter().zip(&ex).map(|(a, b)| a * b).sum();
        acc += r * ey;
    }
    if !(acc.re.is_finite() && acc.im.is_finite() && a1.is_finite() && a2.is_finite()) {
        return Err(DemodError::NonFinite);
    }
    Ok(WindowEstimate { a0: wrap(acc.arg()), a1, a2 })
}

/// Estimates `(a0, a1, a2)` for one square window with odd side `S >= 3`.
pub fn estimate_window(
    win: &ComplexField,
    mode: SvdMode,
    power_iters: usize,
) -> Result<WindowEstimate, DemodError> {
    let (w, h) = win.dims();
    if w != h || w < 3 || w % 2 == 0 {
        return Err(DemodError::WindowTooSmall(w.min(h)));
    }
    let t = dominant_svd(win.data(), h, w, mode, power_iters)?;
    coefficients_from_triple(win.data(), w, &t)
}

/// Allocation-free variant used by the sliding demodulator.
pub(crate) struct WindowSolver {
    s: usize,
    mode: SvdMode,
    iters: usize,
    scratch: PowerScratch,
    pub(crate) unconverged: usize,
}

impl WindowSolver {
    pub(crate) fn new(s: usize, mode: SvdMode, iters: usize) -> Self {
        Self { s, mode, iters, scratch: PowerScratch::new(s, s), unconverged: 0 }
    }

    pub(crate) fn solve(&mut self, win: &[Complex64]) -> Result<WindowEstimate, DemodError> {
        let t = match self.mode {
            SvdMode::PowerIteration => {
                if win.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(DemodError::NonFinite);
                }
                let t = power(win, self.s, self.s, self.iters, &mut self.scratch);
                if !(t.sigma > 0.0) {
                    return Err(DemodError::RankDeficient);
                }
                t
            }
            SvdMode::Full => dominant_svd(win, self.s, self.s, SvdMode::Full, 0)?,
        };
        if !t.converged {
            self.unconverged += 1;
        }
        coefficients_from_triple(win, self.s, &t)
    }
}
