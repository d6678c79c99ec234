use std::collections::VecDeque;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svd::SvdMode;
use super::window::{WindowEstimate, WindowSolver};
use super::DemodError;
use crate::phase::mirror_index;
use crate::raster::{ComplexField, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Reflect without repeating the edge sample.
    #[default]
    Mirror,
}

/// How the carrier frequency is obtained before it is removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CarrierSpec {
    /// Cycles per pixel along `x`.
    Known(f64),
    #[default]
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceConfig {
    /// Half window `W`; the window side is `S = 2W + 1`.
    pub half_window: usize,
    pub svd_mode: SvdMode,
    pub power_iters: usize,
    pub boundary: Boundary,
    pub carrier: CarrierSpec,
}

impl Default for SubspaceConfig {
    fn default() -> Self {
        Self {
            half_window: 5,
            svd_mode: SvdMode::PowerIteration,
            power_iters: 30,
            boundary: Boundary::Mirror,
            carrier: CarrierSpec::Estimate,
        }
    }
}

impl SubspaceConfig {
    pub fn window_size(&self) -> usize {
        2 * self.half_window + 1
    }

    pub fn validate(&self) -> Result<(), DemodError> {
        if self.half_window < 1 {
            return Err(DemodError::WindowTooSmall(self.window_size()));
        }
        if self.power_iters < 5 {
            return Err(DemodError::BadConfig(format!("power_iters {} < 5", self.power_iters)));
        }
        if let CarrierSpec::Known(f) = self.carrier {
            if !(f.is_finite() && f.abs() < 0.5) {
                return Err(DemodError::BadConfig(format!("carrier {f} outside (-0.5, 0.5)")));
            }
        }
        Ok(())
    }
}

/// Per-pixel plane coefficients from the sliding window.
#[derive(Debug, Clone)]
pub struct SubspaceMap {
    /// Wrapped phase at each pixel (`a0` of the window centred there).
    pub a0: RealField,
    pub a1: RealField,
    pub a2: RealField,
    /// Pixels whose window failed and were filled from a neighbour.
    pub flagged: usize,
    /// Windows where power iteration ran out of budget.
    pub unconverged: usize,
}

/// Slides an `S x S` window over every pixel and fits the local phase plane.
///
/// Windows straddling the border are completed by mirroring. Rows are
/// processed in parallel and written independently, so the output does not
/// depend on the number of worker threads.
pub fn demodulate_subspace_map(
    field: &ComplexField,
    cfg: &SubspaceConfig,
) -> Result<SubspaceMap, DemodError> {
    cfg.validate()?;
    let s = cfg.window_size();
    let (w, h) = field.dims();
    if w < s || h < s {
        return Err(DemodError::FieldTooSmall { width: w, height: h, window: s });
    }
    let half = cfg.half_window as isize;
    let xs: Vec<Vec<usize>> = (0..w as isize)
        .map(|x| (-half..=half).map(|d| mirror_index(x + d, w)).collect())
        .collect();
    let rows: Vec<(Vec<Option<WindowEstimate>>, usize)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let ys: Vec<usize> = (-half..=half).map(|d| mirror_index(y as isize + d, h)).collect();
            let mut solver = WindowSolver::new(s, cfg.svd_mode, cfg.power_iters);
            let mut buf = vec![Complex64::default(); s * s];
            let mut out = Vec::with_capacity(w);
            for xi in xs.iter() {
                for (r, &yy) in ys.iter().enumerate() {
                    let src = field.row(yy);
                    for (c, &xx) in xi.iter().enumerate() {
                        buf[r * s + c] = src[xx];
                    }
                }
                out.push(solver.solve(&buf).ok());
            }
            (out, solver.unconverged)
        })
        .collect();

    let unconverged = rows.iter().map(|r| r.1).sum();
    let mut est: Vec<Option<WindowEstimate>> = rows.into_iter().flat_map(|r| r.0).collect();
    let flagged = fill_from_nearest(&mut est, w, h)?;
    let pick = |f: fn(&WindowEstimate) -> f64| {
        RealField::from_vec_unchecked(w, h, est.iter().map(|e| f(e.as_ref().unwrap())).collect())
    };
    Ok(SubspaceMap {
        a0: pick(|e| e.a0),
        a1: pick(|e| e.a1),
        a2: pick(|e| e.a2),
        flagged,
        unconverged,
    })
}

/// Wrapped phase map in `(-pi, pi]` plus the number of filled pixels.
pub fn demodulate_subspace(
    field: &ComplexField,
    cfg: &SubspaceConfig,
) -> Result<(RealField, usize), DemodError> {
    let m = demodulate_subspace_map(field, cfg)?;
    Ok((m.a0, m.flagged))
}

/// Breadth-first fill of `None` pixels from the nearest valid pixel
/// (4-connected, fixed visiting order). Returns the number filled.
fn fill_from_nearest(est: &mut [Option<WindowEstimate>], w: usize, h: usize) -> Result<usize, DemodError> {
    let missing = est.iter().filter(|e| e.is_none()).count();
    if missing == 0 {
        return Ok(0);
    }
    if missing == est.len() {
        return Err(DemodError::RankDeficient);
    }
    let mut queue: VecDeque<usize> = (0..est.len()).filter(|&i| est[i].is_some()).collect();
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let v = est[i];
        let mut visit = |j: usize| {
            if est[j].is_none() {
                est[j] = v;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
    Ok(missing)
}
