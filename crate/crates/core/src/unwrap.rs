//! Reliability-sorted two-dimensional phase unwrapping.
//!
//! Each pixel gets a reliability `1 / (H^2 + V^2 + D1^2 + D2^2)` from wrapped
//! second differences along the two axes and two diagonals (mirrored at the
//! border). Edges between 4-neighbours are scored by the summed reliability of
//! their ends and visited best first; each visit joins two groups, shifting
//! the smaller one by a multiple of `2 pi` so the edge carries no jump.

use thiserror::Error;

use crate::phase::{mirror_index, wrap, TWO_PI};
use crate::raster::RealField;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnwrapError {
    #[error("field {0}x{1} is smaller than 2x2")]
    DegenerateSize(usize, usize),
}

/// Per-pixel reliability.
pub fn reliability(phase: &RealField) -> RealField {
    let (w, h) = phase.dims();
    let at = |x: isize, y: isize| phase.get(mirror_index(x, w), mirror_index(y, h));
    RealField::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let c = at(x, y);
        let second = |dx: isize, dy: isize| wrap(at(x - dx, y - dy) - c) - wrap(c - at(x + dx, y + dy));
        let d = second(1, 0).powi(2) + second(0, 1).powi(2) + second(1, 1).powi(2) + second(-1, 1).powi(2);
        // a tiny floor keeps perfectly smooth regions finite and comparable
        1.0 / (d + 1e-12)
    })
}

/// Unwrapped phase; the global piston is arbitrary.
pub fn unwrap2d(wrapped: &RealField) -> Result<RealField, UnwrapError> {
    let (w, h) = wrapped.dims();
    if w < 2 || h < 2 {
        return Err(UnwrapError::DegenerateSize(w, h));
    }
    let rel = reliability(wrapped);
    let r = rel.data();
    let n_h = (w - 1) * h;
    // edge e < n_h joins (x, y)-(x+1, y); otherwise (x, y)-(x, y+1)
    let ends = |e: usize| -> (usize, usize) {
        if e < n_h {
            let (x, y) = (e % (w - 1), e / (w - 1));
            (y * w + x, y * w + x + 1)
        } else {
            let i = e - n_h;
            (i, i + w)
        }
    };
    let n_edges = n_h + w * (h - 1);
    let score: Vec<f64> = (0..n_edges).map(|e| {
        let (a, b) = ends(e);
        r[a] + r[b]
    }).collect();
    let mut order: Vec<usize> = (0..n_edges).collect();
    // stable: equal scores keep the lower edge index first
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]));

    let phi = wrapped.data();
    let n = w * h;
    let mut group: Vec<usize> = (0..n).collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut turns = vec![0i64; n];
    for e in order {
        let (a, b) = ends(e);
        let (ga, gb) = (group[a], group[b]);
        if ga == gb {
            continue;
        }
        let ua = phi[a] + TWO_PI * turns[a] as f64;
        let ub = phi[b] + TWO_PI * turns[b] as f64;
        let target = ua + wrap(phi[b] - phi[a]);
        let k = ((target - ub) / TWO_PI).round() as i64;
        let (keep, moved, shift) = if members[gb].len() <= members[ga].len() { (ga, gb, k) } else { (gb, ga, -k) };
        let moving = std::mem::take(&mut members[moved]);
        for &p in &moving {
            turns[p] += shift;
            group[p] = keep;
        }
        members[keep].extend(moving);
    }
    Ok(RealField::from_vec_unchecked(
        w,
        h,
        phi.iter().zip(&turns).map(|(p, &k)| p + TWO_PI * k as f64).collect(),
    ))
}
