//! Encoder-decoder forward pass in `f32`.
//!
//! Tensors are channel-major `[c][y][x]`. Convolutions use 4x4 kernels with
//! stride 2 and one pixel of zero padding, without bias:
//!
//! - conv, weight `[out, in, 4, 4]`:
//!   `o[c, y, x] = sum w[c, i, ky, kx] * in[i, 2y + ky - 1, 2x + kx - 1]`
//! - transposed conv, weight `[in, out, 4, 4]`: input sample `(y, x)` of
//!   channel `i` adds `in[i, y, x] * w[i, c, ky, kx]` to
//!   `o[c, 2y + ky - 1, 2x + kx - 1]`
//! - norm: `scale[c] * v + bias[c]`
//!
//! Decoder outputs are concatenated as `[decoder, skip]` along channels.

use rayon::prelude::*;

use super::weights::{LayerKind, ModelWeights, KERNEL};
use super::{NormError, NormalizedFringe};
use crate::phase::mirror_index;
use crate::raster::RealField;

/// Overlap between neighbouring tiles, pixels.
pub const TILE_OVERLAP: usize = 32;
const LEAK: f32 = 0.2;

#[derive(Debug, Clone)]
struct Tensor {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f32>,
}

impl Tensor {
    fn plane(&self, c: usize) -> &[f32] {
        &self.data[c * self.h * self.w..(c + 1) * self.h * self.w]
    }

    fn concat(mut self, other: &Tensor) -> Tensor {
        debug_assert_eq!((self.h, self.w), (other.h, other.w));
        self.data.extend_from_slice(&other.data);
        self.c += other.c;
        self
    }
}

fn conv(t: &Tensor, weight: &[f32], cout: usize) -> Tensor {
    let (h, w) = (t.h / 2, t.w / 2);
    let k2 = KERNEL * KERNEL;
    let mut data = vec![0.0f32; cout * h * w];
    data.par_chunks_mut(h * w).enumerate().for_each(|(o, out)| {
        for i in 0..t.c {
            let src = t.plane(i);
            let ker = &weight[(o * t.c + i) * k2..(o * t.c + i + 1) * k2];
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let g = ker[ky * KERNEL + kx];
                    for y in 0..h {
                        let sy = 2 * y + ky;
                        if sy == 0 || sy > t.h {
                            continue;
                        }
                        let row = &src[(sy - 1) * t.w..sy * t.w];
                        let dst = &mut out[y * w..(y + 1) * w];
                        for (x, d) in dst.iter_mut().enumerate() {
                            let sx = 2 * x + kx;
                            if sx >= 1 && sx <= t.w {
                                *d += g * row[sx - 1];
                            }
                        }
                    }
                }
            }
        }
    });
    Tensor { c: cout, h, w, data }
}

fn tconv(t: &Tensor, weight: &[f32], cout: usize) -> Tensor {
    let (h, w) = (t.h * 2, t.w * 2);
    let k2 = KERNEL * KERNEL;
    let mut data = vec![0.0f32; cout * h * w];
    data.par_chunks_mut(h * w).enumerate().for_each(|(o, out)| {
        for i in 0..t.c {
            let src = t.plane(i);
            let ker = &weight[(i * cout + o) * k2..(i * cout + o + 1) * k2];
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let g = ker[ky * KERNEL + kx];
                    for y in 0..t.h {
                        let oy = 2 * y + ky;
                        if oy == 0 || oy > h {
                            continue;
                        }
                        let row = &src[y * t.w..(y + 1) * t.w];
                        let dst = &mut out[(oy - 1) * w..oy * w];
                        for (x, &v) in row.iter().enumerate() {
                            let ox = 2 * x + kx;
                            if ox >= 1 && ox <= w {
                                dst[ox - 1] += g * v;
                            }
                        }
                    }
                }
            }
        }
    });
    Tensor { c: cout, h, w, data }
}

fn affine(t: &mut Tensor, scale: &[f32], bias: &[f32]) {
    let n = t.h * t.w;
    for (c, plane) in t.data.chunks_mut(n).enumerate() {
        plane.iter_mut().for_each(|v| *v = scale[c] * *v + bias[c]);
    }
}

/// Walks the layer list in order; every tensor is read exactly once.
struct Cursor<'a> {
    layers: &'a [super::weights::Layer],
    next: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, kind: LayerKind) -> &'a super::weights::Layer {
        let l = &self.layers[self.next];
        debug_assert_eq!(l.kind, kind, "{}", l.name);
        self.next += 1;
        l
    }
}

/// Runs the network on one tile already mapped into `[-1, 1]`.
fn forward_unit(weights: &ModelWeights, input: Vec<f32>, n: usize) -> Vec<f32> {
    let arch = weights.arch;
    let d = arch.depth;
    let mut cur = Cursor { layers: &weights.layers, next: 0 };
    let mut skips: Vec<Tensor> = Vec::with_capacity(d);
    let mut x = Tensor { c: 1, h: n, w: n, data: input };
    for i in 0..d {
        let l = cur.take(LayerKind::Conv);
        x = conv(&x, &l.data, l.shape[0]);
        if i > 0 {
            let s = cur.take(LayerKind::NormScale);
            let b = cur.take(LayerKind::NormBias);
            affine(&mut x, &s.data, &b.data);
        }
        x.data.iter_mut().for_each(|v| {
            if *v < 0.0 {
                *v *= LEAK
            }
        });
        skips.push(x.clone());
    }
    skips.pop();
    for _ in 0..d - 1 {
        let l = cur.take(LayerKind::TransposedConv);
        x = tconv(&x, &l.data, l.shape[1]);
        let s = cur.take(LayerKind::NormScale);
        let b = cur.take(LayerKind::NormBias);
        affine(&mut x, &s.data, &b.data);
        x.data.iter_mut().for_each(|v| *v = v.max(0.0));
        x = x.concat(&skips.pop().expect("one skip per decoder block"));
    }
    let l = cur.take(LayerKind::TransposedConv);
    x = tconv(&x, &l.data, 1);
    debug_assert_eq!(cur.next, weights.layers.len());
    x.data.iter_mut().for_each(|v| *v = v.tanh());
    x.data
}

/// Linear map of `[min, max]` onto `[-1, 1]`; a constant field maps to zero.
pub fn rescale_unit(img: &RealField) -> RealField {
    let (lo, hi) = img.min_max();
    let span = hi - lo;
    if !(span > 0.0) {
        return RealField::filled(img.width(), img.height(), 0.0);
    }
    RealField::from_vec_unchecked(
        img.width(),
        img.height(),
        img.data().iter().map(|v| 2.0 * (v - lo) / span - 1.0).collect(),
    )
}

fn to_f32(f: &RealField) -> Vec<f32> {
    f.data().iter().map(|&v| v as f32).collect()
}

/// Single forward pass; the image must be `input_size` square.
pub fn unet_forward(weights: &ModelWeights, img: &RealField) -> Result<NormalizedFringe, NormError> {
    weights.validate()?;
    let n = weights.arch.input_size;
    if img.dims() != (n, n) {
        return Err(NormError::SizeMismatch { got: img.dims(), want: n });
    }
    let out = forward_unit(weights, to_f32(&rescale_unit(img)), n);
    Ok(NormalizedFringe::new(RealField::new(n, n, out.into_iter().map(f64::from).collect())?))
}

/// Tile start positions covering `len` with tiles of `tile` overlapping by at
/// least `overlap`; the last tile is flush with the end.
pub fn tile_origins(len: usize, tile: usize, overlap: usize) -> Vec<usize> {
    if len <= tile {
        return vec![0];
    }
    let step = tile - overlap;
    let mut v: Vec<usize> = (0..).map(|k| k * step).take_while(|&o| o + tile < len).collect();
    v.push(len - tile);
    v
}

/// Blend weight along one tile axis: raised-cosine ramps on sides that
/// overlap a neighbour, flat elsewhere.
fn ramp(tile: usize, ramp_lo: bool, ramp_hi: bool) -> Vec<f64> {
    let ov = TILE_OVERLAP as f64;
    (0..tile)
        .map(|t| {
            let rise = |d: usize| {
                if (d as f64) < ov {
                    0.5 - 0.5 * (std::f64::consts::PI * (d as f64 + 0.5) / ov).cos()
                } else {
                    1.0
                }
            };
            let mut g = 1.0;
            if ramp_lo {
                g *= rise(t);
            }
            if ramp_hi {
                g *= rise(tile - 1 - t);
            }
            g
        })
        .collect()
}

/// Forward pass over an image of any size: the whole image is mapped into
/// `[-1, 1]` once, mirror-padded up to the tile size if smaller, then cut
/// into overlapping tiles whose outputs are blended.
pub fn unet_tiled(weights: &ModelWeights, img: &RealField) -> Result<NormalizedFringe, NormError> {
    weights.validate()?;
    let n = weights.arch.input_size;
    let (w0, h0) = img.dims();
    let unit = rescale_unit(img);
    let (w, h) = (w0.max(n), h0.max(n));
    let padded = if (w, h) == (w0, h0) {
        unit
    } else {
        RealField::from_fn(w, h, |x, y| unit.get(mirror_index(x as isize, w0), mirror_index(y as isize, h0)))
    };
    let xs = tile_origins(w, n, TILE_OVERLAP);
    let ys = tile_origins(h, n, TILE_OVERLAP);
    let mut acc = vec![0.0f64; w * h];
    let mut norm = vec![0.0f64; w * h];
    for (iy, &oy) in ys.iter().enumerate() {
        let ry = ramp(n, iy > 0, iy + 1 < ys.len());
        for (ix, &ox) in xs.iter().enumerate() {
            let rx = ramp(n, ix > 0, ix + 1 < xs.len());
            let tile = padded.crop(ox, oy, n, n)?;
            let out = forward_unit(weights, to_f32(&tile), n);
            for ty in 0..n {
                for tx in 0..n {
                    let g = ry[ty] * rx[tx];
                    let k = (oy + ty) * w + ox + tx;
                    acc[k] += g * f64::from(out[ty * n + tx]);
                    norm[k] += g;
                }
            }
        }
    }
    let full = RealField::new(w, h, acc.iter().zip(&norm).map(|(a, g)| a / g).collect())?;
    let out = if (w, h) == (w0, h0) { full } else { full.crop(0, 0, w0, h0)? };
    Ok(NormalizedFringe::new(out))
}
