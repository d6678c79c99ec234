//! Minimal line charts: axes, ticks and one coloured polyline per series.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};

const W: usize = 640;
const H: usize = 400;
const MARGIN: usize = 40;
const PALETTE: [[u8; 3]; 6] = [[31, 119, 180], [214, 39, 40], [44, 160, 44], [255, 127, 14], [148, 103, 189], [23, 190, 207]];

struct Canvas {
    px: Vec<u8>,
}

impl Canvas {
    fn new() -> Self {
        Self { px: vec![255; W * H * 3] }
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < W && (y as usize) < H {
            let i = (y as usize * W + x as usize) * 3;
            self.px[i..i + 3].copy_from_slice(&c);
        }
    }

    fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.put(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn square(&mut self, (x, y): (i64, i64), c: [u8; 3]) {
        for dy in -2..=2 {
            for dx in -2..=2 {
                self.put(x + dx, y + dy, c);
            }
        }
    }
}

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !(hi > lo) {
        (lo - 0.5, lo + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Writes an RGB PNG with one polyline per series.
pub fn line_chart(series: &[Vec<(f64, f64)>], path: &Path) -> Result<()> {
    let mut cv = Canvas::new();
    let (xl, xh) = span(series.iter().flatten().map(|p| p.0));
    let (yl, yh) = span(series.iter().flatten().map(|p| p.1));
    let to_px = |(x, y): (f64, f64)| {
        let u = MARGIN as f64 + (x - xl) / (xh - xl) * (W - 2 * MARGIN) as f64;
        let v = (H - MARGIN) as f64 - (y - yl) / (yh - yl) * (H - 2 * MARGIN) as f64;
        (u.round() as i64, v.round() as i64)
    };
    let black = [0, 0, 0];
    let (left, bottom) = (MARGIN as i64, (H - MARGIN) as i64);
    cv.line((left, bottom), ((W - MARGIN) as i64, bottom), black);
    cv.line((left, bottom), (left, MARGIN as i64), black);
    for k in 0..=10 {
        let tx = left + (k * (W - 2 * MARGIN) / 10) as i64;
        let ty = bottom - (k * (H - 2 * MARGIN) / 10) as i64;
        cv.line((tx, bottom), (tx, bottom + 5), black);
        cv.line((left - 5, ty), (left, ty), black);
    }
    for (s, pts) in series.iter().enumerate() {
        let c = PALETTE[s % PALETTE.len()];
        for p in pts.windows(2) {
            cv.line(to_px(p[0]), to_px(p[1]), c);
        }
        for &p in pts {
            cv.square(to_px(p), c);
        }
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), W as u32, H as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header()?;
    w.write_image_data(&cv.px)?;
    w.finish()?;
    Ok(())
}
