//! Real and complex 2D fields plus the `FPR1` raster container.
//!
//! Every field is row-major with `sample(x, y) = data[y * width + x]`: `y` is the
//! row index and `x` the column index. The fringe carrier runs along `x`.
//!
//! `FPR1` layout (all little-endian):
//!
//! | offset | size | content                                          |
//! |--------|------|--------------------------------------------------|
//! | 0      | 4    | magic `b"FPR1"`                                  |
//! | 4      | 4    | width, `u32`                                     |
//! | 8      | 4    | height, `u32`                                    |
//! | 12     | 1    | dtype: 0 = real `f32`, 1 = complex interleaved `f32` |
//! | 13     | ..   | payload                                          |
//!
//! Fields are held in `f64` in memory; writing quantizes to `f32`, so a field
//! whose samples are exactly representable in `f32` round-trips bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"FPR1";
pub const HEADER_LEN: usize = 13;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("bad magic {0:?}, expected \"FPR1\"")]
    BadMagic([u8; 4]),
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("unsupported dtype {0}")]
    UnsupportedDtype(u8),
    #[error("i/o failure on {path}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("degenerate display range: lo {lo} >= hi {hi}")]
    DegenerateRange { lo: f64, hi: f64 },
    #[error("data length {len} does not match {width}x{height}")]
    LengthMismatch { width: usize, height: usize, len: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("dimensions {0}x{1} are not allowed")]
    BadDimensions(usize, usize),
    #[error("png encoding failed: {0}")]
    Png(String),
}

fn io_err(path: &Path, source: std::io::Error) -> RasterError {
    RasterError::IoFailure { path: path.display().to_string(), source }
}

/// A real-valued raster (intensity, phase, modulation, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// A complex-valued raster, typically an analytic fringe signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 || width > u32::MAX as usize || height > u32::MAX as usize {
        return Err(RasterError::BadDimensions(width, height));
    }
    if width * height != len {
        return Err(RasterError::LengthMismatch { width, height, len });
    }
    Ok(())
}

impl RealField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, RasterError> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(RasterError::NonFinite(i));
        }
        Ok(Self { width, height, data })
    }

    /// Constant field. Panics on zero dimensions or a non-finite value.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid constant field")
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if `f` yields a non-finite value; generator closures inside the
    /// crate are total over their domain.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("generator produced an invalid field")
    }

    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(width * height, data.len());
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Pointwise map; the result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, RasterError> {
        Self::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    /// Copy of the rectangle `[x0, x0 + w) x [y0, y0 + h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self, RasterError> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(RasterError::BadDimensions(w, h));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Ok(Self::from_vec_unchecked(w, h, data))
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

impl ComplexField {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self, RasterError> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(RasterError::NonFinite(i));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("generator produced an invalid field")
    }

    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(width * height, data.len());
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[Complex64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn re(&self) -> RealField {
        RealField::from_vec_unchecked(self.width, self.height, self.data.iter().map(|c| c.re).collect())
    }

    pub fn norm(&self) -> RealField {
        RealField::from_vec_unchecked(self.width, self.height, self.data.iter().map(|c| c.norm()).collect())
    }

    pub fn arg(&self) -> RealField {
        RealField::from_vec_unchecked(self.width, self.height, self.data.iter().map(|c| c.arg()).collect())
    }

    pub fn conj(&self) -> ComplexField {
        ComplexField::from_vec_unchecked(self.width, self.height, self.data.iter().map(|c| c.conj()).collect())
    }

    pub fn scale(&self, factor: Complex64) -> ComplexField {
        ComplexField::from_vec_unchecked(self.width, self.height, self.data.iter().map(|&c| c * factor).collect())
    }
}

/// Either kind of raster, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    Real(RealField),
    Complex(ComplexField),
}

impl Raster {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Raster::Real(f) => f.dims(),
            Raster::Complex(f) => f.dims(),
        }
    }

    pub fn into_real(self) -> Option<RealField> {
        match self {
            Raster::Real(f) => Some(f),
            Raster::Complex(_) => None,
        }
    }

    pub fn into_complex(self) -> Option<ComplexField> {
        match self {
            Raster::Complex(f) => Some(f),
            Raster::Real(_) => None,
        }
    }
}

impl From<RealField> for Raster {
    fn from(f: RealField) -> Self {
        Raster::Real(f)
    }
}

impl From<ComplexField> for Raster {
    fn from(f: ComplexField) -> Self {
        Raster::Complex(f)
    }
}

/// Serializes a raster into `FPR1` bytes.
pub fn encode_raster(raster: &Raster) -> Vec<u8> {
    let (w, h) = raster.dims();
    let (dtype, n) = match raster {
        Raster::Real(_) => (0u8, w * h),
        Raster::Complex(_) => (1u8, 2 * w * h),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.push(dtype);
    match raster {
        Raster::Real(f) => {
            for &v in f.data() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Raster::Complex(f) => {
            for c in f.data() {
                out.extend_from_slice(&(c.re as f32).to_le_bytes());
                out.extend_from_slice(&(c.im as f32).to_le_bytes());
            }
        }
    }
    out
}

/// Parses `FPR1` bytes.
pub fn decode_raster(bytes: &[u8]) -> Result<Raster, RasterError> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(RasterError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(RasterError::TruncatedPayload { expected: HEADER_LEN, found: bytes.len() });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(RasterError::BadMagic(magic));
    }
    let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let dtype = bytes[12];
    let per_px = match dtype {
        0 => 1,
        1 => 2,
        other => return Err(RasterError::UnsupportedDtype(other)),
    };
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4 * per_px))
        .ok_or(RasterError::BadDimensions(w, h))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(RasterError::TruncatedPayload { expected, found: payload.len() });
    }
    let floats = payload[..expected]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
    match dtype {
        0 => Ok(Raster::Real(RealField::new(w, h, floats.collect())?)),
        _ => {
            let v: Vec<f64> = floats.collect();
            let data = v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
            Ok(Raster::Complex(ComplexField::new(w, h, data)?))
        }
    }
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster, RasterError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    decode_raster(&bytes)
}

/// Reads a raster that must be real-valued.
pub fn read_real(path: impl AsRef<Path>) -> Result<RealField, RasterError> {
    match read_raster(path)? {
        Raster::Real(f) => Ok(f),
        Raster::Complex(_) => Err(RasterError::UnsupportedDtype(1)),
    }
}

pub fn write_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let path = path.as_ref();
    let bytes = encode_raster(raster);
    File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| io_err(path, e))
}

pub fn write_real(field: &RealField, path: impl AsRef<Path>) -> Result<(), RasterError> {
    write_raster(&Raster::Real(field.clone()), path)
}

/// 16-bit level for `v` under the linear display map `[lo, hi] -> [0, 65535]`.
#[inline]
pub fn png_level(v: f64, lo: f64, hi: f64) -> u16 {
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (65535.0 * t).round() as u16
}

/// Writes a 16-bit grayscale PNG of `field` mapped linearly from `[lo, hi]`.
pub fn export_png(
    field: &RealField,
    path: impl AsRef<Path>,
    lo: f64,
    hi: f64,
) -> Result<(), RasterError> {
    let path = path.as_ref();
    if !(lo < hi) {
        return Err(RasterError::DegenerateRange { lo, hi });
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), field.width() as u32, field.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header().map_err(|e| RasterError::Png(e.to_string()))?;
    let mut buf = Vec::with_capacity(field.data().len() * 2);
    for &v in field.data() {
        buf.extend_from_slice(&png_level(v, lo, hi).to_be_bytes());
    }
    writer.write_image_data(&buf).map_err(|e| RasterError::Png(e.to_string()))?;
    writer.finish().map_err(|e| RasterError::Png(e.to_string()))?;
    Ok(())
}
