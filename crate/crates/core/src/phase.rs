//! Small phase helpers shared across modules.

use std::f64::consts::PI;

use crate::raster::RealField;

pub const TWO_PI: f64 = 2.0 * PI;

/// Wraps an angle into `(-pi, pi]`.
#[inline]
pub fn wrap(a: f64) -> f64 {
    let mut r = a % TWO_PI;
    if r > PI {
        r -= TWO_PI;
    } else if r <= -PI {
        r += TWO_PI;
    }
    r
}

pub fn wrap_field(f: &RealField) -> RealField {
    RealField::from_vec_unchecked(f.width(), f.height(), f.data().iter().map(|&v| wrap(v)).collect())
}

/// Reflect-101 index into `[0, n)`: `-1 -> 1`, `n -> n - 2`.
#[inline]
pub fn mirror_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap(PI), PI);
        assert_eq!(wrap(-PI), PI);
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap(7.0) - (7.0 - TWO_PI)).abs() < 1e-12);
        assert!((wrap(-7.0) - (-7.0 + TWO_PI)).abs() < 1e-12);
        assert_eq!(wrap(0.25), 0.25);
    }

    #[test]
    fn mirror() {
        let n = 5;
        let got: Vec<usize> = (-3..8).map(|i| mirror_index(i, n)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(mirror_index(-4, 1), 0);
    }
}
