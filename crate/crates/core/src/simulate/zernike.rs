//! Zernike polynomials, OSA/ANSI single index, unit-RMS normalization over
//! the disk.

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::raster::RealField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZernikeSpec {
    /// `c_j` for OSA/ANSI index `j = 0, 1, ...`.
    pub coefficients: Vec<f64>,
}

/// `(n, m)` for OSA/ANSI index `j`.
pub fn osa_to_nm(j: usize) -> (usize, isize) {
    let mut n = 0;
    while (n + 1) * (n + 2) / 2 <= j {
        n += 1;
    }
    let m = 2 * j as isize - (n * (n + 2)) as isize;
    (n, m)
}

/// Radial polynomials `R_n^m(rho)` for `m <= n <= nmax`, via
/// `R_n^m = rho (R_{n-1}^{|m-1|} + R_{n-1}^{m+1}) - R_{n-2}^m`.
fn radial_table(nmax: usize, rho: f64) -> Vec<Vec<f64>> {
    let mut r = vec![vec![0.0; nmax + 2]; nmax + 1];
    for n in 0..=nmax {
        r[n][n] = rho.powi(n as i32);
        for m in (n % 2..n).step_by(2) {
            let a = r[n - 1][m.abs_diff(1)];
            let b = r[n - 1][m + 1];
            let c = if n >= 2 { r[n - 2][m] } else { 0.0 };
            r[n][m] = rho * (a + b) - c;
        }
    }
    r
}

fn term(n: usize, m: isize, radial: &[Vec<f64>], theta: f64) -> f64 {
    let am = m.unsigned_abs();
    let norm = if m == 0 { ((n + 1) as f64).sqrt() } else { (2.0 * (n + 1) as f64).sqrt() };
    let ang = if m > 0 {
        (am as f64 * theta).cos()
    } else if m < 0 {
        (am as f64 * theta).sin()
    } else {
        1.0
    };
    norm * radial[n][am] * ang
}

/// Single polynomial `Z_j(rho, theta)`.
pub fn zernike_term(j: usize, rho: f64, theta: f64) -> f64 {
    let (n, m) = osa_to_nm(j);
    term(n, m, &radial_table(n, rho), theta)
}

/// Pixel `(x, y)` in disk coordinates: centre at `((w-1)/2, (h-1)/2)`, radius
/// `min(w, h)/2` maps to `rho = 1`. Points outside the disk keep `rho > 1`.
pub fn disk_coords(x: usize, y: usize, width: usize, height: usize) -> (f64, f64) {
    let r = width.min(height) as f64 / 2.0;
    let u = (x as f64 - (width as f64 - 1.0) / 2.0) / r;
    let v = (y as f64 - (height as f64 - 1.0) / 2.0) / r;
    (u, v)
}

/// `sum_j c_j Z_j` sampled on the pixel grid.
pub fn zernike_eval(spec: &ZernikeSpec, width: usize, height: usize) -> Result<RealField, SimError> {
    if spec.coefficients.is_empty() {
        return Err(SimError::EmptySpec);
    }
    if width == 0 || height == 0 {
        return Err(SimError::BadParam(format!("size {width}x{height}")));
    }
    let modes: Vec<(usize, isize, f64)> = spec
        .coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, &c)| {
            let (n, m) = osa_to_nm(j);
            (n, m, c)
        })
        .collect();
    let nmax = modes.iter().map(|t| t.0).max().unwrap_or(0);
    Ok(RealField::from_fn(width, height, |x, y| {
        let (u, v) = disk_coords(x, y, width, height);
        let rho = u.hypot(v);
        let theta = v.atan2(u);
        let radial = radial_table(nmax, rho);
        modes.iter().map(|&(n, m, c)| c * term(n, m, &radial, theta)).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Closed-form radial polynomial.
    fn radial_sum(n: usize, m: usize, rho: f64) -> f64 {
        (0..=(n - m) / 2)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * factorial(n - k) / (factorial(k) * factorial((n + m) / 2 - k) * factorial((n - m) / 2 - k))
                    * rho.powi((n - 2 * k) as i32)
            })
            .sum()
    }

    #[test]
    fn osa_indexing() {
        let want = [(0, 0), (1, -1), (1, 1), (2, -2), (2, 0), (2, 2), (3, -3), (3, -1), (3, 1), (3, 3), (4, -4)];
        for (j, &(n, m)) in want.iter().enumerate() {
            assert_eq!(osa_to_nm(j), (n, m), "j={j}");
        }
    }

    #[test]
    fn recurrence_matches_closed_form() {
        for &rho in &[0.0, 0.3, 0.77, 1.0, 1.4] {
            let t = radial_table(7, rho);
            for n in 0..=7 {
                for m in (n % 2..=n).step_by(2) {
                    assert!((t[n][m] - radial_sum(n, m, rho)).abs() < 1e-10, "n={n} m={m} rho={rho}");
                }
            }
        }
    }

    #[test]
    fn piston_is_constant() {
        let f = zernike_eval(&ZernikeSpec { coefficients: vec![5.0] }, 16, 9).unwrap();
        assert!(f.data().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn tilt_is_linear_in_y() {
        let (w, h) = (33, 21);
        let f = zernike_eval(&ZernikeSpec { coefficients: vec![0.0, 1.0] }, w, h).unwrap();
        for x in 0..w {
            assert!(f.get(x, h / 2).abs() < 1e-12);
            for y in 0..h {
                let (_, v) = disk_coords(x, y, w, h);
                assert!((f.get(x, y) - 2.0 * v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn discrete_orthogonality() {
        let n = 256;
        let inside: Vec<(f64, f64)> = (0..n * n)
            .map(|i| disk_coords(i % n, i / n, n, n))
            .filter(|(u, v)| u.hypot(*v) <= 1.0)
            .map(|(u, v)| (u.hypot(v), v.atan2(u)))
            .collect();
        let vals: Vec<Vec<f64>> =
            (0..10).map(|j| inside.iter().map(|&(r, t)| zernike_term(j, r, t)).collect()).collect();
        let area = inside.len() as f64;
        for j in 0..10 {
            let self_ip: f64 = vals[j].iter().map(|v| v * v).sum::<f64>() / area;
            assert!((self_ip - 1.0).abs() < 0.02, "j={j} {self_ip}");
            for k in 0..j {
                let ip: f64 = vals[j].iter().zip(&vals[k]).map(|(a, b)| a * b).sum::<f64>() / area;
                assert!(ip.abs() < 0.02, "<Z{j}, Z{k}> = {ip}");
            }
        }
    }

    #[test]
    fn empty_spec() {
        assert!(matches!(zernike_eval(&ZernikeSpec { coefficients: vec![] }, 4, 4), Err(SimError::EmptySpec)));
    }
}
