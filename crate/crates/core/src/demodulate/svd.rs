//! Leading singular triple of a small complex matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DemodError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SvdMode {
    /// Exact decomposition of the whole matrix.
    Full,
    /// Alternating power iterations, leading triple only.
    #[default]
    PowerIteration,
}

/// `(sigma_1, u_1, v_1)` with `M ~= sigma_1 u_1 v_1^H`.
#[derive(Debug, Clone)]
pub struct DominantTriple {
    pub sigma: f64,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    /// False when power iteration hit its budget before settling.
    pub converged: bool,
}

/// Relative change of `sigma_1` below which power iteration stops.
pub const POWER_TOL: f64 = 1e-10;

/// Dominant singular triple of the row-major `rows x cols` matrix `m`.
///
/// `Full` delegates to a complete SVD and is used as the reference; the power
/// path starts from the column of largest norm and alternates `v <- M^H u`,
/// `u <- M v` until `sigma_1` settles or `iters` is exhausted. Hitting the
/// budget is not an error: the best estimate comes back with
/// `converged == false`.
pub fn dominant_svd(
    m: &[Complex64],
    rows: usize,
    cols: usize,
    mode: SvdMode,
    iters: usize,
) -> Result<DominantTriple, DemodError> {
    assert_eq!(m.len(), rows * cols);
    if rows < 2 || cols < 2 {
        return Err(DemodError::WindowTooSmall(rows.min(cols)));
    }
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(DemodError::NonFinite);
    }
    let t = match mode {
        SvdMode::Full => full(m, rows, cols),
        SvdMode::PowerIteration => {
            let mut scratch = PowerScratch::new(rows, cols);
            power(m, rows, cols, iters, &mut scratch)
        }
    };
    if !(t.sigma > 0.0) {
        return Err(DemodError::RankDeficient);
    }
    Ok(t)
}

fn full(m: &[Complex64], rows: usize, cols: usize) -> DominantTriple {
    let d = jacobi_svd(m, rows, cols);
    let n = d.sigma.len();
    let k = (0..n).fold(0, |b, i| if d.sigma[i] > d.sigma[b] { i } else { b });
    DominantTriple {
        sigma: d.sigma[k],
        u: (0..rows).map(|r| d.u[r * n + k]).collect(),
        v: (0..cols).map(|r| d.v[r * n + k]).collect(),
        converged: true,
    }
}

/// Thin SVD `M = U diag(sigma) V^H`, `k = min(rows, cols)` triples.
pub struct FullSvd {
    /// Singular values, unsorted.
    pub sigma: Vec<f64>,
    /// `rows x k`, row-major.
    pub u: Vec<Complex64>,
    /// `cols x k`, row-major.
    pub v: Vec<Complex64>,
}

/// One-sided (Hestenes) Jacobi SVD for complex matrices.
///
/// Column pairs are rotated until every pair is orthogonal to working
/// precision; the column norms are then the singular values. Slow compared
/// with power iteration, but accurate to round-off for every triple.
pub fn jacobi_svd(m: &[Complex64], rows: usize, cols: usize) -> FullSvd {
    assert_eq!(m.len(), rows * cols);
    if rows < cols {
        // decompose M^H = V S U^H and swap roles
        let mut mh = vec![Complex64::default(); rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                mh[c * rows + r] = m[r * cols + c].conj();
            }
        }
        let t = jacobi_svd(&mh, cols, rows);
        // t.u is cols x rows, t.v is rows x rows
        return FullSvd { sigma: t.sigma, u: t.v, v: t.u };
    }
    // column-major working copy
    let mut a: Vec<Vec<Complex64>> = (0..cols).map(|c| (0..rows).map(|r| m[r * cols + c]).collect()).collect();
    let mut v: Vec<Vec<Complex64>> = (0..cols)
        .map(|c| (0..cols).map(|r| if r == c { Complex64::new(1.0, 0.0) } else { Complex64::default() }).collect())
        .collect();
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // align phases so the pair's inner product is real, then rotate
                let ph = gamma / g;
                for cols_of in [&mut a, &mut v] {
                    let (lo, hi) = cols_of.split_at_mut(q);
                    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let yq = *xq * ph.conj();
                        let np = *xp * c - yq * s;
                        let nq = *xp * s + yq * c;
                        *xp = np;
                        *xq = nq * ph;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = a.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut u = vec![Complex64::default(); rows * cols];
    for (k, col) in a.iter().enumerate() {
        if sigma[k] > 0.0 {
            for r in 0..rows {
                u[r * cols + k] = col[r] / sigma[k];
            }
        }
    }
    let mut vv = vec![Complex64::default(); cols * cols];
    for (k, col) in v.iter().enumerate() {
        for r in 0..cols {
            vv[r * cols + k] = col[r];
        }
    }
    FullSvd { sigma, u, v: vv }
}

/// Reusable buffers for the power path.
pub(crate) struct PowerScratch {
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    w: Vec<Complex64>,
}

impl PowerScratch {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        Self {
            u: vec![Complex64::default(); rows],
            v: vec![Complex64::default(); cols],
            w: vec![Complex64::default(); rows],
        }
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn power(
    m: &[Complex64],
    rows: usize,
    cols: usize,
    iters: usize,
    s: &mut PowerScratch,
) -> DominantTriple {
    // start from the strongest column
    let mut best = (0, -1.0);
    for c in 0..cols {
        let n: f64 = (0..rows).map(|r| m[r * cols + c].norm_sqr()).sum();
        if n > best.1 {
            best = (c, n);
        }
    }
    let n0 = best.1.sqrt();
    if !(n0 > 0.0) {
        return DominantTriple { sigma: 0.0, u: vec![Complex64::default(); rows], v: vec![Complex64::default(); cols], converged: false };
    }
    for r in 0..rows {
        s.u[r] = m[r * cols + best.0] / n0;
    }
    let mut sigma_prev = f64::NAN;
    let mut sigma = 0.0;
    let mut converged = false;
    for _ in 0..iters.max(2) {
        // v = M^H u
        s.v.iter_mut().for_each(|c| *c = Complex64::default());
        for r in 0..rows {
            let ur = s.u[r];
            let row = &m[r * cols..(r + 1) * cols];
            for (vc, mc) in s.v.iter_mut().zip(row) {
                *vc += mc.conj() * ur;
            }
        }
        let nv = norm(&s.v);
        if !(nv > 0.0) {
            sigma = 0.0;
            break;
        }
        s.v.iter_mut().for_each(|c| *c /= nv);
        // w = M v
        for r in 0..rows {
            let row = &m[r * cols..(r + 1) * cols];
            s.w[r] = row.iter().zip(&s.v).map(|(a, b)| a * b).sum();
        }
        sigma = norm(&s.w);
        if !(sigma > 0.0) {
            break;
        }
        for r in 0..rows {
            s.u[r] = s.w[r] / sigma;
        }
        if (sigma - sigma_prev).abs() <= POWER_TOL * sigma {
            converged = true;
            break;
        }
        sigma_prev = sigma;
    }
    DominantTriple { sigma, u: s.u.clone(), v: s.v.clone(), converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n * n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    fn conj_t(m: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut t = vec![Complex64::default(); n * n];
        for r in 0..n {
            for c in 0..n {
                t[c * n + r] = m[r * n + c].conj();
            }
        }
        t
    }

    /// |<a, b>| / (|a||b|): one when parallel up to a unit phase.
    fn alignment(a: &[Complex64], b: &[Complex64]) -> f64 {
        let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
        dot.norm() / (norm(a) * norm(b))
    }

    #[test]
    fn rank_one_identity() {
        let p: Vec<Complex64> = (0..7).map(|i| Complex64::new(1.0 + i as f64, 0.5 - i as f64 * 0.2)).collect();
        let q: Vec<Complex64> = (0..7).map(|i| Complex64::from_polar(0.3 + i as f64 * 0.1, i as f64)).collect();
        let m: Vec<Complex64> = (0..49).map(|k| p[k / 7] * q[k % 7].conj()).collect();
        for mode in [SvdMode::Full, SvdMode::PowerIteration] {
            let t = dominant_svd(&m, 7, 7, mode, 30).unwrap();
            assert!((t.sigma - norm(&p) * norm(&q)).abs() < 1e-10 * t.sigma);
            assert!((alignment(&t.u, &p) - 1.0).abs() < 1e-10);
            assert!((alignment(&t.v, &q) - 1.0).abs() < 1e-10);
            assert!(t.converged);
        }
    }

    #[test]
    fn power_matches_full_on_separated_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 50 {
            let m = random_matrix(&mut rng, 11);
            let mut sv = jacobi_svd(&m, 11, 11).sigma;
            sv.sort_by(|a, b| b.total_cmp(a));
            if sv[0] / sv[1] <= 1.5 {
                continue;
            }
            checked += 1;
            let f = dominant_svd(&m, 11, 11, SvdMode::Full, 0).unwrap();
            let p = dominant_svd(&m, 11, 11, SvdMode::PowerIteration, 200).unwrap();
            assert!((f.sigma - p.sigma).abs() < 1e-8 * f.sigma);
            assert!(alignment(&f.u, &p.u) > 1.0 - 1e-8);
            assert!(alignment(&f.v, &p.v) > 1.0 - 1e-8);
        }
    }

    #[test]
    fn jacobi_reconstructs_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (rows, cols) in [(11, 11), (7, 4), (3, 8)] {
            let m: Vec<Complex64> =
                (0..rows * cols).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let d = jacobi_svd(&m, rows, cols);
            let k = d.sigma.len();
            for r in 0..rows {
                for c in 0..cols {
                    let rec: Complex64 = (0..k).map(|i| d.u[r * k + i] * d.sigma[i] * d.v[c * k + i].conj()).sum();
                    assert!((rec - m[r * cols + c]).norm() < 1e-12, "{rows}x{cols}");
                }
            }
        }
    }

    #[test]
    fn hermitian_transpose_has_same_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = random_matrix(&mut rng, 11);
            let a = dominant_svd(&m, 11, 11, SvdMode::Full, 0).unwrap().sigma;
            let b = dominant_svd(&conj_t(&m, 11), 11, 11, SvdMode::Full, 0).unwrap().sigma;
            assert!((a - b).abs() < 1e-10 * a);
        }
    }

    #[test]
    fn zero_matrix_is_rank_deficient() {
        let m = vec![Complex64::default(); 9];
        for mode in [SvdMode::Full, SvdMode::PowerIteration] {
            assert!(matches!(dominant_svd(&m, 3, 3, mode, 10), Err(DemodError::RankDeficient)));
        }
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        // nearly equal leading singular values converge slowly
        let mut m = vec![Complex64::default(); 9];
        m[0] = Complex64::new(1.0, 0.0);
        m[4] = Complex64::new(0.999, 0.0);
        m[1] = Complex64::new(0.01, 0.0);
        let t = dominant_svd(&m, 3, 3, SvdMode::PowerIteration, 5).unwrap();
        assert!(!t.converged);
        assert!(t.sigma > 0.99);
    }
}
