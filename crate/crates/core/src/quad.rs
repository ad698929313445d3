//! Quadrature rules: Gauss-Legendre, Gauss-Jacobi (one-sided endpoint weight)
//! and an adaptive Simpson fallback used for cross-checks.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Rules are memoized: the orbit quadratures regenerate the same sizes
/// constantly and node construction is the dominant cost otherwise.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(rule) = cache.read().unwrap().get(&n) {
        return ((*rule).0.clone(), (*rule).1.clone());
    }
    let rule = Arc::new(gauss_legendre_uncached(n));
    cache.write().unwrap().insert(n, rule.clone());
    ((*rule).0.clone(), (*rule).1.clone())
}

/// Newton iteration on the Legendre recurrence; nodes ascending.
fn gauss_legendre_uncached(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess, counted from the upper end
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (_, d2) = legendre_pair(n, x);
                dp = d2;
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|&xi| c + h * xi).collect(),
        w.iter().map(|&wi| wi * h).collect(),
    )
}

/// `n`-point Gauss-Jacobi rule for `int_{-1}^{1} (1-x)^alpha f(x) dx`, `alpha > -1`.
///
/// Golub-Welsch on the monic Jacobi recurrence (beta = 0). Nodes ascending.
pub fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && alpha > -1.0);
    let a = alpha;
    let mu0 = 2f64.powf(a + 1.0) / (a + 1.0);
    let diag = |j: usize| -> f64 {
        if j == 0 {
            -a / (a + 2.0)
        } else {
            let jf = j as f64;
            -(a * a) / ((2.0 * jf + a) * (2.0 * jf + a + 2.0))
        }
    };
    let off = |j: usize| -> f64 {
        // b_j for j >= 1, appearing as sqrt on the off-diagonal
        let jf = j as f64;
        if j == 1 {
            4.0 * (a + 1.0) / ((a + 2.0) * (a + 2.0) * (a + 3.0))
        } else {
            4.0 * jf * (jf + a) * jf * (jf + a)
                / ((2.0 * jf + a).powi(2) * (2.0 * jf + a + 1.0) * (2.0 * jf + a - 1.0))
        }
    };
    let mut jm = DMatrix::zeros(n, n);
    for j in 0..n {
        jm[(j, j)] = diag(j);
        if j + 1 < n {
            let s = off(j + 1).sqrt();
            jm[(j, j + 1)] = s;
            jm[(j + 1, j)] = s;
        }
    }
    let eig = jm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let nodes: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let weights: Vec<f64> = order
        .iter()
        .map(|&i| mu0 * eig.eigenvectors[(0, i)] * eig.eigenvectors[(0, i)])
        .collect();
    (nodes, weights)
}

/// Gauss-Jacobi rule mapped so that `sum w_i f(e_i)` approximates
/// `int_a^b (b - e)^alpha f(e) de`; the singular factor sits at the upper end.
pub fn gauss_jacobi_upper(n: usize, alpha: f64, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_jacobi(n, alpha);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let scale = h.powf(alpha + 1.0);
    (
        x.iter().map(|&xi| c + h * xi).collect(),
        w.iter().map(|&wi| wi * scale).collect(),
    )
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is exact for an 8-point rule
        let val: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(14)).sum();
        assert_abs_diff_eq!(val, 2.0 / 15.0, epsilon = 1e-13);
        let s: f64 = w.iter().sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn legendre_mapped_interval() {
        let (x, w) = gauss_legendre_on(16, 0.0, 3.0);
        let val: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.exp()).sum();
        assert_abs_diff_eq!(val, 3f64.exp() - 1.0, epsilon = 1e-10);
    }

    #[test]
    fn jacobi_handles_endpoint_singularity() {
        // int_0^1 (1-e)^(-1/2) e de = 4/3
        let (x, w) = gauss_jacobi_upper(12, -0.5, 0.0, 1.0);
        let val: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi).sum();
        assert_abs_diff_eq!(val, 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_alpha_zero_matches_legendre() {
        let (xj, wj) = gauss_jacobi(6, 0.0);
        let (xl, wl) = gauss_legendre(6);
        for i in 0..6 {
            assert_abs_diff_eq!(xj[i], xl[i], epsilon = 1e-12);
            assert_abs_diff_eq!(wj[i], wl[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn adaptive_simpson_sqrt_endpoint() {
        let val = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-11);
        assert_abs_diff_eq!(val, 2.0 / 3.0, epsilon = 1e-9);
    }
}
