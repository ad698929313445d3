//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Find the root of `f` on `[lo, hi]`, where `f(lo)` and `f(hi)` must differ
/// in sign (or one of them vanish). Bisection with secant acceleration,
/// iterated to relative tolerance `rel_tol` on the abscissa.
pub fn bracketed_root<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    context: &'static str,
) -> Result<f64> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailure { context, lo, hi });
    }
    for _ in 0..200 {
        let scale = a.abs().max(b.abs()).max(1e-300);
        if (b - a).abs() <= rel_tol * scale {
            break;
        }
        // secant candidate, clipped away from the bracket ends
        let mut x = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        if !x.is_finite() || x <= a || x >= b {
            x = mid;
        }
        // alternate with bisection so the bracket provably shrinks
        if (x - a).min(b - x) < 0.01 * (b - a) {
            x = mid;
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section minimization of `f` on `[a, b]` to abscissa tolerance `tol`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut a = a;
    let mut b = b;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
