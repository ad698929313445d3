//! Cubic Hermite interpolation on an ascending grid with stored derivatives.

/// C^1 piecewise-cubic interpolant built from samples and exact derivatives.
///
/// With monotone data and consistent slopes (the ODE integrator supplies both)
/// the interpolant preserves monotonicity in practice.
#[derive(Debug, Clone)]
pub struct CubicHermite {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl CubicHermite {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && x.len() == dy.len());
        assert!(x.windows(2).all(|w| w[0] < w[1]), "grid must be ascending");
        Self { x, y, dy }
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.clamp(1, self.x.len() - 1) - 1,
        }
    }

    /// Interpolated value and derivative at `x` (clamped to the grid range).
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let x = x.clamp(self.x_min(), self.x_max());
        let i = self.segment(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.dy[i] * h, self.dy[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dval = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (val, dval)
    }
}

/// C^2 piecewise-quintic interpolant from samples, first and second
/// derivatives. Used for the steady-state potential, where the orbit
/// quadratures need a continuous curvature to converge past ~1e-9.
#[derive(Debug, Clone)]
pub struct QuinticHermite {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
    d2y: Vec<f64>,
}

impl QuinticHermite {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>, d2y: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && x.len() == dy.len() && x.len() == d2y.len());
        assert!(x.windows(2).all(|w| w[0] < w[1]), "grid must be ascending");
        Self { x, y, dy, d2y }
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.clamp(1, self.x.len() - 1) - 1,
        }
    }

    /// Value, first and second derivative at `x` (clamped to the grid range).
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let x = x.clamp(self.x_min(), self.x_max());
        let i = self.segment(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let c = [
            self.y[i],
            self.dy[i] * h,
            self.d2y[i] * h * h,
            self.y[i + 1],
            self.dy[i + 1] * h,
            self.d2y[i + 1] * h * h,
        ];
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let b = [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            0.5 * t3 - t4 + 0.5 * t5,
        ];
        let db = [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            1.5 * t2 - 4.0 * t3 + 2.5 * t4,
        ];
        let d2b = [
            -60.0 * t + 180.0 * t2 - 120.0 * t3,
            -36.0 * t + 96.0 * t2 - 60.0 * t3,
            1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
            60.0 * t - 180.0 * t2 + 120.0 * t3,
            -24.0 * t + 84.0 * t2 - 60.0 * t3,
            3.0 * t - 12.0 * t2 + 10.0 * t3,
        ];
        let dot = |basis: &[f64; 6]| -> f64 { basis.iter().zip(&c).map(|(bi, ci)| bi * ci).sum() };
        (dot(&b), dot(&db) / h, dot(&d2b) / (h * h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quintic_reproduces_quintic_exactly() {
        let f = |x: f64| x.powi(5) - 2.0 * x.powi(3) + x - 4.0;
        let df = |x: f64| 5.0 * x.powi(4) - 6.0 * x * x + 1.0;
        let d2f = |x: f64| 20.0 * x.powi(3) - 12.0 * x;
        let xs: Vec<f64> = (0..7).map(|i| i as f64 * 0.4).collect();
        let q = QuinticHermite::new(
            xs.clone(),
            xs.iter().map(|&x| f(x)).collect(),
            xs.iter().map(|&x| df(x)).collect(),
            xs.iter().map(|&x| d2f(x)).collect(),
        );
        for &x in &[0.13, 0.91, 1.77, 2.2] {
            let (v, d, d2) = q.eval(x);
            assert_abs_diff_eq!(v, f(x), epsilon = 1e-10);
            assert_abs_diff_eq!(d, df(x), epsilon = 1e-9);
            assert_abs_diff_eq!(d2, d2f(x), epsilon = 1e-8);
        }
    }

    #[test]
    fn reproduces_cubic_exactly() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let dys: Vec<f64> = xs.iter().map(|&x| df(x)).collect();
        let h = CubicHermite::new(xs, ys, dys);
        for &x in &[0.11, 0.77, 1.5, 2.93] {
            let (v, d) = h.eval(x);
            assert_abs_diff_eq!(v, f(x), epsilon = 1e-12);
            assert_abs_diff_eq!(d, df(x), epsilon = 1e-11);
        }
    }

    #[test]
    fn clamps_outside_range() {
        let h = CubicHermite::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0]);
        assert_abs_diff_eq!(h.eval(-5.0).0, 0.0);
        assert_abs_diff_eq!(h.eval(5.0).0, 1.0);
    }
}
