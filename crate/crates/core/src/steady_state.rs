//! Polytropic steady states: integrate the radial semilinear Poisson equation
//! in the variable `z(r) = e0 - U(r)` and package the resulting profile.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::interp::QuinticHermite;
use crate::potential::RadialPotential;

pub const K_MIN: f64 = -0.5;
pub const K_MAX: f64 = 3.5;

/// Parameters of a polytropic ansatz `Q(e) = (e0 - e)_+^k`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PolytropeParams {
    /// Polytrope exponent, in `(-1/2, 7/2)`.
    pub k: f64,
    /// Central value `z(0) = e0 - U(0)`, positive.
    pub kappa: f64,
    /// Relative/absolute integration tolerance.
    pub ode_tol: f64,
    /// Number of radial samples in the densified output grid.
    pub grid_points: usize,
}

impl PolytropeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > K_MIN && self.k < K_MAX) {
            return Err(Error::InvalidParams(format!(
                "polytrope exponent k = {} outside ]-1/2, 7/2[ (finite radius requires k < 7/2)",
                self.k
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParams(format!("kappa = {} must be > 0", self.kappa)));
        }
        if !(self.ode_tol > 0.0) {
            return Err(Error::InvalidParams(format!("ode_tol = {} must be > 0", self.ode_tol)));
        }
        if self.grid_points < 16 {
            return Err(Error::InvalidParams(format!(
                "grid_points = {} must be >= 16",
                self.grid_points
            )));
        }
        Ok(())
    }
}

/// `c_n = (2 pi)^{3/2} Gamma(k+1) / Gamma(k+5/2)` with `n = k + 3/2`.
pub fn polytrope_cn(k: f64) -> f64 {
    (2.0 * std::f64::consts::PI).powf(1.5) * gamma(k + 1.0) / gamma(k + 2.5)
}

/// A constructed polytropic steady state.
///
/// The serialized form is the documented profile schema; the interpolant is
/// rebuilt on deserialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "Profile", into = "Profile")]
pub struct SteadyState {
    pub k: f64,
    pub n: f64,
    pub c_n: f64,
    pub e0: f64,
    pub mass: f64,
    pub r_q: f64,
    pub u0: f64,
    pub r_grid: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub du: Vec<f64>,
    interp: QuinticHermite,
}

/// `U''` from the field equation itself: `U'' = -2 U'/r + 4 pi rho`, with the
/// centered limit `4 pi rho(0) / 3`. Exact at profile nodes, which buys a C^2
/// interpolant without widening the stored schema.
fn poisson_d2u(r: f64, du: f64, rho: f64) -> f64 {
    if r == 0.0 {
        4.0 * std::f64::consts::PI * rho / 3.0
    } else {
        -2.0 * du / r + 4.0 * std::f64::consts::PI * rho
    }
}

/// On-disk profile schema: `{k, n, c_n, e0, M, r_Q, r_grid[], U[], rho[], dU[]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    pub k: f64,
    pub n: f64,
    pub c_n: f64,
    pub e0: f64,
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "r_Q")]
    pub r_q: f64,
    pub r_grid: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    /// Exact `U'` samples; estimated by finite differences when absent.
    #[serde(rename = "dU", default)]
    pub du: Vec<f64>,
}

impl From<SteadyState> for Profile {
    fn from(s: SteadyState) -> Self {
        Profile {
            k: s.k,
            n: s.n,
            c_n: s.c_n,
            e0: s.e0,
            mass: s.mass,
            r_q: s.r_q,
            r_grid: s.r_grid,
            u: s.u,
            rho: s.rho,
            du: s.du,
        }
    }
}

impl From<Profile> for SteadyState {
    fn from(p: Profile) -> Self {
        let du = if p.du.len() == p.r_grid.len() {
            p.du.clone()
        } else {
            fd_slopes(&p.r_grid, &p.u)
        };
        let d2u: Vec<f64> = p
            .r_grid
            .iter()
            .zip(du.iter().zip(&p.rho))
            .map(|(&r, (&d, &rho))| poisson_d2u(r, d, rho))
            .collect();
        let interp = QuinticHermite::new(p.r_grid.clone(), p.u.clone(), du.clone(), d2u);
        SteadyState {
            k: p.k,
            n: p.n,
            c_n: p.c_n,
            e0: p.e0,
            mass: p.mass,
            r_q: p.r_q,
            u0: p.u[0],
            r_grid: p.r_grid,
            u: p.u,
            rho: p.rho,
            du,
            interp,
        }
    }
}

/// Three-point finite-difference slopes on a nonuniform grid.
fn fd_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut dy = vec![0.0; n];
    for i in 0..n {
        if i == 0 {
            dy[i] = (y[1] - y[0]) / (x[1] - x[0]);
        } else if i == n - 1 {
            dy[i] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
        } else {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            dy[i] = (h0 * h0 * y[i + 1] - h1 * h1 * y[i - 1] + (h1 * h1 - h0 * h0) * y[i])
                / (h0 * h1 * (h0 + h1));
        }
    }
    dy
}

impl SteadyState {
    /// `rho(r) = c_n (e0 - U(r))_+^n`, clamped to zero outside the support.
    pub fn rho_at(&self, r: f64) -> f64 {
        let z = self.e0 - self.u(r);
        if z <= 0.0 {
            0.0
        } else {
            self.c_n * z.powf(self.n)
        }
    }

    /// `|Q'(e)| = k (e0 - e)_+^{k-1}` together with a singularity flag.
    ///
    /// The flag is raised for `k < 1` when `e` is within a relative sliver of
    /// the cutoff; callers must then use weighted quadrature.
    pub fn q_prime_abs(&self, e: f64) -> (f64, bool) {
        let z = self.e0 - e;
        if z <= 0.0 {
            let val = if self.k > 1.0 {
                0.0
            } else if self.k == 1.0 {
                1.0
            } else {
                f64::INFINITY
            };
            return (val, self.k < 1.0);
        }
        let singular = self.k < 1.0 && z < 1e-10 * (self.e0 - self.u0).abs();
        (self.k * z.powf(self.k - 1.0), singular)
    }
}

impl RadialPotential for SteadyState {
    fn u(&self, r: f64) -> f64 {
        if r >= self.r_q {
            -self.mass / r
        } else {
            self.interp.eval(r).0
        }
    }

    fn du(&self, r: f64) -> f64 {
        if r >= self.r_q {
            self.mass / (r * r)
        } else {
            self.interp.eval(r).1
        }
    }

    fn d2u(&self, r: f64) -> f64 {
        if r >= self.r_q {
            -2.0 * self.mass / (r * r * r)
        } else {
            self.interp.eval(r).2
        }
    }

    fn cutoff(&self) -> Option<f64> {
        Some(self.e0)
    }

    fn support_radius(&self) -> Option<f64> {
        Some(self.r_q)
    }
}

/// Construct a polytrope by center-outward integration of
/// `z'' + (2/r) z' = -4 pi c_n z_+^n`, `z(0) = kappa`, `z'(0) = 0`.
///
/// The z-equation is autonomous in `e0`, so no shooting loop is needed:
/// after the first zero `r_Q` of `z`, the identities `M = -r_Q^2 z'(r_Q)` and
/// `e0 = -M/r_Q` close the construction.
pub fn build_polytrope(params: &PolytropeParams) -> Result<SteadyState> {
    params.validate()?;
    let k = params.k;
    let n = k + 1.5;
    let c_n = polytrope_cn(k);
    let kappa = params.kappa;
    let tol = params.ode_tol;

    let len_scale = kappa.powf(0.5 * (1.0 - n));
    let eps = 1e-6 * len_scale;
    let r_max = 1e4 * len_scale.max(1.0);

    // Taylor start away from the coordinate singularity of the (2/r) z' term
    let zc = 4.0 * std::f64::consts::PI * c_n * kappa.powf(n);
    let mut r = eps;
    let mut z = kappa - zc * eps * eps / 6.0;
    let mut w = -zc * eps / 3.0;

    let rhs = |r: f64, z: f64, w: f64| -> (f64, f64) {
        let zp = if z > 0.0 { z.powf(n) } else { 0.0 };
        (w, -2.0 / r * w - 4.0 * std::f64::consts::PI * c_n * zp)
    };

    let mut out_r = vec![0.0, r];
    let mut out_z = vec![kappa, z];
    let mut out_w = vec![0.0, w];

    let mut h = 1e-3 * len_scale;
    let mut n_steps = 0usize;
    let (r_q, w_q) = loop {
        n_steps += 1;
        if n_steps > 2_000_000 {
            return Err(Error::IntegratorFailure("step budget exhausted".into()));
        }
        if r > r_max {
            return Err(Error::NoCutoffFound { r_max });
        }
        let ((z1, w1), err) = rkf45_step(&rhs, r, z, w, h);
        let scale_z = tol * (kappa + z.abs());
        let scale_w = tol * (kappa / len_scale + w.abs());
        let err_norm = (err.0.abs() / scale_z).max(err.1.abs() / scale_w);
        if err_norm > 1.0 {
            h *= (0.9 * err_norm.powf(-0.2)).max(0.2);
            if h < 1e-15 * len_scale {
                return Err(Error::IntegratorFailure("step size underflow".into()));
            }
            continue;
        }
        if z1 <= 0.0 {
            // bisect on the step length; each trial is one embedded step
            let mut lo = 0.0;
            let mut hi = h;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let ((zm, _), _) = rkf45_step(&rhs, r, z, w, mid);
                if zm > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-16 * (r + h) {
                    break;
                }
            }
            let h_star = 0.5 * (lo + hi);
            let ((_, w_star), _) = rkf45_step(&rhs, r, z, w, h_star);
            break (r + h_star, w_star);
        }
        r += h;
        z = z1;
        w = w1;
        out_r.push(r);
        out_z.push(z);
        out_w.push(w);
        h *= (0.9 * err_norm.max(1e-4).powf(-0.2)).min(5.0);
    };

    out_r.push(r_q);
    out_z.push(0.0);
    out_w.push(w_q);

    if w_q >= 0.0 {
        return Err(Error::IntegratorFailure(format!(
            "nonnegative z'(r_Q) = {w_q}; profile not decreasing"
        )));
    }

    let mass = -r_q * r_q * w_q;
    let e0 = -mass / r_q;
    let u0 = e0 - kappa;

    // raw interpolant on the adaptive output, in U = e0 - z
    let u_raw: Vec<f64> = out_z.iter().map(|&zi| e0 - zi).collect();
    let du_raw: Vec<f64> = out_w.iter().map(|&wi| -wi).collect();
    let d2u_raw: Vec<f64> = out_r
        .iter()
        .zip(du_raw.iter().zip(&out_z))
        .map(|(&ri, (&di, &zi))| {
            let rho = if zi > 0.0 { c_n * zi.powf(n) } else { 0.0 };
            poisson_d2u(ri, di, rho)
        })
        .collect();
    let raw = QuinticHermite::new(out_r.clone(), u_raw.clone(), du_raw.clone(), d2u_raw);

    // densify to grid_points by arc length in (r, U)
    let mut arc = vec![0.0];
    for i in 1..out_r.len() {
        let dr = out_r[i] - out_r[i - 1];
        let duv = u_raw[i] - u_raw[i - 1];
        arc.push(arc[i - 1] + (dr * dr + duv * duv).sqrt());
    }
    let total = *arc.last().unwrap();
    let np = params.grid_points.max(out_r.len());
    let mut r_grid = Vec::with_capacity(np);
    let mut j = 0usize;
    for i in 0..np {
        let s = total * i as f64 / (np - 1) as f64;
        while j + 1 < arc.len() && arc[j + 1] < s {
            j += 1;
        }
        let ri = if j + 1 >= arc.len() {
            r_q
        } else {
            let t = (s - arc[j]) / (arc[j + 1] - arc[j]).max(1e-300);
            out_r[j] + t * (out_r[j + 1] - out_r[j])
        };
        r_grid.push(ri);
    }
    r_grid[0] = 0.0;
    *r_grid.last_mut().unwrap() = r_q;
    r_grid.dedup_by(|a, b| *a <= *b + 1e-15 * r_q);

    let mut u = Vec::with_capacity(r_grid.len());
    let mut du = Vec::with_capacity(r_grid.len());
    let mut rho = Vec::with_capacity(r_grid.len());
    for &ri in &r_grid {
        let (ui, dui, _) = raw.eval(ri);
        u.push(ui);
        du.push(dui);
        let z = e0 - ui;
        rho.push(if z > 0.0 { c_n * z.powf(n) } else { 0.0 });
    }
    let d2u: Vec<f64> = r_grid
        .iter()
        .zip(du.iter().zip(&rho))
        .map(|(&ri, (&di, &rhoi))| poisson_d2u(ri, di, rhoi))
        .collect();
    let interp = QuinticHermite::new(r_grid.clone(), u.clone(), du.clone(), d2u);

    Ok(SteadyState {
        k,
        n,
        c_n,
        e0,
        mass,
        r_q,
        u0,
        r_grid,
        u,
        rho,
        du,
        interp,
    })
}

/// One Runge-Kutta-Fehlberg 4(5) step; returns the 5th-order solution and the
/// embedded error estimate.
fn rkf45_step<F: Fn(f64, f64, f64) -> (f64, f64)>(
    f: &F,
    r: f64,
    z: f64,
    w: f64,
    h: f64,
) -> ((f64, f64), (f64, f64)) {
    let k1 = f(r, z, w);
    let k2 = f(r + 0.25 * h, z + h * 0.25 * k1.0, w + h * 0.25 * k1.1);
    let k3 = f(
        r + 0.375 * h,
        z + h * (3.0 / 32.0 * k1.0 + 9.0 / 32.0 * k2.0),
        w + h * (3.0 / 32.0 * k1.1 + 9.0 / 32.0 * k2.1),
    );
    let k4 = f(
        r + 12.0 / 13.0 * h,
        z + h * (1932.0 / 2197.0 * k1.0 - 7200.0 / 2197.0 * k2.0 + 7296.0 / 2197.0 * k3.0),
        w + h * (1932.0 / 2197.0 * k1.1 - 7200.0 / 2197.0 * k2.1 + 7296.0 / 2197.0 * k3.1),
    );
    let k5 = f(
        r + h,
        z + h * (439.0 / 216.0 * k1.0 - 8.0 * k2.0 + 3680.0 / 513.0 * k3.0 - 845.0 / 4104.0 * k4.0),
        w + h * (439.0 / 216.0 * k1.1 - 8.0 * k2.1 + 3680.0 / 513.0 * k3.1 - 845.0 / 4104.0 * k4.1),
    );
    let k6 = f(
        r + 0.5 * h,
        z + h
            * (-8.0 / 27.0 * k1.0 + 2.0 * k2.0 - 3544.0 / 2565.0 * k3.0 + 1859.0 / 4104.0 * k4.0
                - 11.0 / 40.0 * k5.0),
        w + h
            * (-8.0 / 27.0 * k1.1 + 2.0 * k2.1 - 3544.0 / 2565.0 * k3.1 + 1859.0 / 4104.0 * k4.1
                - 11.0 / 40.0 * k5.1),
    );
    let z5 = z + h
        * (16.0 / 135.0 * k1.0 + 6656.0 / 12825.0 * k3.0 + 28561.0 / 56430.0 * k4.0
            - 9.0 / 50.0 * k5.0
            + 2.0 / 55.0 * k6.0);
    let w5 = w + h
        * (16.0 / 135.0 * k1.1 + 6656.0 / 12825.0 * k3.1 + 28561.0 / 56430.0 * k4.1
            - 9.0 / 50.0 * k5.1
            + 2.0 / 55.0 * k6.1);
    let z4 = z + h
        * (25.0 / 216.0 * k1.0 + 1408.0 / 2565.0 * k3.0 + 2197.0 / 4104.0 * k4.0
            - 1.0 / 5.0 * k5.0);
    let w4 = w + h
        * (25.0 / 216.0 * k1.1 + 1408.0 / 2565.0 * k3.1 + 2197.0 / 4104.0 * k4.1
            - 1.0 / 5.0 * k5.1);
    ((z5, w5), (z5 - z4, w5 - w4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use approx::assert_abs_diff_eq;

    fn params(k: f64) -> PolytropeParams {
        PolytropeParams { k, kappa: 1.0, ode_tol: 1e-10, grid_points: 400 }
    }

    #[test]
    fn cn_matches_gamma_expression_for_k1() {
        // Gamma(2) = 1, Gamma(7/2) = 15 sqrt(pi) / 8
        let exact = (2.0 * std::f64::consts::PI).powf(1.5)
            / (15.0 * std::f64::consts::PI.sqrt() / 8.0);
        assert_abs_diff_eq!(polytrope_cn(1.0), exact, epsilon = 1e-12);
        assert_abs_diff_eq!(polytrope_cn(1.0), 4.7391, epsilon = 1e-4);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(build_polytrope(&PolytropeParams { k: 3.6, ..params(1.0) }).is_err());
        assert!(build_polytrope(&PolytropeParams { k: -0.5, ..params(1.0) }).is_err());
        assert!(build_polytrope(&PolytropeParams { kappa: -1.0, ..params(1.0) }).is_err());
        assert!(build_polytrope(&PolytropeParams { grid_points: 8, ..params(1.0) }).is_err());
    }

    #[test]
    fn basic_structure_k1() {
        let s = build_polytrope(&params(1.0)).unwrap();
        assert!(s.r_q > 0.0 && s.mass > 0.0);
        assert!(s.e0 < 0.0 && s.u0 < s.e0);
        // exterior matching is definitional
        assert_abs_diff_eq!(s.e0, -s.mass / s.r_q, epsilon = 1e-14);
        // monotone potential, decreasing density
        for w in s.u.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in s.rho.windows(2) {
            assert!(w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
        }
        // flat center
        assert!(s.du(1e-8 * s.r_q).abs() < 1e-6 * s.mass / (s.r_q * s.r_q));
    }

    #[test]
    fn rho_self_consistency_and_support() {
        let s = build_polytrope(&params(1.5)).unwrap();
        assert_abs_diff_eq!(s.rho_at(0.0), s.c_n * 1.0f64.powf(s.n), epsilon = 1e-8);
        assert_eq!(s.rho_at(s.r_q), 0.0);
        assert_eq!(s.rho_at(2.0 * s.r_q), 0.0);
        for (i, _) in s.r_grid.iter().enumerate() {
            let z = s.e0 - s.u[i];
            let expect = if z > 0.0 { s.c_n * z.powf(s.n) } else { 0.0 };
            assert_abs_diff_eq!(s.rho[i], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn mass_quadrature_matches_exterior_matching() {
        for k in [1.0, 2.5] {
            let s = build_polytrope(&params(k)).unwrap();
            let m_quad = 4.0
                * std::f64::consts::PI
                * adaptive_simpson(&|r| r * r * s.rho_at(r), 0.0, s.r_q, 1e-12 * s.mass);
            assert_abs_diff_eq!(m_quad / s.mass, 1.0, epsilon = 1e-7);
        }
    }

    #[test]
    fn poisson_consistency_on_grid() {
        let s = build_polytrope(&params(1.0)).unwrap();
        for &r in s.r_grid.iter().skip(1).step_by(37) {
            let lhs = s.du(r);
            let rhs = 4.0 * std::f64::consts::PI / (r * r)
                * adaptive_simpson(&|x| x * x * s.rho_at(x), 0.0, r, 1e-13);
            // tolerance reflects Hermite interpolation error between ODE nodes
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-5 * s.mass / (s.r_q * s.r_q));
        }
    }

    #[test]
    fn exterior_is_kepler() {
        let s = build_polytrope(&params(1.0)).unwrap();
        for t in [1.0, 1.3, 1.7, 2.0] {
            let r = t * s.r_q;
            assert_abs_diff_eq!(s.u(r), -s.mass / r, epsilon = 1e-10);
        }
    }

    #[test]
    fn refinement_convergence() {
        let coarse = build_polytrope(&PolytropeParams { ode_tol: 2e-8, ..params(1.0) }).unwrap();
        let fine = build_polytrope(&PolytropeParams { ode_tol: 1e-8, ..params(1.0) }).unwrap();
        for (a, b) in [
            (coarse.mass, fine.mass),
            (coarse.r_q, fine.r_q),
            (coarse.e0, fine.e0),
        ] {
            assert!(((a - b) / b).abs() < 10.0 * 2e-8);
        }
    }

    #[test]
    fn kappa_scan_is_monotone() {
        let builds: Vec<_> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&kappa| build_polytrope(&PolytropeParams { kappa, ..params(1.0) }).unwrap())
            .collect();
        assert!(builds[0].mass < builds[1].mass && builds[1].mass < builds[2].mass);
        // larger kappa -> more compact configuration for k = 1
        assert!(builds[0].r_q > builds[1].r_q && builds[1].r_q > builds[2].r_q);
    }

    #[test]
    fn q_prime_values() {
        let s = build_polytrope(&params(1.0)).unwrap();
        let (v, flag) = s.q_prime_abs(s.e0 - 0.1);
        assert_abs_diff_eq!(v, 1.0);
        assert!(!flag);

        let s2 = build_polytrope(&params(2.0)).unwrap();
        let (v2, _) = s2.q_prime_abs(s2.e0 - 0.25);
        assert_abs_diff_eq!(v2, 0.5);
        assert_eq!(s2.q_prime_abs(s2.e0).0, 0.0);

        let s3 = build_polytrope(&params(0.5)).unwrap();
        let (_, singular) = s3.q_prime_abs(s3.e0 - 1e-14);
        assert!(singular);
    }

    #[test]
    fn profile_round_trip() {
        let s = build_polytrope(&params(1.0)).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: SteadyState = serde_json::from_str(&json).unwrap();
        assert_abs_diff_eq!(back.mass, s.mass, epsilon = 1e-14);
        assert_abs_diff_eq!(back.u(0.5 * s.r_q), s.u(0.5 * s.r_q), epsilon = 1e-13);
        assert_abs_diff_eq!(back.du(0.5 * s.r_q), s.du(0.5 * s.r_q), epsilon = 1e-13);
    }
}
