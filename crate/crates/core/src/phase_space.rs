//! Phase-space function representation and the operators acting on it.
//!
//! A function on the orbit domain is stored as Fourier coefficients in the
//! angle variable, one coefficient block per quadrature node of the
//! [`DomainGrid`]. The transport operator acts diagonally in this basis; the
//! gravitational response couples blocks through a shared radial quadrature
//! and the precomputed angle table.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orbits::{theta_at_many, DomainGrid};
use crate::potential::RadialPotential;
use crate::quad::gauss_legendre_on;

/// Angle-Fourier coefficients `g_k(a)` for `k = -k_max ..= k_max` on every
/// domain node `a`.
#[derive(Debug, Clone)]
pub struct FourierFunction {
    pub n_nodes: usize,
    pub k_max: usize,
    pub coeffs: Vec<Complex64>,
}

impl FourierFunction {
    pub fn zeros(n_nodes: usize, k_max: usize) -> Self {
        Self { n_nodes, k_max, coeffs: vec![Complex64::ZERO; n_nodes * (2 * k_max + 1)] }
    }

    #[inline]
    pub fn idx(&self, a: usize, k: i32) -> usize {
        debug_assert!(k.unsigned_abs() as usize <= self.k_max);
        a * (2 * self.k_max + 1) + (k + self.k_max as i32) as usize
    }

    #[inline]
    pub fn get(&self, a: usize, k: i32) -> Complex64 {
        self.coeffs[self.idx(a, k)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, k: i32, v: Complex64) {
        let i = self.idx(a, k);
        self.coeffs[i] = v;
    }

    /// Projects onto real odd functions of the angle: `g_{-k} = -g_k`,
    /// `g_0 = 0`, purely imaginary coefficients.
    pub fn project_odd(&mut self) {
        for a in 0..self.n_nodes {
            self.set(a, 0, Complex64::ZERO);
            for k in 1..=self.k_max as i32 {
                let v = 0.5 * (self.get(a, k) - self.get(a, -k));
                let v = Complex64::new(0.0, v.im);
                self.set(a, k, v);
                self.set(a, -k, -v);
            }
        }
    }

    /// Seeded random real odd function, band-limited to `|k| <= band`.
    pub fn random_odd(n_nodes: usize, k_max: usize, band: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Self::zeros(n_nodes, k_max);
        for a in 0..n_nodes {
            for k in 1..=band.min(k_max) as i32 {
                let v = Complex64::new(0.0, rng.gen::<f64>() - 0.5);
                g.set(a, k, v);
                g.set(a, -k, -v);
            }
        }
        g
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }
}

/// Transport operator in action-angle form: `(Tg)_k = i k omega1 g_k`.
pub fn apply_t(g: &FourierFunction, grid: &DomainGrid) -> FourierFunction {
    let mut out = g.clone();
    for (a, nd) in grid.nodes.iter().enumerate() {
        for k in -(g.k_max as i32)..=(g.k_max as i32) {
            let v = g.get(a, k) * Complex64::new(0.0, k as f64 * nd.omega1);
            out.set(a, k, v);
        }
    }
    out
}

/// Resolvent of `-T^2` on odd functions: divides by `k^2 omega1^2 - lambda`.
///
/// Fails with [`Error::SpectrumHit`] when `lambda` reaches the essential band.
pub fn resolvent(g: &FourierFunction, grid: &DomainGrid, lambda: f64) -> Result<FourierFunction> {
    let mut out = FourierFunction::zeros(g.n_nodes, g.k_max);
    for (a, nd) in grid.nodes.iter().enumerate() {
        for k in 1..=g.k_max as i32 {
            let denom = (k as f64 * nd.omega1).powi(2) - lambda;
            if denom <= 0.0 {
                return Err(Error::SpectrumHit { lambda });
            }
            out.set(a, k, g.get(a, k) / denom);
            out.set(a, -k, g.get(a, -k) / denom);
        }
    }
    Ok(out)
}

/// Weighted inner product `(f, g)_Q`, conjugate-linear in the first slot.
pub fn q_inner(f: &FourierFunction, g: &FourierFunction, grid: &DomainGrid) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for (a, nd) in grid.nodes.iter().enumerate() {
        let fac = nd.weight / (nd.omega1 * nd.q_prime);
        for k in -(f.k_max as i32)..=(f.k_max as i32) {
            acc += fac * f.get(a, k).conj() * g.get(a, k);
        }
    }
    16.0 * std::f64::consts::PI.powi(3) * acc
}

/// `||g||_Q^2`.
pub fn q_norm_sq(g: &FourierFunction, grid: &DomainGrid) -> f64 {
    q_inner(g, g, grid).re
}

/// `||T g||_Q^2`, computed diagonally.
pub fn t_norm_sq(g: &FourierFunction, grid: &DomainGrid) -> f64 {
    let mut acc = 0.0;
    for (a, nd) in grid.nodes.iter().enumerate() {
        let fac = nd.weight / (nd.omega1 * nd.q_prime);
        for k in 1..=g.k_max as i32 {
            let kw = (k as f64 * nd.omega1).powi(2);
            acc += fac * kw * (g.get(a, k).norm_sqr() + g.get(a, -k).norm_sqr());
        }
    }
    16.0 * std::f64::consts::PI.powi(3) * acc
}

/// One radial quadrature point inside an orbit.
#[derive(Debug, Clone)]
pub struct RadialEntry {
    pub j: usize,
    pub theta: f64,
    /// `sin(k theta)` for `k = 1..=k_max`.
    pub sin_k: Vec<f64>,
}

/// Precomputed angle table: a shared radial Gauss rule plus, per domain node,
/// the angle variable at every radial node inside that orbit.
///
/// Everything lambda-independent in the response operators lives here, so the
/// Nystrom assembly, the Galerkin matrix and the flow all consume the same
/// discretization.
#[derive(Debug, Clone)]
pub struct ThetaTable {
    pub k_max: usize,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub entries: Vec<Vec<RadialEntry>>,
}

impl ThetaTable {
    pub fn build(
        pot: &dyn RadialPotential,
        grid: &DomainGrid,
        k_max: usize,
        n_r: usize,
    ) -> Result<Self> {
        let r_max = grid
            .nodes
            .iter()
            .map(|n| n.r_plus)
            .fold(0.0f64, f64::max);
        let (r, w) = gauss_legendre_on(n_r, 0.0, r_max);
        let entries: Vec<Vec<RadialEntry>> = grid
            .nodes
            .par_iter()
            .map(|nd| {
                let inside: Vec<usize> = (0..n_r)
                    .filter(|&j| r[j] > nd.r_minus && r[j] < nd.r_plus)
                    .collect();
                let rs: Vec<f64> = inside.iter().map(|&j| r[j]).collect();
                let thetas = theta_at_many(pot, nd.e, nd.ell, &rs)?;
                Ok(inside
                    .into_iter()
                    .zip(thetas)
                    .map(|(j, theta)| RadialEntry {
                        j,
                        theta,
                        sin_k: (1..=k_max).map(|k| (k as f64 * theta).sin()).collect(),
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { k_max, r, w, entries })
    }
}

/// Gravitational response field: radial derivative `U_g'(r_j)` of the
/// potential sourced by the phase-space function `g`.
pub fn u_prime_from_g(
    table: &ThetaTable,
    grid: &DomainGrid,
    g: &FourierFunction,
) -> Vec<Complex64> {
    let mut acc = vec![Complex64::ZERO; table.r.len()];
    for (a, nd) in grid.nodes.iter().enumerate() {
        for entry in &table.entries[a] {
            let mut s = Complex64::ZERO;
            for k in 1..=table.k_max.min(g.k_max) as i32 {
                s += (g.get(a, k) - g.get(a, -k)) * entry.sin_k[(k - 1) as usize];
            }
            acc[entry.j] += nd.weight * s;
        }
    }
    let pref = 16.0 * std::f64::consts::PI.powi(2);
    acc.iter()
        .zip(&table.r)
        .map(|(&v, &rj)| Complex64::new(0.0, 1.0) * pref * v / (rj * rj))
        .collect()
}

/// Adjoint of [`u_prime_from_g`] (up to the factor `4 pi` in the pairing):
/// lifts radial samples `psi(r_j)` to angle-Fourier coefficients.
pub fn psi_coeffs_from_radial(
    table: &ThetaTable,
    grid: &DomainGrid,
    psi: &[Complex64],
) -> FourierFunction {
    let mut out = FourierFunction::zeros(grid.nodes.len(), table.k_max);
    for (a, nd) in grid.nodes.iter().enumerate() {
        for k in 1..=table.k_max {
            let mut p = Complex64::ZERO;
            for entry in &table.entries[a] {
                p += table.w[entry.j] * psi[entry.j] * entry.sin_k[k - 1];
            }
            let v = -Complex64::new(0.0, 1.0) / std::f64::consts::PI
                * nd.q_prime
                * nd.omega1
                * p;
            out.set(a, k as i32, v);
            out.set(a, -(k as i32), -v);
        }
    }
    out
}

/// Orbit-local projection `P_k = int_{r_-}^{r_+} psi(r) sin(k theta(r)) dr`
/// for `k = 1..=k_max`, by a converging Gauss rule in the Chebyshev angle.
///
/// Quadrature-grid-free; used to cross-check the radial-grid route.
pub fn orbit_projection(
    pot: &dyn RadialPotential,
    e: f64,
    ell: f64,
    k_max: usize,
    psi: &dyn Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let (r_minus, r_plus) = crate::orbits::turning_points(pot, e, ell)?;
    let c = 0.5 * (r_plus + r_minus);
    let h = 0.5 * (r_plus - r_minus);
    let eval = |n: usize| -> Result<Vec<f64>> {
        let (ps, ws) = gauss_legendre_on(n, 0.0, std::f64::consts::PI);
        let rs: Vec<f64> = ps.iter().map(|&phi| c + h * phi.cos()).collect();
        let thetas = theta_at_many(pot, e, ell, &rs)?;
        let mut out = vec![0.0; k_max];
        for ((&phi, &wq), (&r, &theta)) in
            ps.iter().zip(&ws).zip(rs.iter().zip(&thetas))
        {
            let base = wq * psi(r) * h * phi.sin();
            for (k, o) in out.iter_mut().enumerate() {
                *o += base * ((k + 1) as f64 * theta).sin();
            }
        }
        Ok(out)
    };
    let mut n = 32;
    let mut prev = eval(n)?;
    loop {
        n *= 2;
        let cur = eval(n)?;
        let change = cur
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let scale = cur.iter().map(|v| v.abs()).fold(1e-300, f64::max);
        if change <= 1e-10 * scale || n >= 1 << 12 {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// Full projection operator via per-orbit quadrature rather than the shared
/// radial grid: `psi_k(a) = -(i/pi) |Q'| omega1 P_k(a)`.
pub fn psi_coeffs_spectral(
    pot: &dyn RadialPotential,
    grid: &DomainGrid,
    k_max: usize,
    psi: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<FourierFunction> {
    let rows: Vec<Vec<f64>> = grid
        .nodes
        .par_iter()
        .map(|nd| orbit_projection(pot, nd.e, nd.ell, k_max, &psi))
        .collect::<Result<_>>()?;
    let mut out = FourierFunction::zeros(grid.nodes.len(), k_max);
    for (a, (nd, p)) in grid.nodes.iter().zip(&rows).enumerate() {
        for k in 1..=k_max {
            let v = -Complex64::new(0.0, 1.0) / std::f64::consts::PI
                * nd.q_prime
                * nd.omega1
                * p[k - 1];
            out.set(a, k as i32, v);
            out.set(a, -(k as i32), -v);
        }
    }
    Ok(out)
}

/// The compact part of the linearized operator: `KT g = A(B(g))`, the lift of
/// the gravitational response back to phase space.
pub fn apply_kt(table: &ThetaTable, grid: &DomainGrid, g: &FourierFunction) -> FourierFunction {
    let u = u_prime_from_g(table, grid, g);
    psi_coeffs_from_radial(table, grid, &u)
}

/// Full linearized operator `L g = -T^2 g - KT g` in the angle-Fourier basis.
pub fn apply_l(table: &ThetaTable, grid: &DomainGrid, g: &FourierFunction) -> FourierFunction {
    let mut out = apply_kt(table, grid, g);
    for (a, nd) in grid.nodes.iter().enumerate() {
        for k in -(g.k_max as i32)..=(g.k_max as i32) {
            let kw = (k as f64 * nd.omega1).powi(2);
            let v = kw * g.get(a, k) - out.get(a, k);
            out.set(a, k, v);
        }
    }
    out
}

/// `<u, v>` on the radial grid: `4 pi sum_j w_j r_j^2 conj(u_j) v_j`.
pub fn radial_inner(table: &ThetaTable, u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for j in 0..table.r.len() {
        acc += table.w[j] * table.r[j] * table.r[j] * u[j].conj() * v[j];
    }
    4.0 * std::f64::consts::PI * acc
}
