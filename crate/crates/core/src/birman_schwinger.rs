//! Birman-Schwinger reduction of the eigenvalue problem for the linearized
//! operator `L = -T^2 - KT`.
//!
//! Below the essential spectrum, `L g = lambda g` is equivalent to the compact
//! radial operator `Q_lambda = B (-T^2 - lambda)^{-1} A` having eigenvalue 1;
//! its top eigenvalue `mu_1(lambda)` is continuous and increasing, so the
//! lowest eigenvalue of `L` is the first root of `mu_1(lambda) = 1`. The
//! discretization here shares its grid, angle table and radial rule with the
//! Galerkin matrix and the gradient flow, which makes the three routes agree
//! to solver tolerance rather than discretization error.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::orbits::DomainGrid;
use crate::phase_space::{
    apply_l, psi_coeffs_from_radial, q_norm_sq, resolvent, FourierFunction, ThetaTable,
};
use crate::roots::bracketed_root;

/// Relative margin kept between the bisection interval and the bottom of the
/// essential spectrum.
pub const BAND_MARGIN: f64 = 1e-4;

/// Symmetrized Nystrom matrix of `Q_lambda` on the shared radial rule.
///
/// Assembled by rank-one updates, one per (domain node, Fourier mode) pair;
/// everything except the `1/(k^2 omega1^2 - lambda)` factor is precomputed in
/// the angle table.
pub fn assemble_bs_matrix(
    table: &ThetaTable,
    grid: &DomainGrid,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    let n = table.r.len();
    let mut s = DMatrix::<f64>::zeros(n, n);
    let sqrt_pi4 = (4.0 * std::f64::consts::PI).sqrt();
    let mut u = vec![0.0f64; n];
    for (a, nd) in grid.nodes.iter().enumerate() {
        if table.entries[a].is_empty() {
            continue;
        }
        for k in 1..=table.k_max {
            let denom = (k as f64 * nd.omega1).powi(2) - lambda;
            if denom <= 0.0 {
                return Err(Error::SpectrumHit { lambda });
            }
            // the factor 2 collects the +-k pair
            let c = 2.0 * nd.weight * nd.omega1 * nd.q_prime / denom;
            for e in &table.entries[a] {
                u[e.j] = 2.0 * sqrt_pi4 * table.w[e.j].sqrt() * e.sin_k[k - 1] / table.r[e.j];
            }
            for ei in &table.entries[a] {
                let cu = c * u[ei.j];
                for ej in &table.entries[a] {
                    s[(ei.j, ej.j)] += cu * u[ej.j];
                }
            }
            for e in &table.entries[a] {
                u[e.j] = 0.0;
            }
        }
    }
    Ok(s)
}

/// Eigenvalues of a symmetric matrix, sorted descending, with the top pair
/// validated by a residual check and a power iteration.
pub fn mu_spectrum(s: &DMatrix<f64>) -> Result<Vec<f64>> {
    let eig = s.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let top = vals[0];
    let v = eig.eigenvectors.column(order[0]).into_owned();
    let res = (s * &v - top * &v).norm();
    let scale = top.abs().max(1.0);
    if res > 1e-8 * scale {
        return Err(Error::EigenFailure(format!(
            "top eigenpair residual {res:e} exceeds tolerance"
        )));
    }
    // independent confirmation when the top eigenvalue dominates
    let mut p = DVector::from_element(s.nrows(), 1.0).normalize();
    let mut mu_pm = 0.0;
    for _ in 0..50 {
        p = (s * &p).normalize();
        mu_pm = p.dot(&(s * &p));
    }
    let gap_ratio = if vals.len() > 1 && top.abs() > 0.0 {
        (vals[1] / top).abs()
    } else {
        0.0
    };
    if gap_ratio < 0.9 && top.abs() > 1e-12 && (mu_pm - top).abs() > 1e-8 * scale {
        return Err(Error::EigenFailure(format!(
            "power iteration gives {mu_pm}, dense solver {top}"
        )));
    }
    Ok(vals)
}

/// `mu_1(lambda)`: top eigenvalue of the Birman-Schwinger matrix.
pub fn mu_one(table: &ThetaTable, grid: &DomainGrid, lambda: f64) -> Result<f64> {
    let s = assemble_bs_matrix(table, grid, lambda)?;
    Ok(mu_spectrum(&s)?[0])
}

/// Samples `(lambda, mu_1(lambda))` along a list of spectral parameters.
pub fn mu_curve(
    table: &ThetaTable,
    grid: &DomainGrid,
    lambdas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    lambdas
        .iter()
        .map(|&l| Ok((l, mu_one(table, grid, l)?)))
        .collect()
}

/// Outcome of the search for the first root of `mu_1(lambda) = 1`.
#[derive(Debug, Clone, Copy)]
pub struct LambdaHat {
    /// The crossing, when one exists inside `[0, (1 - margin) delta_1^2)`.
    pub lambda_hat: Option<f64>,
    pub mu_at_zero: f64,
    pub mu_at_cap: f64,
    /// Top of the search interval, `(1 - margin) delta_1^2` on the grid.
    pub cap: f64,
}

/// Locates the lowest eigenvalue of `L` as the root of `mu_1(lambda) = 1`.
///
/// `mu_at_zero >= 1` signals a nonpositive bottom eigenvalue (the crossing
/// sits at or below zero); `mu_at_cap < 1` means no eigenvalue detaches from
/// the essential spectrum on this grid.
pub fn find_lambda_hat(table: &ThetaTable, grid: &DomainGrid) -> Result<LambdaHat> {
    let delta1 = grid
        .nodes
        .iter()
        .map(|n| n.omega1)
        .fold(f64::INFINITY, f64::min);
    let cap = (1.0 - BAND_MARGIN) * delta1 * delta1;
    let mu0 = mu_one(table, grid, 0.0)?;
    let mu_cap = mu_one(table, grid, cap)?;
    let lambda_hat = if mu0 >= 1.0 {
        Some(0.0)
    } else if mu_cap < 1.0 {
        None
    } else {
        let f = |l: f64| mu_one(table, grid, l).map(|m| m - 1.0).unwrap_or(f64::NAN);
        Some(bracketed_root(f, 0.0, cap, 1e-12, "mu_1(lambda) = 1")?)
    };
    Ok(LambdaHat { lambda_hat, mu_at_zero: mu0, mu_at_cap: mu_cap, cap })
}

/// Reconstructs the phase-space eigenfunction behind a `mu_1 = 1` crossing.
///
/// Returns `(g, radial profile, relative residual of L g = lambda g)`; `g` is
/// normalized in the `Q` norm.
pub fn recover_eigenfunction(
    table: &ThetaTable,
    grid: &DomainGrid,
    lambda: f64,
) -> Result<(FourierFunction, Vec<f64>, f64)> {
    let s = assemble_bs_matrix(table, grid, lambda)?;
    let eig = s.clone().symmetric_eigen();
    let mut top = 0;
    for i in 0..s.nrows() {
        if eig.eigenvalues[i] > eig.eigenvalues[top] {
            top = i;
        }
    }
    let v = eig.eigenvectors.column(top);
    let sqrt_pi4 = (4.0 * std::f64::consts::PI).sqrt();
    let radial: Vec<Complex64> = (0..s.nrows())
        .map(|j| Complex64::new(v[j] / (sqrt_pi4 * table.w[j].sqrt() * table.r[j]), 0.0))
        .collect();
    let psi = psi_coeffs_from_radial(table, grid, &radial);
    let mut g = resolvent(&psi, grid, lambda)?;
    let norm = q_norm_sq(&g, grid).sqrt();
    if !(norm > 0.0) {
        return Err(Error::EigenFailure("eigenfunction collapsed to zero".into()));
    }
    g.scale(1.0 / norm);
    let lg = apply_l(table, grid, &g);
    let mut diff = g.clone();
    for (i, c) in diff.coeffs.iter_mut().enumerate() {
        *c = lg.coeffs[i] - lambda * g.coeffs[i];
    }
    let residual = q_norm_sq(&diff, grid).sqrt();
    Ok((g, radial.iter().map(|c| c.re).collect(), residual))
}

/// Dense Galerkin matrix of `L` in the orthonormalized basis
/// `sin(k theta) delta_a`, and its smallest eigenvalue.
///
/// Shares every discretization ingredient with the Birman-Schwinger route, so
/// the two estimates of the bottom eigenvalue differ only by solver tolerance.
pub fn galerkin_matrix(table: &ThetaTable, grid: &DomainGrid) -> DMatrix<f64> {
    let na = grid.nodes.len();
    let km = table.k_max;
    let dim = na * km;
    let idx = |a: usize, k: usize| a * km + (k - 1);
    let pi = std::f64::consts::PI;
    let gram: Vec<f64> = grid
        .nodes
        .iter()
        .map(|nd| 8.0 * pi.powi(3) * nd.weight / (nd.omega1 * nd.q_prime))
        .collect();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (a, nd) in grid.nodes.iter().enumerate() {
        for k in 1..=km {
            h[(idx(a, k), idx(a, k))] = (k as f64 * nd.omega1).powi(2);
        }
    }
    let pref = (16.0 * pi * pi).powi(2);
    for j in 0..table.r.len() {
        // gather sin(k theta) over orbits containing r_j
        let mut cols: Vec<(usize, usize, f64)> = Vec::new();
        for (a, entries) in table.entries.iter().enumerate() {
            for e in entries {
                if e.j == j {
                    for k in 1..=km {
                        cols.push((a, k, e.sin_k[k - 1]));
                    }
                }
            }
        }
        let wj = table.w[j] / (table.r[j] * table.r[j]);
        for &(a, k, sa) in &cols {
            let fa = grid.nodes[a].weight * sa / gram[a].sqrt();
            for &(b, l, sb) in &cols {
                let fb = grid.nodes[b].weight * sb / gram[b].sqrt();
                h[(idx(a, k), idx(b, l))] -= pref * wj * fa * fb;
            }
        }
    }
    h
}

/// Smallest eigenvalue of the Galerkin matrix.
pub fn galerkin_lowest(table: &ThetaTable, grid: &DomainGrid) -> Result<f64> {
    let h = galerkin_matrix(table, grid);
    let eig = h.symmetric_eigen();
    eig.eigenvalues
        .iter()
        .cloned()
        .fold(None::<f64>, |acc, v| Some(acc.map_or(v, |a| a.min(v))))
        .ok_or_else(|| Error::EigenFailure("empty Galerkin matrix".into()))
}

/// Essential spectrum bands `k^2 [delta_1^2, Delta_1^2]` with overlapping
/// bands merged.
#[derive(Debug, Clone)]
pub struct EssentialBands {
    pub delta1: f64,
    pub delta1_cap: f64,
    /// Merged bands `(lo, hi)`, ascending, for `k = 1..=k_max`.
    pub bands: Vec<(f64, f64)>,
    /// First `k` from which all later bands form one connected ray.
    pub connected_from: Option<usize>,
}

/// Band structure of the essential spectrum of `-T^2` over the domain.
///
/// Bands `k^2 [delta_1^2, Delta_1^2]` overlap for all `k >= k0` once
/// `(k0+1)^2 delta_1^2 <= k0^2 Delta_1^2`; when `Delta_1 >= 2 delta_1` the
/// whole essential spectrum is the single ray `[delta_1^2, inf)`.
pub fn essential_bands(delta1: f64, delta1_cap: f64, k_max: usize) -> EssentialBands {
    let mut raw: Vec<(f64, f64)> = (1..=k_max)
        .map(|k| {
            let k2 = (k * k) as f64;
            (k2 * delta1 * delta1, k2 * delta1_cap * delta1_cap)
        })
        .collect();
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut bands: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in raw {
        match bands.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => bands.push((lo, hi)),
        }
    }
    let connected_from = (1..=k_max).find(|&k| {
        let ratio = delta1_cap / delta1;
        ((k + 1) * (k + 1)) as f64 * 1.0 <= (k * k) as f64 * ratio * ratio
    });
    EssentialBands { delta1, delta1_cap, bands, connected_from }
}

/// Limit estimate of `mu_1(lambda)` as `lambda` approaches the band bottom.
#[derive(Debug, Clone)]
pub struct MuStar {
    pub samples: Vec<(f64, f64)>,
    /// Extrapolated supremum; `f64::INFINITY` when the curve diverges.
    pub value: f64,
    pub diverging: bool,
}

/// Estimates `mu^* = sup mu_1(lambda)` by sampling
/// `lambda_j = delta_1^2 (1 - 2^{-j})` and extrapolating linearly in the
/// remaining gap; non-shrinking increments flag divergence.
pub fn mu_star_estimate(
    table: &ThetaTable,
    grid: &DomainGrid,
    n_points: usize,
) -> Result<MuStar> {
    let delta1_sq = grid
        .nodes
        .iter()
        .map(|n| n.omega1 * n.omega1)
        .fold(f64::INFINITY, f64::min);
    let mut samples = Vec::with_capacity(n_points);
    for j in 1..=n_points {
        let lambda = delta1_sq * (1.0 - (0.5f64).powi(j as i32));
        samples.push((lambda, mu_one(table, grid, lambda)?));
    }
    let m = samples.len();
    if m < 3 {
        return Ok(MuStar { value: samples.last().map_or(0.0, |s| s.1), samples, diverging: false });
    }
    let d_last = samples[m - 1].1 - samples[m - 2].1;
    let d_prev = samples[m - 2].1 - samples[m - 3].1;
    // halving the gap should halve the increment for a finite limit
    let diverging = d_last > 0.75 * d_prev && d_last > 1e-10;
    let value = if diverging {
        f64::INFINITY
    } else {
        // linear in the gap: mu(lambda) ~ mu* - c (delta_1^2 - lambda)
        samples[m - 1].1 + d_last
    };
    Ok(MuStar { samples, value, diverging })
}
