//! Per-orbit geometry over a radial potential: effective potential, turning
//! points, radial period and frequency, action, angle map, and the quadrature
//! grid over the admissible (E, l) domain.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::RadialPotential;
use crate::quad::{gauss_jacobi_upper, gauss_legendre_on};
use crate::roots::{bracketed_root, golden_min};
use crate::steady_state::SteadyState;

/// Relative threshold below which an orbit counts as circular and the
/// harmonic approximation at the minimum takes over.
const DEGENERATE_REL: f64 = 1e-8;
const ROOT_TOL: f64 = 1e-13;
const QUAD_TOL: f64 = 1e-11;

/// `U_eff(r, l) = U(r) + l^2 / (2 r^2)`.
pub fn u_eff(pot: &dyn RadialPotential, r: f64, ell: f64) -> f64 {
    if ell == 0.0 {
        pot.u(r)
    } else {
        pot.u(r) + ell * ell / (2.0 * r * r)
    }
}

fn d2u_eff(pot: &dyn RadialPotential, r: f64, beta: f64) -> f64 {
    pot.d2u(r) + 3.0 * beta / (r * r * r * r)
}

/// Location and value of the effective-potential minimum at `beta = l^2`:
/// the unique root of `r^3 U'(r) = beta`. Returns `(r0, e_min)`.
pub fn r0_of_beta(pot: &dyn RadialPotential, beta: f64) -> Result<(f64, f64)> {
    if beta == 0.0 {
        return Ok((0.0, pot.u(0.0)));
    }
    let scale = pot.support_radius().unwrap_or(1.0);
    let f = |r: f64| r * r * r * pot.du(r) - beta;
    let mut hi = scale;
    let mut n = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(Error::BracketFailure { context: "r0_of_beta", lo: 0.0, hi });
        }
    }
    let mut lo = hi;
    n = 0;
    while f(lo) > 0.0 {
        lo *= 0.5;
        n += 1;
        if n > 2000 {
            return Err(Error::BracketFailure { context: "r0_of_beta", lo, hi });
        }
    }
    let r0 = bracketed_root(f, lo, hi, ROOT_TOL, "r0_of_beta")?;
    Ok((r0, u_eff(pot, r0, beta.sqrt())))
}

/// Minimum of the effective potential at `beta`.
pub fn e_min_of_beta(pot: &dyn RadialPotential, beta: f64) -> Result<f64> {
    Ok(r0_of_beta(pot, beta)?.1)
}

/// Maximal squared angular momentum: root of `e_min(beta) = e0`.
///
/// Also checks `r0(beta_star)` lies strictly inside the support.
pub fn beta_star(state: &dyn RadialPotential) -> Result<f64> {
    let e0 = state
        .cutoff()
        .ok_or_else(|| Error::InvalidParams("beta_star needs a cutoff energy".into()))?;
    let r_q = state
        .support_radius()
        .map(Ok)
        .unwrap_or_else(|| {
            // analytic oracle: radius where U = e0
            let f = |r: f64| state.u(r) - e0;
            let mut hi = 1.0;
            let mut n = 0;
            while f(hi) < 0.0 {
                hi *= 2.0;
                n += 1;
                if n > 200 {
                    return Err(Error::RootNotBracketed("support radius"));
                }
            }
            bracketed_root(f, 1e-12 * hi, hi, ROOT_TOL, "support radius")
        })?;
    let upper = 2.0 * r_q * r_q * (e0 - state.u(0.0).max(e0 - 1e6 * e0.abs()));
    let f = |beta: f64| e_min_of_beta(state, beta).unwrap_or(f64::INFINITY) - e0;
    if f(0.0) >= 0.0 || f(upper) <= 0.0 {
        return Err(Error::RootNotBracketed("beta_star"));
    }
    let bs = bracketed_root(f, 0.0, upper, ROOT_TOL, "beta_star")?;
    let (r0, _) = r0_of_beta(state, bs)?;
    if !(r0 > 0.0 && r0 < r_q) {
        return Err(Error::RootNotBracketed("r0(beta_star) inside support"));
    }
    Ok(bs)
}

/// A few Newton steps to push a bracketed root to machine precision; the
/// period quadratures need `U_eff(r_pm) - e` at roundoff level, or the
/// removed endpoint singularity leaks back in.
fn newton_polish<F: Fn(f64) -> f64, D: Fn(f64) -> f64>(
    f: F,
    df: D,
    mut x: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 {
            break;
        }
        let xn = x - f(x) / d;
        if xn.is_finite() && xn >= lo && xn <= hi {
            x = xn;
        } else {
            break;
        }
    }
    x
}

/// Turning radii of the orbit `(e, l)`: the two roots of `e = U_eff`.
///
/// Returns `(r0, r0)` for a circular orbit; `(0, r_plus)` on the `l = 0`
/// slice, where the orbit passes through the center.
pub fn turning_points(pot: &dyn RadialPotential, e: f64, ell: f64) -> Result<(f64, f64)> {
    let beta = ell * ell;
    let (r0, e_min) = r0_of_beta(pot, beta)?;
    if e < e_min {
        return Err(Error::InvalidParams(format!(
            "energy {e} below effective minimum {e_min}"
        )));
    }
    if beta > 0.0 && (e - e_min) <= 1e-14 * e_min.abs() {
        return Ok((r0, r0));
    }

    // outer root on [r0, inf)
    let f = |r: f64| u_eff(pot, r, ell) - e;
    let start = if beta > 0.0 { r0 } else { pot.support_radius().unwrap_or(1.0) * 0.5 };
    let mut hi = start.max(1e-12);
    let mut n = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(Error::BracketFailure { context: "outer turning point", lo: r0, hi });
        }
    }
    let lo_outer = if beta > 0.0 { r0 } else { 0.0 };
    let r_plus = bracketed_root(f, lo_outer, hi, ROOT_TOL, "outer turning point")?;
    let df = |r: f64| pot.du(r) - beta / (r * r * r);
    let r_plus = newton_polish(f, df, r_plus, lo_outer, hi);

    if beta == 0.0 {
        return Ok((0.0, r_plus));
    }

    // inner root on (0, r0]
    let mut lo = r0;
    n = 0;
    while f(lo) < 0.0 {
        lo *= 0.5;
        n += 1;
        if n > 2000 {
            return Err(Error::BracketFailure { context: "inner turning point", lo, hi: r0 });
        }
    }
    let r_minus = bracketed_root(f, lo, r0, ROOT_TOL, "inner turning point")?;
    let r_minus = newton_polish(f, df, r_minus, lo * 0.5, r0);
    Ok((r_minus, r_plus))
}

/// Doubles the node count until the result stabilizes to `QUAD_TOL` relative.
fn converge<F: Fn(usize) -> f64>(eval: F, context: &'static str) -> Result<f64> {
    converge_floor(eval, context, 1e-300)
}

/// As [`converge`], with an absolute floor on the tolerance scale (used for
/// the angle, where values near a turning point are legitimately tiny).
fn converge_floor<F: Fn(usize) -> f64>(
    eval: F,
    context: &'static str,
    floor: f64,
) -> Result<f64> {
    let mut n = 32;
    let mut prev = eval(n);
    let mut prev_change = f64::INFINITY;
    loop {
        n *= 2;
        let cur = eval(n);
        let change = (cur - prev).abs();
        let scale = cur.abs().max(floor);
        if change <= QUAD_TOL * scale {
            return Ok(cur);
        }
        // Interpolated potentials bottom out above QUAD_TOL on thin
        // near-circular orbits, where 1/(E - e_min) amplifies profile noise;
        // accept the noise floor once refinement stops paying.
        if change > 0.3 * prev_change && change <= 1e-6 * scale {
            return Ok(cur);
        }
        // a diverging integrand (turning-point noise dominating the orbit)
        // only gets worse under refinement; bail before the rules get huge
        if !change.is_finite() || (change > 1e3 * scale && change >= prev_change) {
            return Err(Error::QuadratureNotConverged { context, change });
        }
        if n >= 1 << 16 {
            return Err(Error::QuadratureNotConverged { context, change });
        }
        prev = cur;
        prev_change = change;
    }
}

/// Shared geometry of one bound orbit, precomputed once.
struct OrbitFrame {
    e: f64,
    ell: f64,
    beta: f64,
    r0: f64,
    e_min: f64,
    r_minus: f64,
    r_plus: f64,
    /// `U_eff'` at the turning points, for the linearized integrand factor
    /// within roundoff distance of them.
    slope_minus: f64,
    slope_plus: f64,
    degenerate: bool,
}

fn frame(pot: &dyn RadialPotential, e: f64, ell: f64) -> Result<OrbitFrame> {
    let beta = ell * ell;
    let (r0, e_min) = r0_of_beta(pot, beta)?;
    // center-crossing orbits collapse onto r = 0 instead of a circle; the
    // quadrature noise zone there is wider, so the switch is earlier
    let degenerate = if beta > 0.0 {
        (e - e_min) < DEGENERATE_REL * e_min.abs().max(1e-300)
    } else {
        e_min.is_finite() && (e - e_min) < 1e-6 * e_min.abs().max(1e-300)
    };
    let (r_minus, r_plus) = if degenerate {
        (r0, r0)
    } else {
        turning_points(pot, e, ell)?
    };
    let du_eff = |r: f64| {
        if r == 0.0 {
            0.0
        } else {
            pot.du(r) - beta / (r * r * r)
        }
    };
    Ok(OrbitFrame {
        e,
        ell,
        beta,
        r0,
        e_min,
        r_minus,
        r_plus,
        slope_minus: du_eff(r_minus),
        slope_plus: du_eff(r_plus),
        degenerate,
    })
}

impl OrbitFrame {
    /// `g(phi)` in the factorization `2(e - U_eff) = (r - r_-)(r_+ - r) g`,
    /// evaluated at the Chebyshev point `r = c + h cos(phi)`.
    fn g_at(&self, pot: &dyn RadialPotential, phi: f64) -> f64 {
        let c = 0.5 * (self.r_plus + self.r_minus);
        let h = 0.5 * (self.r_plus - self.r_minus);
        let r = c + h * phi.cos();
        let s = h * phi.sin();
        let span = self.r_plus - self.r_minus;
        let d_minus = r - self.r_minus;
        let d_plus = self.r_plus - r;
        // within roundoff of a turning point, direct cancellation in
        // `e - U_eff` is pure noise; switch to the linearized factor
        let val = if d_minus < 1e-8 * span {
            -2.0 * self.slope_minus * d_minus
        } else if d_plus < 1e-8 * span {
            2.0 * self.slope_plus * d_plus
        } else {
            2.0 * (self.e - u_eff(pot, r, self.ell))
        };
        (val / (s * s)).max(1e-300)
    }

    /// `G(u)` in `2(e - U) = (r_+ - r) G` for the center-crossing slice,
    /// at `r = r_+ (1 - u^2)`.
    fn g_center(&self, pot: &dyn RadialPotential, u: f64) -> f64 {
        let r = self.r_plus * (1.0 - u * u);
        let d_plus = self.r_plus - r;
        let val = if d_plus < 1e-8 * self.r_plus {
            2.0 * self.slope_plus * d_plus
        } else {
            // anchor at U(r_+) rather than e so the factor vanishes at u = 0
            2.0 * (pot.u(self.r_plus) - pot.u(r))
        };
        (val / (self.r_plus * u * u)).max(1e-300)
    }
}

/// Radial period `T1 = 2 int dr / sqrt(2(E - U_eff))`.
///
/// The square-root endpoint singularity is removed exactly by the Chebyshev
/// substitution `r = c + h cos(phi)`; a midpoint rule in `phi` then converges
/// spectrally and never touches the endpoints. Near-circular orbits switch to
/// the harmonic approximation at the minimum.
pub fn period_t1(pot: &dyn RadialPotential, e: f64, ell: f64) -> Result<f64> {
    let fr = frame(pot, e, ell)?;
    period_from_frame(pot, &fr)
}

fn period_from_frame(pot: &dyn RadialPotential, fr: &OrbitFrame) -> Result<f64> {
    if fr.degenerate {
        return Ok(if fr.beta == 0.0 {
            // center-crossing orbits traverse r = |x| twice per 1D oscillation
            std::f64::consts::PI / pot.d2u(0.0).sqrt()
        } else {
            2.0 * std::f64::consts::PI / d2u_eff(pot, fr.r0, fr.beta).sqrt()
        });
    }
    if fr.beta == 0.0 {
        // bounce orbit through the center: r = r_+ (1 - u^2)
        let rp = fr.r_plus;
        return converge(
            |n| {
                let (us, ws) = gauss_legendre_on(n, 0.0, 1.0);
                4.0 * rp.sqrt()
                    * us.iter()
                        .zip(&ws)
                        .map(|(&u, &w)| w / fr.g_center(pot, u).sqrt())
                        .sum::<f64>()
            },
            "period (l = 0)",
        );
    }
    converge(
        |n| {
            let h = std::f64::consts::PI / n as f64;
            (0..n)
                .map(|j| {
                    let phi = (j as f64 + 0.5) * h;
                    2.0 * h / fr.g_at(pot, phi).sqrt()
                })
                .sum()
        },
        "period",
    )
}

/// Radial frequency `omega1 = 2 pi / T1`.
pub fn omega1(pot: &dyn RadialPotential, e: f64, ell: f64) -> Result<f64> {
    Ok(2.0 * std::f64::consts::PI / period_t1(pot, e, ell)?)
}

/// Radial action `I = (1/pi) int sqrt(2(E - U_eff)) dr`.
pub fn action_i(pot: &dyn RadialPotential, e: f64, ell: f64) -> Result<f64> {
    let fr = frame(pot, e, ell)?;
    if fr.degenerate {
        let om = d2u_eff(pot, fr.r0, fr.beta).sqrt();
        return Ok((fr.e - fr.e_min) / om);
    }
    if fr.beta == 0.0 {
        let rp = fr.r_plus;
        return converge(
            |n| {
                let (us, ws) = gauss_legendre_on(n, 0.0, 1.0);
                2.0 * rp.powf(1.5) / std::f64::consts::PI
                    * us.iter()
                        .zip(&ws)
                        .map(|(&u, &w)| w * u * u * fr.g_center(pot, u).sqrt())
                        .sum::<f64>()
            },
            "action (l = 0)",
        );
    }
    let hw = 0.5 * (fr.r_plus - fr.r_minus);
    converge(
        |n| {
            let h = std::f64::consts::PI / n as f64;
            (0..n)
                .map(|j| {
                    let phi = (j as f64 + 0.5) * h;
                    let s = hw * phi.sin();
                    h * s * s * fr.g_at(pot, phi).sqrt()
                })
                .sum::<f64>()
                / std::f64::consts::PI
        },
        "action",
    )
}

/// Angle variable `theta(r) = omega1 int_{r_-}^{r} dr' / sqrt(2(E - U_eff))`,
/// normalized so `theta(r_-) = 0` and `theta(r_+) = pi`.
pub fn theta_of_r(pot: &dyn RadialPotential, r: f64, e: f64, ell: f64) -> Result<f64> {
    let fr = frame(pot, e, ell)?;
    let t1 = period_from_frame(pot, &fr)?;
    theta_from_frame(pot, &fr, 2.0 * std::f64::consts::PI / t1, r)
}

fn theta_from_frame(
    pot: &dyn RadialPotential,
    fr: &OrbitFrame,
    omega1: f64,
    r: f64,
) -> Result<f64> {
    let span = (fr.r_plus - fr.r_minus).max(1e-300);
    if r < fr.r_minus - 1e-9 * span || r > fr.r_plus + 1e-9 * span {
        return Err(Error::OutOfRange { r, r_minus: fr.r_minus, r_plus: fr.r_plus });
    }
    let r = r.clamp(fr.r_minus, fr.r_plus);
    if !fr.degenerate {
        // snap exactly onto the turning points; the integrand factorization
        // cannot be evaluated stably within roundoff of them
        if r - fr.r_minus <= 1e-12 * span {
            return Ok(0.0);
        }
        if fr.r_plus - r <= 1e-12 * span {
            return Ok(std::f64::consts::PI);
        }
    }
    if fr.degenerate {
        if fr.r_plus <= fr.r_minus {
            return Ok(0.5 * std::f64::consts::PI);
        }
        let c = 0.5 * (fr.r_plus + fr.r_minus);
        let h = 0.5 * (fr.r_plus - fr.r_minus);
        return Ok(std::f64::consts::PI - ((r - c) / h).clamp(-1.0, 1.0).acos());
    }
    if fr.beta == 0.0 {
        let u_r = (1.0 - r / fr.r_plus).max(0.0).sqrt();
        if u_r >= 1.0 {
            return Ok(0.0);
        }
        let rp = fr.r_plus;
        return converge_floor(
            |n| {
                let (us, ws) = gauss_legendre_on(n, u_r, 1.0);
                2.0 * omega1
                    * rp.sqrt()
                    * us.iter()
                        .zip(&ws)
                        .map(|(&u, &w)| w / fr.g_center(pot, u).sqrt())
                        .sum::<f64>()
            },
            "angle (l = 0)",
            1.0,
        );
    }
    let c = 0.5 * (fr.r_plus + fr.r_minus);
    let h = 0.5 * (fr.r_plus - fr.r_minus);
    let phi_r = ((r - c) / h).clamp(-1.0, 1.0).acos();
    if phi_r >= std::f64::consts::PI {
        return Ok(0.0);
    }
    // Gauss-Legendre here: the midpoint rule loses its periodic-extension
    // superconvergence on a partial interval and stalls at O(N^-2)
    converge_floor(
        |n| {
            let (ps, ws) = gauss_legendre_on(n, phi_r, std::f64::consts::PI);
            omega1
                * ps
                    .iter()
                    .zip(&ws)
                    .map(|(&phi, &w)| w / fr.g_at(pot, phi).sqrt())
                    .sum::<f64>()
        },
        "angle",
        1.0,
    )
}

/// Angle variable at many radii of the same orbit, sharing one turning-point
/// solve and one period quadrature.
pub fn theta_at_many(
    pot: &dyn RadialPotential,
    e: f64,
    ell: f64,
    rs: &[f64],
) -> Result<Vec<f64>> {
    let fr = frame(pot, e, ell)?;
    let t1 = period_from_frame(pot, &fr)?;
    let om = 2.0 * std::f64::consts::PI / t1;
    rs.iter().map(|&r| theta_from_frame(pot, &fr, om, r)).collect()
}

/// All per-orbit quantities for a single `(e, l)` pair.
#[derive(Debug, Clone, Copy)]
pub struct OrbitQuantities {
    pub e: f64,
    pub ell: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub t1: f64,
    pub omega1: f64,
    pub action: f64,
}

impl OrbitQuantities {
    pub fn compute(pot: &dyn RadialPotential, e: f64, ell: f64) -> Result<Self> {
        let fr = frame(pot, e, ell)?;
        let t1 = period_from_frame(pot, &fr)?;
        let action = action_i(pot, e, ell)?;
        Ok(Self {
            e,
            ell,
            r_minus: fr.r_minus,
            r_plus: fr.r_plus,
            t1,
            omega1: 2.0 * std::f64::consts::PI / t1,
            action,
        })
    }
}

/// One quadrature node of the domain grid.
#[derive(Debug, Clone, Copy)]
pub struct GridNode {
    pub e: f64,
    pub ell: f64,
    pub beta: f64,
    /// Quadrature weight for the measure `l dl dE = (d beta / 2) dE`.
    pub weight: f64,
    pub omega1: f64,
    pub t1: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    /// `|Q'(E)|` at the node.
    pub q_prime: f64,
}

/// Tensor quadrature discretization of `D = {(beta, E)}` with per-node orbit
/// data. Gauss-Legendre in `beta`; Gauss-Legendre in `E` per slice, switching
/// to Gauss-Jacobi when `k < 1` makes `|Q'|` singular at the cutoff.
#[derive(Debug, Clone)]
pub struct DomainGrid {
    pub beta_star: f64,
    pub e0: f64,
    pub n_beta: usize,
    pub n_e: usize,
    pub nodes: Vec<GridNode>,
    /// `(beta, e_min(beta))` for each beta slice, ascending in beta.
    pub slices: Vec<(f64, f64)>,
}

pub fn build_domain_grid(state: &SteadyState, n_beta: usize, n_e: usize) -> Result<DomainGrid> {
    build_domain_grid_for(state, state.k, n_beta, n_e)
}

/// Grid builder over any cutoff potential, with ansatz exponent `k` driving
/// both the E-quadrature family and `|Q'(E)| = k (e0 - E)^(k-1)`.
pub fn build_domain_grid_for(
    pot: &dyn RadialPotential,
    k: f64,
    n_beta: usize,
    n_e: usize,
) -> Result<DomainGrid> {
    let bs = beta_star(pot)?;
    let e0 = pot
        .cutoff()
        .ok_or_else(|| Error::InvalidParams("domain grid needs a cutoff energy".into()))?;
    // slice in l rather than beta = l^2: e_min(beta) has a sqrt singularity
    // at beta = 0 that would spoil the Gauss rule, while e_min(l^2) is smooth
    let (ln_nodes, lw) = gauss_legendre_on(n_beta, 0.0, bs.sqrt());

    let slices: Vec<(f64, f64, f64)> = ln_nodes
        .iter()
        .zip(&lw)
        .map(|(&ell, &wl)| {
            let beta = ell * ell;
            let e_min = e_min_of_beta(pot, beta)?;
            // measure l dl dE = (d beta / 2) dE
            Ok((beta, 2.0 * wl * ell, e_min))
        })
        .collect::<Result<_>>()?;

    let nodes: Vec<Vec<GridNode>> = slices
        .par_iter()
        .map(|&(beta, wb, e_min)| {
            let (en, ew): (Vec<f64>, Vec<f64>) = if k >= 1.0 {
                gauss_legendre_on(n_e, e_min, e0)
            } else {
                // absorb the (e0 - E)^(k-1) singularity into the rule, then
                // divide it back out so `weight * |Q'|` stays accurate
                let (en, ew) = gauss_jacobi_upper(n_e, k - 1.0, e_min, e0);
                let ew = en
                    .iter()
                    .zip(&ew)
                    .map(|(&e, &w)| w / (e0 - e).powf(k - 1.0))
                    .collect();
                (en, ew)
            };
            let ell = beta.sqrt();
            en.iter()
                .zip(&ew)
                .map(|(&e, &we)| {
                    let orbit = OrbitQuantities::compute(pot, e, ell)?;
                    Ok(GridNode {
                        e,
                        ell,
                        beta,
                        weight: 0.5 * wb * we,
                        omega1: orbit.omega1,
                        t1: orbit.t1,
                        r_minus: orbit.r_minus,
                        r_plus: orbit.r_plus,
                        q_prime: k * (e0 - e).powf(k - 1.0),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    Ok(DomainGrid {
        beta_star: bs,
        e0,
        n_beta,
        n_e,
        nodes: nodes.into_iter().flatten().collect(),
        slices: slices.into_iter().map(|(b, _, em)| (b, em)).collect(),
    })
}

/// Bounds of the radial frequency over the domain, with boundary refinement.
#[derive(Debug, Clone, Copy)]
pub struct OmegaBounds {
    pub delta1: f64,
    pub delta1_cap: f64,
    /// Discretization-error estimate for the bounds.
    pub error: f64,
    /// `(E, beta)` where the minimum was located.
    pub argmin: (f64, f64),
}

/// Min/max of `omega1` over the grid nodes plus golden-section refinement
/// along the four boundary pieces of `D`.
pub fn omega_bounds(pot: &dyn RadialPotential, grid: &DomainGrid) -> Result<OmegaBounds> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut argmin = (0.0, 0.0);
    for nd in &grid.nodes {
        if nd.omega1 < lo {
            lo = nd.omega1;
            argmin = (nd.e, nd.beta);
        }
        hi = hi.max(nd.omega1);
    }
    let grid_lo = lo;
    let grid_hi = hi;

    let om_at = |e: f64, beta: f64| -> f64 {
        omega1(pot, e, beta.sqrt()).unwrap_or(f64::INFINITY)
    };
    let mut consider = |om: f64, e: f64, beta: f64, lo: &mut f64, hi: &mut f64| {
        if om.is_finite() {
            if om < *lo {
                *lo = om;
                argmin = (e, beta);
            }
            *hi = (*hi).max(om);
        }
    };

    let bs = grid.beta_star;
    let e0 = grid.e0;
    let scan = 24usize;
    // boundary E = e0 and boundary E = e_min(beta) (circular orbits)
    for sign in [1.0f64, -1.0] {
        for curve in 0..2 {
            let f = |beta: f64| -> f64 {
                let e = if curve == 0 {
                    e0
                } else {
                    match e_min_of_beta(pot, beta) {
                        Ok(em) => em,
                        Err(_) => return f64::INFINITY,
                    }
                };
                sign * om_at(e, beta)
            };
            let mut best = (0.0, f64::INFINITY);
            for i in 1..scan {
                let beta = bs * i as f64 / scan as f64;
                let v = f(beta);
                if v < best.1 {
                    best = (beta, v);
                }
            }
            let half = bs / scan as f64;
            let (b_ref, v_ref) = golden_min(
                &f,
                (best.0 - half).max(1e-12 * bs),
                (best.0 + half).min(bs),
                1e-8 * bs,
            );
            let e = if curve == 0 {
                e0
            } else {
                e_min_of_beta(pot, b_ref).unwrap_or(e0)
            };
            consider(sign * v_ref, e, b_ref, &mut lo, &mut hi);
        }
        // boundary beta = 0
        let u0 = pot.u(0.0);
        if u0.is_finite() {
            let f = |e: f64| sign * om_at(e, 0.0);
            let mut best = (e0, f64::INFINITY);
            for i in 1..scan {
                let e = u0 + (e0 - u0) * i as f64 / scan as f64;
                let v = f(e);
                if v < best.1 {
                    best = (e, v);
                }
            }
            let half = (e0 - u0) / scan as f64;
            let (e_ref, v_ref) =
                golden_min(&f, best.0 - half, (best.0 + half).min(e0), 1e-8 * (e0 - u0).abs());
            consider(sign * v_ref, e_ref, 0.0, &mut lo, &mut hi);
        }
    }

    let error = (grid_lo - lo).abs().max((hi - grid_hi).abs()).max(1e-8 * lo.abs());
    Ok(OmegaBounds { delta1: lo, delta1_cap: hi, error, argmin })
}
