//! Norm-preserving gradient flow on the Rayleigh quotient of `L`.
//!
//! An independent route to the bottom eigenvalue: starting from seeded random
//! odd data, integrate `g' = -(L - Phi(g)) g` with an exponential integrator
//! for the stiff diagonal transport part, renormalizing in the `Q` norm after
//! every step. The flow drives `Phi(g) = <Lg, g>_Q` monotonically down to the
//! smallest eigenvalue of the same discretized operator the Birman-Schwinger
//! and Galerkin routes use.

use crate::error::{Error, Result};
use crate::orbits::DomainGrid;
use crate::phase_space::{
    q_norm_sq, radial_inner, t_norm_sq, u_prime_from_g, FourierFunction, ThetaTable,
};

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub seed: u64,
    /// Band limit of the random initial data.
    pub init_band: usize,
    /// Initial step; `None` picks `1 / Delta_1^2` from the grid.
    pub dt0: Option<f64>,
    pub max_steps: usize,
    /// Stationarity target for `||L g - Phi g||_Q`.
    pub tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { seed: 1, init_band: 4, dt0: None, max_steps: 50_000, tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub g: FourierFunction,
    /// Final Rayleigh quotient, the flow's eigenvalue estimate.
    pub lambda: f64,
    /// Final stationarity residual `||L g - Phi g||_Q`.
    pub residual: f64,
    pub steps: usize,
    pub converged: bool,
    pub dt_final: f64,
    /// `(t, Phi)` samples along the descent, one per accepted step.
    pub history: Vec<(f64, f64)>,
}

/// `Phi(g) = ||Tg||_Q^2 - (KTg, g)_Q` for normalized `g`, reusing the
/// response field `Bg`.
fn rayleigh(
    table: &ThetaTable,
    grid: &DomainGrid,
    g: &FourierFunction,
) -> (f64, Vec<num_complex::Complex64>) {
    let bg = u_prime_from_g(table, grid, g);
    let kinetic = t_norm_sq(g, grid);
    let binding = radial_inner(table, &bg, &bg).re / (4.0 * std::f64::consts::PI);
    (kinetic - binding, bg)
}

/// One exponential-integrator step of size `dt` at Rayleigh value `phi`.
fn step(
    grid: &DomainGrid,
    g: &FourierFunction,
    ktg: &FourierFunction,
    phi: f64,
    dt: f64,
) -> FourierFunction {
    let mut out = FourierFunction::zeros(g.n_nodes, g.k_max);
    for (a, nd) in grid.nodes.iter().enumerate() {
        for k in 1..=g.k_max as i32 {
            let rate = (k as f64 * nd.omega1).powi(2) - phi;
            let x = rate * dt;
            let decay = (-x).exp();
            // exact exponential-Euler weight (1 - e^{-x})/rate: its fixed
            // points are exactly the stationary points of the flow
            let weight = if x.abs() < 1e-6 {
                dt * (1.0 - 0.5 * x + x * x / 6.0)
            } else {
                (1.0 - decay) / rate
            };
            for sk in [k, -k] {
                let v = decay * g.get(a, sk) + weight * ktg.get(a, sk);
                out.set(a, sk, v);
            }
        }
    }
    out
}

/// Runs the flow to stationarity.
pub fn minimize(table: &ThetaTable, grid: &DomainGrid, opts: &FlowOptions) -> Result<FlowResult> {
    let cap = grid
        .nodes
        .iter()
        .map(|n| n.omega1)
        .fold(0.0f64, f64::max);
    let mut dt = opts.dt0.unwrap_or(1.0 / (cap * cap));

    let mut g = FourierFunction::random_odd(grid.nodes.len(), table.k_max, opts.init_band, opts.seed);
    let norm = q_norm_sq(&g, grid).sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidParams("flow initial data vanished".into()));
    }
    g.scale(1.0 / norm);
    let (mut phi, mut bg) = rayleigh(table, grid, &g);

    let mut steps = 0;
    let mut residual = f64::INFINITY;
    let mut t = 0.0;
    let mut history = vec![(0.0, phi)];
    while steps < opts.max_steps {
        steps += 1;
        let ktg = crate::phase_space::psi_coeffs_from_radial(table, grid, &bg);

        // stationarity check: L g - phi g = (-T^2 - phi) g - KT g
        let mut stat = FourierFunction::zeros(g.n_nodes, g.k_max);
        for (a, nd) in grid.nodes.iter().enumerate() {
            for k in -(g.k_max as i32)..=(g.k_max as i32) {
                let kw = (k as f64 * nd.omega1).powi(2);
                stat.set(a, k, (kw - phi) * g.get(a, k) - ktg.get(a, k));
            }
        }
        residual = q_norm_sq(&stat, grid).sqrt();
        if residual <= opts.tol {
            return Ok(FlowResult {
                g,
                lambda: phi,
                residual,
                steps,
                converged: true,
                dt_final: dt,
                history,
            });
        }

        let mut halvings = 0;
        loop {
            let mut trial = step(grid, &g, &ktg, phi, dt);
            let n2 = q_norm_sq(&trial, grid);
            if n2 > 0.0 && n2.is_finite() {
                trial.scale(1.0 / n2.sqrt());
                let (phi_trial, bg_trial) = rayleigh(table, grid, &trial);
                if phi_trial <= phi + 1e-8 * phi.abs().max(1.0) {
                    g = trial;
                    phi = phi_trial;
                    bg = bg_trial;
                    t += dt;
                    history.push((t, phi));
                    // gentle regrowth after successful steps
                    dt = (dt * 1.05).min(10.0 / (cap * cap));
                    break;
                }
            }
            halvings += 1;
            if halvings > 40 {
                return Err(Error::IntegratorFailure(
                    "flow step size collapsed without descent".into(),
                ));
            }
            dt *= 0.5;
        }
    }
    Ok(FlowResult { g, lambda: phi, residual, steps, converged: false, dt_final: dt, history })
}
