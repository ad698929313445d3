//! End-to-end acceptance suite. Each test prints one `ACCEPTANCE n ... pass`
//! line on success; the asserts carry the same conditions.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gravispec::birman_schwinger::{
    assemble_bs_matrix, essential_bands, find_lambda_hat, galerkin_lowest, mu_spectrum,
    recover_eigenfunction,
};
use gravispec::flow::{minimize, FlowOptions};
use gravispec::orbits::{build_domain_grid, omega_bounds, period_t1, DomainGrid};
use gravispec::phase_space::{q_norm_sq, ThetaTable};
use gravispec::quad::adaptive_simpson;
use gravispec::steady_state::PolytropeParams;
use gravispec::{build_polytrope, Harmonic, Kepler, SteadyState, WithCutoff};

const PI: f64 = std::f64::consts::PI;

/// Shared `k = 1` polytrope discretization reused by the spectral criteria.
fn fixture() -> &'static (SteadyState, DomainGrid, ThetaTable) {
    static FIX: OnceLock<(SteadyState, DomainGrid, ThetaTable)> = OnceLock::new();
    FIX.get_or_init(|| {
        let params = PolytropeParams { k: 1.0, kappa: 1.0, ode_tol: 1e-9, grid_points: 300 };
        let state = build_polytrope(&params).unwrap();
        let grid = build_domain_grid(&state, 8, 6).unwrap();
        let table = ThetaTable::build(&state, &grid, 6, 50).unwrap();
        (state, grid, table)
    })
}

fn build_k(k: f64) -> SteadyState {
    let params = PolytropeParams { k, kappa: 1.0, ode_tol: 1e-9, grid_points: 300 };
    build_polytrope(&params).unwrap()
}

#[test]
fn criterion_01_orbit_period_oracles() {
    // Kepler: T1 = 2 pi (-2 E)^{-3/2} for M = 1, independent of ell
    let kep = WithCutoff { potential: Kepler { mass: 1.0 }, e0: -0.05 };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let e = -0.9 + 0.8 * rng.gen::<f64>();
        // bound orbits exist for ell below the circular value 1/sqrt(-2E)
        let ell_max = 1.0 / (-2.0 * e).sqrt();
        let ell = ell_max * (0.05 + 0.9 * rng.gen::<f64>());
        let t1 = period_t1(&kep, e, ell).unwrap();
        let exact = 2.0 * PI * (-2.0 * e).powf(-1.5);
        assert!(
            ((t1 - exact) / exact).abs() <= 1e-8,
            "Kepler period at (E, ell) = ({e}, {ell}): {t1} vs {exact}"
        );
    }

    // harmonic oscillator: radial period pi / omega for every bound orbit
    for (omega, e0) in [(1.0, 3.0), (2.5, 11.0)] {
        let pot = WithCutoff { potential: Harmonic { omega }, e0 };
        for _ in 0..25 {
            let e = e0 * (0.1 + 0.85 * rng.gen::<f64>());
            let ell = (e / omega) * (0.05 + 0.9 * rng.gen::<f64>());
            let t1 = period_t1(&pot, e, ell).unwrap();
            let exact = PI / omega;
            assert!(
                ((t1 - exact) / exact).abs() <= 1e-8,
                "harmonic period at omega = {omega}, (E, ell) = ({e}, {ell}): {t1} vs {exact}"
            );
        }
    }
    println!("ACCEPTANCE 1 orbit period oracles (Kepler, harmonic): pass");
}

#[test]
fn criterion_02_steady_state_self_consistency() {
    for k in [1.0, 1.5, 2.5] {
        let s = build_k(k);
        let rho_max = s.rho[0];
        for i in 0..s.r_grid.len() {
            let z = (s.e0 - s.u[i]).max(0.0);
            let expected = s.c_n * z.powf(s.n);
            assert!(
                (s.rho[i] - expected).abs() <= 1e-6 * rho_max,
                "k = {k}: density inconsistent at r = {}",
                s.r_grid[i]
            );
        }
        assert!(
            (s.e0 + s.mass / s.r_q).abs() <= 1e-6 * s.e0.abs(),
            "k = {k}: cutoff vs exterior matching"
        );
        let mass_quad =
            adaptive_simpson(&|r: f64| 4.0 * PI * r * r * s.rho_at(r), 0.0, s.r_q, 1e-11);
        assert!(
            ((mass_quad - s.mass) / s.mass).abs() <= 1e-6,
            "k = {k}: mass quadrature {mass_quad} vs {}",
            s.mass
        );
    }
    println!("ACCEPTANCE 2 steady-state self-consistency (k = 1, 1.5, 2.5): pass");
}

#[test]
fn criterion_03_frequency_bounds_stable() {
    for k in [1.0, 1.5, 2.5] {
        let s = build_k(k);
        let coarse_grid = build_domain_grid(&s, 8, 6).unwrap();
        let fine_grid = build_domain_grid(&s, 16, 12).unwrap();
        let coarse = omega_bounds(&s, &coarse_grid).unwrap();
        let fine = omega_bounds(&s, &fine_grid).unwrap();
        assert!(coarse.delta1 > 0.0 && coarse.delta1_cap.is_finite());
        assert!(
            ((fine.delta1 - coarse.delta1) / fine.delta1).abs() < 0.01,
            "k = {k}: delta1 moved {} -> {}",
            coarse.delta1,
            fine.delta1
        );
        assert!(
            ((fine.delta1_cap - coarse.delta1_cap) / fine.delta1_cap).abs() < 0.01,
            "k = {k}: Delta1 moved {} -> {}",
            coarse.delta1_cap,
            fine.delta1_cap
        );
    }
    println!("ACCEPTANCE 3 frequency bounds positive, finite, grid-stable: pass");
}

#[test]
fn criterion_04_bs_matrix_symmetric_positive() {
    let (_, grid, table) = fixture();
    let d1sq = grid.nodes.iter().map(|n| n.omega1 * n.omega1).fold(f64::INFINITY, f64::min);
    for lambda in [0.0, 0.5 * d1sq, 0.9 * d1sq] {
        let s = assemble_bs_matrix(table, grid, lambda).unwrap();
        let norm = s.norm();
        let asym = (&s - s.transpose()).norm();
        assert!(asym <= 1e-12 * norm.max(1.0), "asymmetry {asym} at lambda = {lambda}");
        let eigs = s.clone().symmetric_eigen().eigenvalues;
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        let top = eigs.iter().cloned().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(min >= -1e-10 * top, "negative eigenvalue {min} at lambda = {lambda}");
    }
    println!("ACCEPTANCE 4 Birman-Schwinger matrices symmetric and positive: pass");
}

#[test]
fn criterion_05_mu_curve_monotone_convex() {
    let (_, grid, table) = fixture();
    let d1sq = grid.nodes.iter().map(|n| n.omega1 * n.omega1).fold(f64::INFINITY, f64::min);
    let n = 20;
    let mus: Vec<f64> = (0..n)
        .map(|i| {
            let lambda = 0.99 * d1sq * i as f64 / (n - 1) as f64;
            let s = assemble_bs_matrix(table, grid, lambda).unwrap();
            mu_spectrum(&s).unwrap()[0]
        })
        .collect();
    assert!(mus[0] > 0.0 && mus[0] < 1.0, "mu_1(0) = {} outside (0, 1)", mus[0]);
    for i in 1..n {
        assert!(mus[i] >= mus[i - 1] - 1e-8, "monotonicity violated at point {i}");
    }
    for i in 2..n {
        let second = mus[i] - 2.0 * mus[i - 1] + mus[i - 2];
        assert!(second >= -1e-8, "convexity violated at point {i}: {second}");
    }
    println!("ACCEPTANCE 5 mu_1 in (0,1) at 0, monotone and convex in lambda: pass");
}

#[test]
fn criterion_06_eigenfunction_round_trip() {
    let (_, grid, table) = fixture();
    let lh = find_lambda_hat(table, grid).unwrap();
    let lambda = lh.lambda_hat.expect("the k = 1 test polytrope has a detached eigenvalue");

    // fixed point of the Birman-Schwinger matrix at the crossing
    let s = assemble_bs_matrix(table, grid, lambda).unwrap();
    let eig = s.clone().symmetric_eigen();
    let mut top = 0;
    for i in 0..s.nrows() {
        if eig.eigenvalues[i] > eig.eigenvalues[top] {
            top = i;
        }
    }
    let psi = eig.eigenvectors.column(top).into_owned();
    let fp_residual = (&s * &psi - &psi).norm() / psi.norm();
    assert!(fp_residual <= 1e-6, "fixed-point residual {fp_residual}");

    let (_, _, residual) = recover_eigenfunction(table, grid, lambda).unwrap();
    assert!(residual <= 1e-5, "eigenfunction residual {residual}");
    println!("ACCEPTANCE 6 eigenvalue/eigenfunction round trip at lambda-hat: pass");
}

#[test]
fn criterion_07_three_estimators_agree() {
    let (_, grid, table) = fixture();
    let d1sq = grid.nodes.iter().map(|n| n.omega1 * n.omega1).fold(f64::INFINITY, f64::min);

    let lh = find_lambda_hat(table, grid).unwrap();
    let bs = lh.lambda_hat.unwrap();
    let gal = galerkin_lowest(table, grid).unwrap();
    let flow = minimize(table, grid, &FlowOptions::default()).unwrap();
    assert!(flow.converged);
    assert!(flow.lambda <= d1sq + 1e-8 * d1sq, "flow estimate above the band bottom");

    let tol = 1e-5 * d1sq;
    assert!((bs - gal).abs() <= tol, "bs {bs} vs galerkin {gal}");
    assert!((bs - flow.lambda).abs() <= tol, "bs {bs} vs flow {}", flow.lambda);
    assert!((gal - flow.lambda).abs() <= tol, "galerkin {gal} vs flow {}", flow.lambda);
    println!(
        "ACCEPTANCE 7 estimators agree: bs {bs:.9e}, galerkin {gal:.9e}, flow {:.9e}: pass",
        flow.lambda
    );
}

#[test]
fn criterion_08_flow_invariants() {
    let (_, grid, table) = fixture();
    let mut accepted = 0usize;
    for seed in 1..=5 {
        let res = minimize(
            table,
            grid,
            &FlowOptions { seed, tol: 1e-8, ..FlowOptions::default() },
        )
        .unwrap();
        accepted += res.history.len() - 1;
        for w in res.history.windows(2) {
            assert!(
                w[1].1 <= w[0].1 + 1e-8 * w[0].1.abs().max(1.0),
                "Phi increased from {} to {} (seed {seed})",
                w[0].1,
                w[1].1
            );
        }
        let norm = q_norm_sq(&res.g, grid).sqrt();
        assert!((norm - 1.0).abs() <= 1e-8, "norm {norm} after flow (seed {seed})");
    }
    assert!(accepted >= 200, "only {accepted} accepted steps across 5 starts");
    println!("ACCEPTANCE 8 flow norm preservation and Phi descent over {accepted} steps: pass");
}

#[test]
fn criterion_09_truncation_self_convergence() {
    let (state, grid, _) = fixture();

    let mu_with = |k_max: usize, n_r: usize| -> f64 {
        let table = ThetaTable::build(state, grid, k_max, n_r).unwrap();
        let s = assemble_bs_matrix(&table, grid, 0.0).unwrap();
        mu_spectrum(&s).unwrap()[0]
    };
    let base = mu_with(32, 50);
    let more_k = mu_with(64, 50);
    let more_r = mu_with(32, 100);
    let dk = ((more_k - base) / base).abs();
    let dr = ((more_r - base) / base).abs();
    assert!(dk <= 0.01, "mu_1 moved {dk:.2e} when k_max doubled");
    assert!(dr <= 0.01, "mu_1 moved {dr:.2e} when n_r doubled");
    println!(
        "ACCEPTANCE 9 truncation self-convergence (k_max: {dk:.2e}, n_r: {dr:.2e}): pass"
    );
}

#[test]
fn criterion_10_essential_bands() {
    let (state, grid, _) = fixture();
    let ob = omega_bounds(state, grid).unwrap();
    let eb = essential_bands(ob.delta1, ob.delta1_cap, 8);
    let d1sq = ob.delta1 * ob.delta1;
    let cap_sq = ob.delta1_cap * ob.delta1_cap;

    // the first band bottom is delta_1^2, the minimum of the essential spectrum
    assert!((eb.bands[0].0 - d1sq).abs() <= 1e-12 * d1sq);
    // every unmerged band matches k^2 [delta_1^2, Delta_1^2] by construction
    for (i, &(lo, hi)) in eb.bands.iter().enumerate() {
        if eb.bands.len() == 8 {
            let k2 = ((i + 1) * (i + 1)) as f64;
            assert!((lo - k2 * d1sq).abs() <= 1e-12 * k2 * d1sq);
            assert!((hi - k2 * cap_sq).abs() <= 1e-12 * k2 * cap_sq);
        } else {
            assert!(lo < hi);
        }
    }
    // merge threshold: bands 1 and 2 overlap exactly when Delta_1^2 >= 4 delta_1^2
    if cap_sq >= 4.0 * d1sq {
        assert_eq!(eb.connected_from, Some(1));
        assert!(eb.bands[0].1 >= 4.0 * d1sq);
    } else {
        assert!(eb.bands.len() > 1);
        assert_ne!(eb.connected_from, Some(1));
    }
    println!("ACCEPTANCE 10 essential-spectrum bands and merge threshold: pass");
}
