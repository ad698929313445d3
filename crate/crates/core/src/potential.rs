//! Radial potential interface and analytic oracle potentials.

/// An attractive central potential `U(r)` with `U'(r) > 0` for `r > 0`.
///
/// Implementors: the interpolated polytrope profile plus closed-form test
/// potentials (Kepler, harmonic, isochrone).
pub trait RadialPotential: Send + Sync {
    fn u(&self, r: f64) -> f64;
    fn du(&self, r: f64) -> f64;

    /// `(U, U')` at `r`.
    fn eval(&self, r: f64) -> (f64, f64) {
        (self.u(r), self.du(r))
    }

    /// `U''(r)`, by default a central difference of `U'`.
    fn d2u(&self, r: f64) -> f64 {
        let h = 1e-6 * r.abs().max(1e-6);
        (self.du(r + h) - self.du(r - h)) / (2.0 * h)
    }

    /// Cutoff energy `e0`, when the potential carries a compact steady state.
    fn cutoff(&self) -> Option<f64> {
        None
    }

    /// Support radius `r_Q`, when finite.
    fn support_radius(&self) -> Option<f64> {
        None
    }
}

/// `U(r) = -M/r`.
#[derive(Debug, Clone, Copy)]
pub struct Kepler {
    pub mass: f64,
}

impl RadialPotential for Kepler {
    fn u(&self, r: f64) -> f64 {
        if r == 0.0 {
            f64::NEG_INFINITY
        } else {
            -self.mass / r
        }
    }

    fn du(&self, r: f64) -> f64 {
        self.mass / (r * r)
    }

    fn d2u(&self, r: f64) -> f64 {
        -2.0 * self.mass / (r * r * r)
    }
}

/// `U(r) = omega^2 r^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct Harmonic {
    pub omega: f64,
}

impl RadialPotential for Harmonic {
    fn u(&self, r: f64) -> f64 {
        0.5 * self.omega * self.omega * r * r
    }

    fn du(&self, r: f64) -> f64 {
        self.omega * self.omega * r
    }

    fn d2u(&self, _r: f64) -> f64 {
        self.omega * self.omega
    }
}

/// `U(r) = -M / (b + sqrt(b^2 + r^2))`; its radial period depends on E only.
#[derive(Debug, Clone, Copy)]
pub struct Isochrone {
    pub mass: f64,
    pub b: f64,
}

impl RadialPotential for Isochrone {
    fn u(&self, r: f64) -> f64 {
        -self.mass / (self.b + (self.b * self.b + r * r).sqrt())
    }

    fn du(&self, r: f64) -> f64 {
        let s = (self.b * self.b + r * r).sqrt();
        self.mass * r / (s * (self.b + s) * (self.b + s))
    }
}

/// Attaches a cutoff energy to an analytic potential so orbit-domain machinery
/// (`beta_star`, domain grids) can run on closed-form oracles.
#[derive(Debug, Clone, Copy)]
pub struct WithCutoff<P> {
    pub potential: P,
    pub e0: f64,
}

impl<P: RadialPotential> RadialPotential for WithCutoff<P> {
    fn u(&self, r: f64) -> f64 {
        self.potential.u(r)
    }

    fn du(&self, r: f64) -> f64 {
        self.potential.du(r)
    }

    fn d2u(&self, r: f64) -> f64 {
        self.potential.d2u(r)
    }

    fn cutoff(&self) -> Option<f64> {
        Some(self.e0)
    }

    fn support_radius(&self) -> Option<f64> {
        self.potential.support_radius()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kepler_closed_form() {
        let p = Kepler { mass: 1.0 };
        let (u, du) = p.eval(2.0);
        assert_abs_diff_eq!(u, -0.5);
        assert_abs_diff_eq!(du, 0.25);
    }

    #[test]
    fn harmonic_closed_form() {
        let p = Harmonic { omega: 2.0 };
        let (u, du) = p.eval(1.0);
        assert_abs_diff_eq!(u, 2.0);
        assert_abs_diff_eq!(du, 4.0);
    }

    #[test]
    fn isochrone_matches_kepler_far_out() {
        let p = Isochrone { mass: 1.0, b: 0.1 };
        let k = Kepler { mass: 1.0 };
        assert_abs_diff_eq!(p.u(1e4), k.u(1e4), epsilon = 1e-8);
    }

    #[test]
    fn default_second_derivative() {
        let p = Isochrone { mass: 1.0, b: 1.0 };
        let h = 1e-5;
        let fd = (p.du(2.0 + h) - p.du(2.0 - h)) / (2.0 * h);
        assert_abs_diff_eq!(p.d2u(2.0), fd, epsilon = 1e-7);
    }
}
