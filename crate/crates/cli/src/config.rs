//! Run configuration: one TOML file drives every subcommand; command-line
//! `--set key=value` pairs override individual keys before deserialization.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gravispec::steady_state::PolytropeParams;
use gravispec::{Harmonic, Isochrone, Kepler, RadialPotential, WithCutoff};

/// Environment variable overriding the cache root directory.
pub const CACHE_ENV: &str = "GRAVISPEC_CACHE_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub spectrum: SpectrumConfig,
    pub flow: FlowConfig,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            spectrum: SpectrumConfig::default(),
            flow: FlowConfig::default(),
            output_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from(".gravispec-cache"),
        }
    }
}

/// Steady-state model: a polytrope built from `(k, kappa)` or one of the
/// closed-form test potentials with an explicit cutoff energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// `polytrope | kepler | harmonic | isochrone`
    pub kind: String,
    /// Polytrope exponent, in `(-1/2, 7/2)`.
    pub k: f64,
    /// Central value `e0 - U(0)` of the polytrope, positive.
    pub kappa: f64,
    pub ode_tol: f64,
    pub grid_points: usize,
    /// Mass of the Kepler / isochrone potentials.
    pub mass: f64,
    /// Frequency of the harmonic potential.
    pub omega: f64,
    /// Core radius of the isochrone potential.
    pub b: f64,
    /// Cutoff energy for the analytic potentials (ignored for polytropes,
    /// whose cutoff is computed).
    pub e0: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: "polytrope".into(),
            k: 1.0,
            kappa: 1.0,
            ode_tol: 1e-9,
            grid_points: 300,
            mass: 1.0,
            omega: 1.0,
            b: 1.0,
            e0: -0.5,
        }
    }
}

impl ModelConfig {
    pub fn polytrope_params(&self) -> PolytropeParams {
        PolytropeParams {
            k: self.k,
            kappa: self.kappa,
            ode_tol: self.ode_tol,
            grid_points: self.grid_points,
        }
    }

    /// Builds the analytic potential named by `kind`, with its cutoff
    /// attached; `None` when `kind` is `polytrope`.
    pub fn analytic(&self) -> Option<Box<dyn RadialPotential>> {
        match self.kind.as_str() {
            "kepler" => Some(Box::new(WithCutoff { potential: Kepler { mass: self.mass }, e0: self.e0 })),
            "harmonic" => Some(Box::new(WithCutoff { potential: Harmonic { omega: self.omega }, e0: self.e0 })),
            "isochrone" => Some(Box::new(WithCutoff {
                potential: Isochrone { mass: self.mass, b: self.b },
                e0: self.e0,
            })),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Angular-momentum slices of the domain grid.
    pub n_beta: usize,
    /// Energy nodes per slice.
    pub n_e: usize,
    /// Radial quadrature nodes on `(0, r_Q)`.
    pub n_r: usize,
    /// Fourier band limit in the angle variable.
    pub k_max: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_beta: 8, n_e: 6, n_r: 50, k_max: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Points of the uniform lambda grid for the mu curve.
    pub lambda_points: usize,
    /// Upper end of the lambda grid as a fraction of `delta_1^2`.
    pub lambda_max_frac: f64,
    /// Number of leading eigenvalues emitted per lambda.
    pub m: usize,
    /// Bisection tolerance on the `mu_1(lambda) = 1` root.
    pub tol: f64,
    /// Geometric samples used for the `mu^*` extrapolation.
    pub mu_star_points: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { lambda_points: 20, lambda_max_frac: 0.99, m: 3, tol: 1e-10, mu_star_points: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// Maximum number of flow steps.
    pub budget: usize,
    /// Stationarity target for the descent.
    pub tol: f64,
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { budget: 50_000, tol: 1e-9, seed: 1 }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        let g = &self.grid;
        if g.n_beta < 4 || g.n_e < 4 || g.n_r < 4 || g.k_max < 4 {
            return Err("grid sizes (n_beta, n_e, n_r, k_max) must all be >= 4".into());
        }
        for (name, v) in [
            ("model.ode_tol", self.model.ode_tol),
            ("spectrum.tol", self.spectrum.tol),
            ("flow.tol", self.flow.tol),
        ] {
            if !(v > 0.0) {
                return Err(format!("{name} must be > 0"));
            }
        }
        if !(self.spectrum.lambda_max_frac > 0.0 && self.spectrum.lambda_max_frac < 1.0) {
            return Err("spectrum.lambda_max_frac must lie in (0, 1)".into());
        }
        Ok(())
    }

    /// Cache root: the environment override wins over the config key.
    pub fn cache_root(&self) -> PathBuf {
        std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| self.cache_dir.clone())
    }
}

/// Loads the config file (defaults when absent) and applies `key=value`
/// overrides addressed by dotted TOML paths, e.g. `grid.n_r=100`.
pub fn load_config(path: Option<&Path>, sets: &[String]) -> Result<RunConfig, String> {
    let mut value: toml::Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            text.parse().map_err(|e| format!("config parse error: {e}"))?
        }
        None => toml::Value::Table(Default::default()),
    };
    for s in sets {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| format!("override `{s}` is not of the form key=value"))?;
        apply_override(&mut value, key.trim(), raw.trim())?;
    }
    let cfg: RunConfig = value.try_into().map_err(|e| format!("config error: {e}"))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(root: &mut toml::Value, key: &str, raw: &str) -> Result<(), String> {
    // parse the value with TOML semantics; fall back to a bare string
    let parsed: toml::Value = format!("v = {raw}")
        .parse::<toml::Value>()
        .ok()
        .and_then(|t| t.get("v").cloned())
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| format!("`{key}`: not a table"))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node.as_table_mut().ok_or_else(|| format!("`{key}`: not a table"))?;
    table.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = load_config(None, &[]).unwrap();
        assert_eq!(cfg.model.kind, "polytrope");
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg =
            load_config(None, &["grid.n_r=128".into(), "model.k=2.5".into()]).unwrap();
        assert_eq!(cfg.grid.n_r, 128);
        assert_eq!(cfg.model.k, 2.5);
    }

    #[test]
    fn bad_override_is_rejected() {
        assert!(load_config(None, &["grid.n_r".into()]).is_err());
        assert!(load_config(None, &["grid.n_r=2".into()]).is_err());
    }
}
