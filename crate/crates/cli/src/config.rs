//! Problem files.
//!
//! A problem is a JSON document:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "domain": {"type": "interval", "length": 3.141592653589793},
//!   "coefficients": {"a": "5*lambda", "b": "0", "c": "5*lambda"},
//!   "nonlinearity": {"G": "-(u^4+v^4)/4"},
//!   "lambda_range": [0, 1],
//!   "numerics": {"n_max": 256}
//! }
//! ```
//!
//! Everything except `schema_version` and `coefficients` has a default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sflow_core::expr::{self, Expr};
use sflow_core::nonlinear_probe::{ProbeConfig, Side, Spacing};
use sflow_core::{CoefficientPath, DomainSpec, GalerkinConfig, OdeConfig};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "DomainSpec::unit_pi")]
    pub domain: DomainSpec,
    pub coefficients: Coefficients,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<Nonlinearity>,
    #[serde(default = "default_range")]
    pub lambda_range: [f64; 2],
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeTarget>,
}

fn default_range() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub a: String,
    pub b: String,
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nonlinearity {
    #[serde(rename = "G")]
    pub g: String,
}

/// Where to look for a branch. Without `lambda_star` the first crossing with
/// nonzero local spectral flow is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeTarget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    #[serde(default = "default_side")]
    pub side: Side,
}

fn default_side() -> Side {
    Side::Right
}

/// Numerical knobs of every engine, flattened into one table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub n_start: usize,
    pub n_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub delta_floor: f64,
    pub quad_panels: usize,
    pub x_grid: usize,
    pub lambda_grid: usize,
    pub force_galerkin: bool,
    pub crossing_grid: usize,
    pub rk_tol: f64,
    pub ode_mesh: usize,
    pub sv_tol: f64,
    pub root_tol: f64,
    pub probe_mesh: usize,
    pub probe_step: f64,
    pub probe_steps: usize,
    pub probe_spacing: Spacing,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub probe_seed: f64,
    pub amplitude_floor: f64,
    /// Retained mode pairs in the eigenvalue-track plot table.
    pub plot_modes: usize,
    pub plot_points: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        let g = GalerkinConfig::default();
        let o = OdeConfig::default();
        let p = ProbeConfig::default();
        Numerics {
            n_start: g.n_start,
            n_max: g.n_max,
            delta: g.delta,
            delta_floor: g.delta_floor,
            quad_panels: g.quad_panels,
            x_grid: g.x_grid,
            lambda_grid: g.lambda_grid,
            force_galerkin: g.force_quadrature,
            crossing_grid: o.crossing_grid,
            rk_tol: o.rk_tol,
            ode_mesh: o.mesh,
            sv_tol: o.sv_tol,
            root_tol: o.root_tol,
            probe_mesh: p.mesh,
            probe_step: p.step,
            probe_steps: p.steps,
            probe_spacing: p.spacing,
            newton_tol: p.newton_tol,
            newton_max_iter: p.newton_max_iter,
            probe_seed: p.seed,
            amplitude_floor: p.amplitude_floor,
            plot_modes: 8,
            plot_points: 201,
        }
    }
}

impl Numerics {
    pub fn galerkin(&self) -> GalerkinConfig {
        GalerkinConfig {
            n_start: self.n_start,
            n_max: self.n_max,
            delta: self.delta,
            delta_floor: self.delta_floor,
            quad_panels: self.quad_panels,
            x_grid: self.x_grid,
            lambda_grid: self.lambda_grid,
            force_quadrature: self.force_galerkin,
        }
    }

    pub fn ode(&self) -> OdeConfig {
        OdeConfig {
            rk_tol: self.rk_tol,
            mesh: self.ode_mesh,
            crossing_grid: self.crossing_grid,
            sv_tol: self.sv_tol,
            root_tol: self.root_tol,
            x_grid: self.x_grid,
        }
    }

    pub fn probe(&self) -> ProbeConfig {
        ProbeConfig {
            mesh: self.probe_mesh,
            step: self.probe_step,
            steps: self.probe_steps,
            spacing: self.probe_spacing,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            seed: self.probe_seed,
            amplitude_floor: self.amplitude_floor,
            ..ProbeConfig::default()
        }
    }

    fn validate(&self) -> Result<(), String> {
        let positive = [
            ("delta_floor", self.delta_floor),
            ("rk_tol", self.rk_tol),
            ("sv_tol", self.sv_tol),
            ("root_tol", self.root_tol),
            ("probe_step", self.probe_step),
            ("newton_tol", self.newton_tol),
            ("probe_seed", self.probe_seed),
            ("amplitude_floor", self.amplitude_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("numerics.{name} must be positive, got {v}"));
            }
        }
        let counts = [
            ("n_start", self.n_start, 1),
            ("quad_panels", self.quad_panels, 1),
            ("x_grid", self.x_grid, 2),
            ("lambda_grid", self.lambda_grid, 2),
            ("crossing_grid", self.crossing_grid, 2),
            ("ode_mesh", self.ode_mesh, 4),
            ("probe_mesh", self.probe_mesh, 16),
            ("probe_steps", self.probe_steps, 1),
            ("newton_max_iter", self.newton_max_iter, 1),
            ("plot_modes", self.plot_modes, 1),
            ("plot_points", self.plot_points, 2),
        ];
        for (name, v, min) in counts {
            if v < min {
                return Err(format!("numerics.{name} must be at least {min}, got {v}"));
            }
        }
        if self.n_max < self.n_start {
            return Err(format!(
                "numerics.n_max ({}) is below n_start ({})",
                self.n_max, self.n_start
            ));
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(format!("numerics.delta must be a nonnegative number, got {d}"));
            }
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of a problem file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub n_max: Option<usize>,
    pub delta: Option<f64>,
    pub force_galerkin: bool,
}

impl Overrides {
    pub fn apply(&self, n: &mut Numerics) {
        if let Some(g) = self.grid {
            n.crossing_grid = g;
        }
        if let Some(m) = self.n_max {
            n.n_max = m;
        }
        if let Some(d) = self.delta {
            n.delta = Some(d);
        }
        if self.force_galerkin {
            n.force_galerkin = true;
        }
    }
}

/// A validated problem with parsed expressions.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub path: CoefficientPath,
    pub domain: DomainSpec,
    pub nonlinearity: Option<Expr>,
}

impl Problem {
    pub fn load(file: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
        Self::from_json(&text, &file.display().to_string(), overrides)
    }

    pub fn from_json(text: &str, origin: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let config: ProblemConfig =
            serde_json::from_str(text).map_err(|e| CliError::config(origin, e.to_string()))?;
        Self::from_config(config, origin, overrides)
    }

    pub fn from_config(mut config: ProblemConfig, origin: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let bad = |m: String| CliError::config(origin, m);
        if config.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        overrides.apply(&mut config.numerics);
        config.numerics.validate().map_err(bad)?;
        config.domain.validate().map_err(|e| bad(e.to_string()))?;
        let parse = |field: &str, src: &str| {
            expr::parse(src).map_err(|e| bad(format!("coefficients.{field}: {e}")))
        };
        let co = &config.coefficients;
        let [lo, hi] = config.lambda_range;
        let path = CoefficientPath::new(parse("a", &co.a)?, parse("b", &co.b)?, parse("c", &co.c)?)
            .with_range(lo, hi)
            .map_err(|e| bad(e.to_string()))?;
        let nonlinearity = match &config.nonlinearity {
            Some(n) => Some(
                expr::parse_nonlinearity(&n.g).map_err(|e| bad(format!("nonlinearity.G: {e}")))?,
            ),
            None => None,
        };
        Ok(Problem {
            domain: config.domain,
            config,
            path,
            nonlinearity,
        })
    }

    pub fn is_constant(&self) -> bool {
        !self.path.x_dependent
    }

    pub fn interval_length(&self) -> Option<f64> {
        match self.domain {
            DomainSpec::Interval { length } => Some(length),
            DomainSpec::Rectangle { .. } => None,
        }
    }

    pub fn numerics(&self) -> &Numerics {
        &self.config.numerics
    }
}
