//! Inference on an explicitly given SAA instance `(J̄, b̄, Σₙ, n)`.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use svi_core::inference::{
    confidence_region, derivative_at, individual_intervals, project_intervals_to_x, simultaneous_intervals,
};
use svi_core::saa_solver::{default_start, solve};
use svi_core::{
    ConfidenceRegion, CovarianceEstimate, IntervalSet, Matrix, RegionShape, SaaMap, SolveResult, SolverConfig,
};

use crate::config::{BoxSpec, ConfigError};

/// ```toml
/// q = 2
/// n = 10
/// jacobian = [0.9292, 0.5400, 0.7536, 2.1111]
/// offset = [-0.1319, -0.2906]
/// covariance = [0.4169, 0.0137, 0.0137, 0.1865]
/// alphas = [0.1]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub q: usize,
    pub n: usize,
    /// Row-major.
    pub jacobian: Vec<f64>,
    pub offset: Vec<f64>,
    /// Row-major.
    pub covariance: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    /// Point whose membership in each region is reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible_set: Option<BoxSpec>,
}

fn default_alphas() -> Vec<f64> {
    vec![0.1]
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

impl Fixture {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let fx: Fixture =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_owned(), message: e.to_string() })?;
        fx.validate()?;
        Ok(fx)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Fixture::from_toml(&text, &path.display().to_string())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let q = self.q;
        if q == 0 {
            return Err(invalid("q", "must be positive"));
        }
        if self.n < 2 {
            return Err(invalid("n", "must be at least 2"));
        }
        for (field, len, want) in [
            ("jacobian", self.jacobian.len(), q * q),
            ("offset", self.offset.len(), q),
            ("covariance", self.covariance.len(), q * q),
        ] {
            if len != want {
                return Err(invalid(field, format!("needs {want} entries, found {len}")));
            }
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(invalid("alphas", "needs values in (0, 1)"));
        }
        if self.z0.as_ref().is_some_and(|z| z.len() != q) {
            return Err(invalid("z0", format!("needs {q} entries")));
        }
        if self.feasible_set.as_ref().map(|b| b.build()).transpose()?.is_some_and(|s| s.dim() != q) {
            return Err(invalid("feasible_set", format!("needs dimension {q}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureLevel {
    pub alpha: f64,
    pub region: ConfidenceRegion,
    pub simultaneous: IntervalSet,
    pub individual: IntervalSet,
    pub simultaneous_x: IntervalSet,
    pub individual_x: IntervalSet,
    pub z0_in_region: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureReport {
    pub solution: SolveResult,
    pub derivative: Matrix,
    /// `MᵀΣₙ⁻¹M`, when the covariance has full rank.
    pub shape: Option<Matrix>,
    pub levels: Vec<FixtureLevel>,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver: {0}")]
    Solver(#[from] svi_core::SolverError),
    #[error("inference: {0}")]
    Inference(#[from] svi_core::InferenceError),
}

pub fn run_fixture(fx: &Fixture) -> Result<FixtureReport, FixtureError> {
    let q = fx.q;
    let jac = Matrix::from_row_major(q, q, fx.jacobian.clone()).map_err(|e| invalid("jacobian", e.to_string()))?;
    let cov = Matrix::from_row_major(q, q, fx.covariance.clone()).map_err(|e| invalid("covariance", e.to_string()))?;
    let f = SaaMap::new(jac, fx.offset.clone()).map_err(|e| invalid("offset", e.to_string()))?;
    let s = match &fx.feasible_set {
        Some(b) => b.build()?,
        None => svi_core::BoxSet::nonnegative_orthant(q),
    };
    let cfg = SolverConfig::default();
    let solution = solve(&f, &s, &cfg, &default_start(&f))?;
    let d = derivative_at(&f, &s, &solution, cfg.tolerance_at(&solution.z));
    let sigma = CovarianceEstimate::from_matrix(cov, fx.n);
    let mut shape = None;
    let mut levels = Vec::new();
    for &alpha in &fx.alphas {
        let region = confidence_region(&d, &sigma, fx.n, alpha, fx.rho0, 0.0)?;
        if let RegionShape::FullRank { shape: qm, .. } = &region.shape {
            shape = Some(qm.clone());
        }
        let simultaneous = simultaneous_intervals(&region)?;
        let individual = individual_intervals(&d, &sigma, fx.n, alpha);
        levels.push(FixtureLevel {
            alpha,
            z0_in_region: fx.z0.as_ref().map(|z| region.contains(z)),
            simultaneous_x: project_intervals_to_x(&simultaneous, &s),
            individual_x: project_intervals_to_x(&individual, &s),
            region,
            simultaneous,
            individual,
        });
    }
    Ok(FixtureReport { solution, derivative: d.matrix, shape, levels })
}

/// Rows `coord,kind,lo,hi,alpha` with `coord` = `z1`, `x1`, ...
pub fn write_intervals_csv<W: io::Write>(out: W, levels: &[FixtureLevel]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["coord", "kind", "lo", "hi", "alpha"])?;
    for level in levels {
        for (prefix, sets) in
            [("z", [&level.simultaneous, &level.individual]), ("x", [&level.simultaneous_x, &level.individual_x])]
        {
            for set in sets {
                for j in 0..set.dim() {
                    w.write_record([
                        format!("{prefix}{}", j + 1),
                        set.kind.short_name().to_owned(),
                        set.lower[j].to_string(),
                        set.upper[j].to_string(),
                        level.alpha.to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
