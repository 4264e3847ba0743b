//! Experiment configuration, read from and written to TOML.
//!
//! ```toml
//! sample_sizes = [10, 30]
//! replications = 200
//! alphas = [0.1]
//! seed = 7
//!
//! [model]
//! preset = "two-dim"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use svi_core::{AffineScenarioModel, BoxSet, TenDimOffsets};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    TwoDim,
    TenDimCentered,
    TenDimHalfShifted,
    TenDimShifted,
}

/// Either a named preset or explicit uniform ranges, `q²` for the random
/// matrix (row-major) and `q` for the random offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_ranges: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_ranges: Option<Vec<[f64; 2]>>,
}

impl ModelSpec {
    pub fn preset(preset: Preset) -> Self {
        ModelSpec { preset: Some(preset), q: None, matrix_ranges: None, offset_ranges: None }
    }

    pub fn build(&self) -> Result<AffineScenarioModel, ConfigError> {
        match (self.preset, &self.q, &self.matrix_ranges, &self.offset_ranges) {
            (Some(p), None, None, None) => Ok(match p {
                Preset::TwoDim => AffineScenarioModel::two_dim_benchmark(),
                Preset::TenDimCentered => AffineScenarioModel::ten_dim_benchmark(TenDimOffsets::Centered),
                Preset::TenDimHalfShifted => AffineScenarioModel::ten_dim_benchmark(TenDimOffsets::HalfShifted),
                Preset::TenDimShifted => AffineScenarioModel::ten_dim_benchmark(TenDimOffsets::Shifted),
            }),
            (Some(_), ..) => Err(invalid("model", "`preset` excludes `q`, `matrix_ranges` and `offset_ranges`")),
            (None, Some(q), Some(m), Some(b)) => {
                let pairs = |v: &[[f64; 2]]| v.iter().map(|r| (r[0], r[1])).collect();
                AffineScenarioModel::new(*q, pairs(m), pairs(b)).map_err(|e| invalid("model", e.to_string()))
            }
            _ => Err(invalid("model", "give `preset`, or all of `q`, `matrix_ranges` and `offset_ranges`")),
        }
    }
}

/// Box bounds; TOML `inf` and `-inf` mark missing bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSpec {
    pub fn build(&self) -> Result<BoxSet, ConfigError> {
        BoxSet::new(self.lower.clone(), self.upper.clone()).map_err(|e| invalid("feasible_set", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggles {
    #[serde(default = "yes")]
    pub coverage: bool,
    #[serde(default = "yes")]
    pub qq: bool,
    #[serde(default)]
    pub ellipse: bool,
    #[serde(default)]
    pub limiting_law: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles { coverage: true, qq: true, ellipse: false, limiting_law: false }
    }
}

fn yes() -> bool {
    true
}

/// Inputs of the limiting-coverage Monte Carlo. Unset matrices come from
/// the model: its mean matrix, and its covariance at the true solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitingSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<Vec<f64>>,
}

impl Default for LimitingSpec {
    fn default() -> Self {
        LimitingSpec { samples: default_samples(), jacobian: None, sigma0: None }
    }
}

fn default_samples() -> usize {
    1_000_000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_failure_rate() -> f64 {
    0.05
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    /// Eigenvalue threshold for the covariance; unset means relative `1e-8`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub epsilon: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Known true normal-map solution; solved from the mean map otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_z0: Option<Vec<f64>>,
    /// Largest tolerated share of failed replications per sample size.
    #[serde(default = "default_failure_rate")]
    pub max_failure_rate: f64,
    pub model: ModelSpec,
    /// Nonnegative orthant when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible_set: Option<BoxSpec>,
    #[serde(default)]
    pub outputs: Toggles,
    #[serde(default)]
    pub limiting: LimitingSpec,
}

impl ExperimentConfig {
    /// Coverage study of the given model with default settings elsewhere.
    pub fn new(model: ModelSpec, sample_sizes: Vec<usize>, replications: usize, alphas: Vec<f64>, seed: u64) -> Self {
        ExperimentConfig {
            sample_sizes,
            replications,
            alphas,
            seed,
            rho0: None,
            epsilon: 0.0,
            output_dir: default_output_dir(),
            true_z0: None,
            max_failure_rate: default_failure_rate(),
            model,
            feasible_set: None,
            outputs: Toggles::default(),
            limiting: LimitingSpec::default(),
        }
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_owned(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.replications == 0 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if self.sample_sizes.is_empty() {
            return Err(invalid("sample_sizes", "empty"));
        }
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n < 2) {
            return Err(invalid("sample_sizes", format!("{n} is below 2")));
        }
        if self.alphas.is_empty() {
            return Err(invalid("alphas", "empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(invalid("alphas", format!("{a} is outside (0, 1)")));
        }
        if let Some(r) = self.rho0 {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid("rho0", "must be positive"));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return Err(invalid("max_failure_rate", "must lie in [0, 1]"));
        }
        if self.limiting.samples == 0 {
            return Err(invalid("limiting.samples", "must be positive"));
        }
        let q = self.model.build()?.dim();
        let s = self.feasible_set()?;
        if s.dim() != q {
            return Err(invalid("feasible_set", format!("has dimension {}, model has {q}", s.dim())));
        }
        if let Some(z) = &self.true_z0 {
            if z.len() != q {
                return Err(invalid("true_z0", format!("has length {}, model has {q}", z.len())));
            }
        }
        for (field, m) in [("limiting.jacobian", &self.limiting.jacobian), ("limiting.sigma0", &self.limiting.sigma0)] {
            if let Some(m) = m {
                if m.len() != q * q {
                    return Err(invalid(field, format!("needs {} entries, found {}", q * q, m.len())));
                }
            }
        }
        Ok(())
    }

    pub fn model(&self) -> AffineScenarioModel {
        self.model.build().expect("validated")
    }

    pub fn feasible_set(&self) -> Result<BoxSet, ConfigError> {
        match &self.feasible_set {
            Some(b) => b.build(),
            None => Ok(BoxSet::nonnegative_orthant(self.model.build()?.dim())),
        }
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    ExperimentConfig::from_toml(&text, &path.display().to_string())
}

pub fn save_config(cfg: &ExperimentConfig, path: &Path) -> Result<(), ConfigError> {
    fs::write(path, cfg.to_toml()).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })
}
