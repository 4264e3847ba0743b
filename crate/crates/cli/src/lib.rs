//! Experiment harness for SAA confidence regions and intervals: TOML
//! configuration, replicated coverage studies, fixture inference, limiting
//! coverage Monte Carlo and CSV/SVG output.

pub mod config;
pub mod ellipse;
pub mod experiment;
pub mod fixture;
pub mod limiting;
pub mod output;

pub use config::{load_config, save_config, ConfigError, ExperimentConfig, ModelSpec, Preset};
pub use experiment::{run_replications, CoverageReport, ExperimentOutput, QqData, ReplicationRecord};
