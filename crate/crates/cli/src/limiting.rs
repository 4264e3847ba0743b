//! Monte Carlo estimates of the limiting coverage of individual intervals.

use rayon::prelude::*;
use svi_core::inference::{coherent_orientation, coverage_chunks, coverage_hits, limiting_law, ExactnessCondition};
use svi_core::{InferenceError, LimitingLaw, Matrix, RngStream};

use crate::config::ExperimentConfig;
use crate::experiment::true_solution;

/// Law at the true solution of the configured model, with the configured
/// overrides for `L` and `Σ₀`.
pub fn law_for(cfg: &ExperimentConfig) -> anyhow::Result<LimitingLaw> {
    let truth = true_solution(cfg)?;
    let model = cfg.model();
    let q = model.dim();
    let l = match &cfg.limiting.jacobian {
        Some(v) => Matrix::from_row_major(q, q, v.clone())?,
        None => model.true_map().jacobian,
    };
    let sigma0 = match &cfg.limiting.sigma0 {
        Some(v) => Matrix::from_row_major(q, q, v.clone())?,
        None => model.population_covariance(&truth.x0),
    };
    let s = cfg.feasible_set()?;
    let tol = svi_core::BoxSet::default_tolerance(&truth.z0);
    Ok(limiting_law(&l, &sigma0, &s, &truth.z0, tol)?)
}

/// Same value as the sequential core routine, with chunks spread over the
/// rayon pool.
pub fn parallel_coverage(
    law: &LimitingLaw,
    j: usize,
    alpha: f64,
    samples: usize,
    stream: RngStream,
) -> Result<f64, InferenceError> {
    let chunks: Vec<(u64, usize)> = coverage_chunks(samples).collect();
    let hits: Vec<u64> = chunks
        .par_iter()
        .map(|&(k, count)| coverage_hits(law, j, alpha, count, stream.substream(k)))
        .collect::<Result<_, _>>()?;
    Ok(hits.iter().sum::<u64>() as f64 / samples as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitingRow {
    pub alpha: f64,
    /// Zero-based coordinate.
    pub coord: usize,
    pub cells: usize,
    pub coherent: bool,
    pub condition: Option<ExactnessCondition>,
    pub coverage: f64,
    pub std_error: f64,
}

/// Every coordinate at every α, all from the stream `(seed, 0)`.
pub fn limiting_table(cfg: &ExperimentConfig, law: &LimitingLaw) -> Result<Vec<LimitingRow>, InferenceError> {
    let coherent = coherent_orientation(law);
    let condition = law.exactness_condition();
    let samples = cfg.limiting.samples;
    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        for j in 0..law.dim() {
            let p = parallel_coverage(law, j, alpha, samples, RngStream::new(cfg.seed, 0))?;
            rows.push(LimitingRow {
                alpha,
                coord: j,
                cells: law.cells.len(),
                coherent,
                condition,
                coverage: p,
                std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            });
        }
    }
    Ok(rows)
}

pub fn condition_label(c: Option<ExactnessCondition>) -> &'static str {
    match c {
        Some(ExactnessCondition::FewCells) => "few-cells",
        Some(ExactnessCondition::DiagonalCovariances) => "diagonal-covariances",
        None => "none",
    }
}
