//! Replicated SAA experiments and coverage accounting.
//!
//! For sample size `n`, replication `r` draws its scenarios from stream id
//! `r` of a generator keyed by `(seed, n)`. Replications run on the rayon
//! pool and are folded in index order, so the output depends only on the
//! configuration.

use rayon::prelude::*;
use svi_core::inference::{
    confidence_region, derivative_at, individual_intervals, region_degenerate, simultaneous_intervals,
};
use svi_core::numerics::{chi2_quantile, eig_sym};
use svi_core::saa_solver::{default_start, solve};
use svi_core::{
    AffineScenarioModel, BoxSet, ConfidenceRegion, CovarianceEstimate, InferenceError, IntervalSet, Matrix,
    NormalMapDerivative, RegionShape, RngStream, SolverConfig, SolverError,
};

use crate::config::ExperimentConfig;

/// True solution of the mean problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub z0: Vec<f64>,
    pub x0: Vec<f64>,
}

pub fn true_solution(cfg: &ExperimentConfig) -> Result<Truth, SolverError> {
    let s = cfg.feasible_set().expect("validated");
    if let Some(z0) = &cfg.true_z0 {
        return Ok(Truth { x0: s.project(z0), z0: z0.clone() });
    }
    let f = cfg.model().true_map();
    let out = solve(&f, &s, &SolverConfig::default(), &default_start(&f))?;
    Ok(Truth { z0: out.z, x0: out.x })
}

/// Generator for replication `r` at sample size `n`.
pub fn replication_stream(seed: u64, n: usize, r: usize) -> RngStream {
    RngStream::new(seed, n as u64).substream(r as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved(Box<Inference>),
    SolverFailed(String),
    /// `d(fₙ)_S(zₙ)` is singular; only `zₙ` is known.
    NonInvertible { z: Vec<f64> },
    RegionFailed(String),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Solved(_) => "ok",
            Outcome::SolverFailed(_) => "solver-failed",
            Outcome::NonInvertible { .. } => "non-invertible",
            Outcome::RegionFailed(_) => "region-failed",
        }
    }
}

/// Per-α results of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOutcome {
    pub alpha: f64,
    pub simultaneous: IntervalSet,
    pub individual: IntervalSet,
    pub region_covers: bool,
}

impl LevelOutcome {
    pub fn simultaneous_covers(&self, z0: &[f64]) -> bool {
        self.simultaneous.covers_all(z0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub derivative: Matrix,
    pub covariance: Matrix,
    pub iterations: usize,
    /// `zₙ` is interior to one cell.
    pub is_linear: bool,
    pub full_rank: bool,
    /// `n [M(z₀ − zₙ)]ᵀ P [M(z₀ − zₙ)]`
    pub distance_sq: f64,
    pub levels: Vec<LevelOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub n: usize,
    pub index: usize,
    pub outcome: Outcome,
}

/// Runs one replication.
pub fn replicate(
    model: &AffineScenarioModel,
    s: &BoxSet,
    cfg: &ExperimentConfig,
    truth: &Truth,
    n: usize,
    index: usize,
) -> ReplicationRecord {
    let outcome = run_one(model, s, cfg, truth, n, replication_stream(cfg.seed, n, index));
    ReplicationRecord { n, index, outcome }
}

fn run_one(
    model: &AffineScenarioModel,
    s: &BoxSet,
    cfg: &ExperimentConfig,
    truth: &Truth,
    n: usize,
    stream: RngStream,
) -> Outcome {
    let batch = model.sample_batch(n, stream);
    let f = batch.assemble();
    let solver = SolverConfig::default();
    let solved = match solve(&f, s, &solver, &default_start(&f)) {
        Ok(r) => r,
        Err(e) => return Outcome::SolverFailed(e.to_string()),
    };
    let d = derivative_at(&f, s, &solved, solver.tolerance_at(&solved.z));
    if !d.is_invertible {
        return Outcome::NonInvertible { z: solved.z };
    }
    let sigma = match batch.sample_covariance(&solved.x) {
        Ok(c) => c,
        Err(e) => return Outcome::RegionFailed(e.to_string()),
    };
    let mut levels = Vec::with_capacity(cfg.alphas.len());
    let mut distance_sq = f64::NAN;
    let mut full_rank = true;
    for &alpha in &cfg.alphas {
        let built = confidence_region(&d, &sigma, n, alpha, cfg.rho0, cfg.epsilon)
            .and_then(|region| Ok((enclosing_intervals(&region, &d, &sigma)?, region)));
        let (simultaneous, region) = match built {
            Ok(v) => v,
            Err(e) => return Outcome::RegionFailed(e.to_string()),
        };
        distance_sq = region.statistic(&truth.z0);
        full_rank = region.is_full_rank();
        levels.push(LevelOutcome {
            alpha,
            region_covers: region.contains(&truth.z0),
            simultaneous,
            individual: individual_intervals(&d, &sigma, n, alpha),
        });
    }
    Outcome::Solved(Box::new(Inference {
        z: solved.z,
        x: solved.x,
        derivative: d.matrix,
        covariance: sigma.matrix,
        iterations: solved.iterations,
        is_linear: d.is_linear,
        full_rank,
        distance_sq,
        levels,
    }))
}

/// Box around the region; a degenerate region with a positive slab uses
/// its zero-width counterpart.
fn enclosing_intervals(
    region: &ConfidenceRegion,
    d: &NormalMapDerivative,
    sigma: &CovarianceEstimate,
) -> Result<IntervalSet, InferenceError> {
    match simultaneous_intervals(region) {
        Err(InferenceError::UnsupportedRegion) => {
            let RegionShape::Degenerate { rank, .. } = region.shape else { unreachable!() };
            // the smallest kept eigenvalue as threshold keeps the same rank
            let rho0 = eig_sym(&sigma.matrix)?.values[rank - 1];
            simultaneous_intervals(&region_degenerate(d, sigma, region.n, region.alpha, rho0, 0.0)?)
        }
        other => other,
    }
}

/// Counts for one `(n, α)` pair. Failed replications are left out of the
/// coverage counts and tallied separately.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCell {
    pub n: usize,
    pub alpha: f64,
    pub replications: usize,
    pub valid: usize,
    pub simultaneous: usize,
    pub region: usize,
    pub individual: Vec<usize>,
    pub nonlinear: usize,
    pub degenerate: usize,
    pub non_invertible: usize,
    pub solver_failures: usize,
    pub region_failures: usize,
    /// Averages of the interval endpoints over valid replications.
    pub mean_simultaneous: (Vec<f64>, Vec<f64>),
    pub mean_individual: (Vec<f64>, Vec<f64>),
}

impl CoverageCell {
    pub fn failures(&self) -> usize {
        self.non_invertible + self.solver_failures + self.region_failures
    }

    pub fn simultaneous_rate(&self) -> f64 {
        self.simultaneous as f64 / self.valid.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageReport {
    pub cells: Vec<CoverageCell>,
}

impl CoverageReport {
    pub fn cell(&self, n: usize, alpha: f64) -> Option<&CoverageCell> {
        self.cells.iter().find(|c| c.n == n && c.alpha == alpha)
    }

    /// Largest failure share over all cells.
    pub fn worst_failure_rate(&self) -> f64 {
        self.cells.iter().map(|c| c.failures() as f64 / c.replications.max(1) as f64).fold(0.0, f64::max)
    }
}

/// Sorted squared distances against `χ²_q` quantiles at `(j − ½)/R`.
#[derive(Debug, Clone, PartialEq)]
pub struct QqData {
    pub n: usize,
    pub dof: u32,
    pub quantiles: Vec<f64>,
    pub distances: Vec<f64>,
}

impl QqData {
    pub fn from_distances(n: usize, dof: u32, mut distances: Vec<f64>) -> Self {
        distances.sort_by(f64::total_cmp);
        let r = distances.len() as f64;
        let quantiles = (1..=distances.len()).map(|j| chi2_quantile(dof, 1.0 - (j as f64 - 0.5) / r)).collect();
        QqData { n, dof, quantiles, distances }
    }

    /// Least-squares slope of distance on quantile through the origin.
    pub fn slope(&self) -> f64 {
        let sxy: f64 = self.quantiles.iter().zip(&self.distances).map(|(x, y)| x * y).sum();
        let sxx: f64 = self.quantiles.iter().map(|x| x * x).sum();
        sxy / sxx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub truth: Truth,
    pub report: CoverageReport,
    pub qq: Vec<QqData>,
    pub records: Vec<ReplicationRecord>,
}

/// All replications for every sample size, on the current rayon pool.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<ExperimentOutput, SolverError> {
    let truth = true_solution(cfg)?;
    let model = cfg.model();
    let s = cfg.feasible_set().expect("validated");
    let mut records = Vec::with_capacity(cfg.sample_sizes.len() * cfg.replications);
    let mut report = CoverageReport::default();
    let mut qq = Vec::new();
    for &n in &cfg.sample_sizes {
        let batch: Vec<ReplicationRecord> =
            (0..cfg.replications).into_par_iter().map(|r| replicate(&model, &s, cfg, &truth, n, r)).collect();
        for &alpha in &cfg.alphas {
            report.cells.push(tally(n, alpha, &batch, &truth, cfg.alphas.len()));
        }
        let distances: Vec<f64> = batch
            .iter()
            .filter_map(|rec| match &rec.outcome {
                Outcome::Solved(inf) if inf.distance_sq.is_finite() => Some(inf.distance_sq),
                _ => None,
            })
            .collect();
        if !distances.is_empty() {
            qq.push(QqData::from_distances(n, model.dim() as u32, distances));
        }
        records.extend(batch);
    }
    Ok(ExperimentOutput { truth, report, qq, records })
}

fn tally(n: usize, alpha: f64, batch: &[ReplicationRecord], truth: &Truth, levels: usize) -> CoverageCell {
    let q = truth.z0.len();
    let mut cell = CoverageCell {
        n,
        alpha,
        replications: batch.len(),
        valid: 0,
        simultaneous: 0,
        region: 0,
        individual: vec![0; q],
        nonlinear: 0,
        degenerate: 0,
        non_invertible: 0,
        solver_failures: 0,
        region_failures: 0,
        mean_simultaneous: (vec![0.0; q], vec![0.0; q]),
        mean_individual: (vec![0.0; q], vec![0.0; q]),
    };
    for rec in batch {
        let inf = match &rec.outcome {
            Outcome::Solved(inf) => inf,
            Outcome::SolverFailed(_) => {
                cell.solver_failures += 1;
                continue;
            }
            Outcome::NonInvertible { .. } => {
                cell.non_invertible += 1;
                continue;
            }
            Outcome::RegionFailed(_) => {
                cell.region_failures += 1;
                continue;
            }
        };
        debug_assert_eq!(inf.levels.len(), levels);
        let level = inf.levels.iter().find(|l| l.alpha == alpha).expect("every level computed");
        cell.valid += 1;
        cell.nonlinear += usize::from(!inf.is_linear);
        cell.degenerate += usize::from(!inf.full_rank);
        cell.simultaneous += usize::from(level.simultaneous_covers(&truth.z0));
        cell.region += usize::from(level.region_covers);
        for j in 0..q {
            cell.individual[j] += usize::from(level.individual.covers(j, truth.z0[j]));
            cell.mean_simultaneous.0[j] += level.simultaneous.lower[j];
            cell.mean_simultaneous.1[j] += level.simultaneous.upper[j];
            cell.mean_individual.0[j] += level.individual.lower[j];
            cell.mean_individual.1[j] += level.individual.upper[j];
        }
    }
    let scale = 1.0 / cell.valid.max(1) as f64;
    for v in [
        &mut cell.mean_simultaneous.0,
        &mut cell.mean_simultaneous.1,
        &mut cell.mean_individual.0,
        &mut cell.mean_individual.1,
    ] {
        v.iter_mut().for_each(|x| *x *= scale);
    }
    cell
}
