//! CSV artifacts and the run manifest.

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use serde::Serialize;
use svi_core::inference::confidence_region;
use svi_core::{CovarianceEstimate, NormalMapDerivative};

use crate::config::ExperimentConfig;
use crate::ellipse::{boundary_svg, emit_ellipse_boundary, write_boundary_csv, Boundary};
use crate::experiment::{CoverageReport, ExperimentOutput, Outcome, QqData, ReplicationRecord};
use crate::limiting::{condition_label, LimitingRow};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    File::create(path).map(BufWriter::new).map_err(|source| OutputError::Io { path: path.to_owned(), source })
}

fn csv_file<F>(dir: &Path, name: &str, body: F) -> Result<String, OutputError>
where
    F: FnOnce(&mut csv::Writer<BufWriter<File>>) -> csv::Result<()>,
{
    let path = dir.join(name);
    let mut w = csv::Writer::from_writer(create(&path)?);
    body(&mut w).and_then(|_| w.flush().map_err(csv::Error::from)).map_err(|source| OutputError::Csv { path, source })?;
    Ok(name.to_owned())
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn indexed(prefix: &str, q: usize) -> Vec<String> {
    (1..=q).map(|j| format!("{prefix}{j}")).collect()
}

pub fn write_coverage_csv<W: io::Write>(w: &mut csv::Writer<W>, report: &CoverageReport, q: usize) -> csv::Result<()> {
    let mut header: Vec<String> =
        ["n", "alpha", "replications", "valid", "simultaneous", "region"].map(String::from).to_vec();
    header.extend(indexed("individual_z", q));
    header.extend(["nonlinear", "degenerate", "non_invertible", "solver_failures", "region_failures"].map(String::from));
    w.write_record(&header)?;
    for c in &report.cells {
        let mut row = vec![
            c.n.to_string(),
            fmt(c.alpha),
            c.replications.to_string(),
            c.valid.to_string(),
            c.simultaneous.to_string(),
            c.region.to_string(),
        ];
        row.extend(c.individual.iter().map(usize::to_string));
        row.extend([c.nonlinear, c.degenerate, c.non_invertible, c.solver_failures, c.region_failures].map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    Ok(())
}

pub fn write_qq_csv<W: io::Write>(w: &mut csv::Writer<W>, qq: &[QqData]) -> csv::Result<()> {
    w.write_record(["n", "rank", "quantile", "distance_sq"])?;
    for d in qq {
        for (k, (x, y)) in d.quantiles.iter().zip(&d.distances).enumerate() {
            w.write_record([d.n.to_string(), (k + 1).to_string(), fmt(*x), fmt(*y)])?;
        }
    }
    Ok(())
}

/// Average interval endpoints per `(n, α)`.
pub fn write_mean_intervals_csv<W: io::Write>(w: &mut csv::Writer<W>, report: &CoverageReport) -> csv::Result<()> {
    w.write_record(["n", "alpha", "coord", "kind", "lo", "hi"])?;
    for c in &report.cells {
        for (kind, (lo, hi)) in [("sim", &c.mean_simultaneous), ("ind", &c.mean_individual)] {
            for j in 0..lo.len() {
                w.write_record([c.n.to_string(), fmt(c.alpha), format!("z{}", j + 1), kind.to_owned(), fmt(lo[j]), fmt(hi[j])])?;
            }
        }
    }
    Ok(())
}

/// One row per replication: `zₙ`, `xₙ`, flattened `M` and `Σₙ`, and the
/// coverage flags at the first α.
pub fn write_replications_csv<W: io::Write>(
    w: &mut csv::Writer<W>,
    records: &[ReplicationRecord],
    z0: &[f64],
) -> csv::Result<()> {
    let q = z0.len();
    let mut header: Vec<String> =
        ["n", "replication", "status", "iterations", "linear", "full_rank", "distance_sq", "sim_covers", "region_covers"]
            .map(String::from)
            .to_vec();
    header.extend(indexed("z", q));
    header.extend(indexed("x", q));
    header.extend((1..=q).flat_map(|i| (1..=q).map(move |j| format!("m{i}_{j}"))));
    header.extend((1..=q).flat_map(|i| (1..=q).map(move |j| format!("sigma{i}_{j}"))));
    w.write_record(&header)?;
    for rec in records {
        let mut row = vec![rec.n.to_string(), rec.index.to_string(), rec.outcome.label().to_owned()];
        match &rec.outcome {
            Outcome::Solved(inf) => {
                let first = &inf.levels[0];
                row.extend([
                    inf.iterations.to_string(),
                    inf.is_linear.to_string(),
                    inf.full_rank.to_string(),
                    fmt(inf.distance_sq),
                    first.simultaneous_covers(z0).to_string(),
                    first.region_covers.to_string(),
                ]);
                row.extend(inf.z.iter().chain(&inf.x).map(|v| fmt(*v)));
                row.extend(inf.derivative.as_slice().iter().chain(inf.covariance.as_slice()).map(|v| fmt(*v)));
            }
            other => {
                row.extend(std::iter::repeat_n(String::new(), 6));
                let z = match other {
                    Outcome::NonInvertible { z } => Some(z),
                    _ => None,
                };
                row.extend((0..q).map(|j| z.map_or(String::new(), |z| fmt(z[j]))));
                row.extend(std::iter::repeat_n(String::new(), q + 2 * q * q));
            }
        }
        w.write_record(&row)?;
    }
    Ok(())
}

pub fn write_limiting_csv<W: io::Write>(w: &mut csv::Writer<W>, rows: &[LimitingRow]) -> csv::Result<()> {
    w.write_record(["alpha", "coord", "cells", "coherent", "condition", "coverage", "std_error"])?;
    for r in rows {
        w.write_record([
            fmt(r.alpha),
            format!("z{}", r.coord + 1),
            r.cells.to_string(),
            r.coherent.to_string(),
            condition_label(r.condition).to_owned(),
            fmt(r.coverage),
            fmt(r.std_error),
        ])?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_hash: String,
    threads: usize,
    files: Vec<String>,
    worst_failure_rate: f64,
}

fn write_manifest(
    dir: &Path,
    cfg: &ExperimentConfig,
    command: &str,
    threads: usize,
    files: Vec<String>,
    worst_failure_rate: f64,
) -> Result<(), OutputError> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        threads,
        files,
        worst_failure_rate,
    };
    let path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|source| OutputError::Io { path, source })
}

fn ensure_dir(dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.to_owned(), source })
}

/// Writes the artifacts enabled in `cfg.outputs` plus `config.toml` and
/// `manifest.toml`. Returns the file names written.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &ExperimentOutput,
    threads: usize,
) -> Result<Vec<String>, OutputError> {
    ensure_dir(dir)?;
    let q = out.truth.z0.len();
    let mut files = Vec::new();
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, cfg.to_toml()).map_err(|source| OutputError::Io { path: cfg_path, source })?;
    files.push("config.toml".to_owned());
    if cfg.outputs.coverage {
        files.push(csv_file(dir, "coverage.csv", |w| write_coverage_csv(w, &out.report, q))?);
        files.push(csv_file(dir, "intervals.csv", |w| write_mean_intervals_csv(w, &out.report))?);
    }
    if cfg.outputs.qq {
        files.push(csv_file(dir, "qq.csv", |w| write_qq_csv(w, &out.qq))?);
    }
    files.push(csv_file(dir, "replications.csv", |w| write_replications_csv(w, &out.records, &out.truth.z0))?);
    if cfg.outputs.ellipse && q == 2 {
        for &n in &cfg.sample_sizes {
            if let Some(curves) = first_replication_curves(cfg, &out.records, n) {
                let name = format!("ellipse_n{n}.csv");
                let path = dir.join(&name);
                write_boundary_csv(create(&path)?, &curves).map_err(|source| OutputError::Csv { path, source })?;
                files.push(name);
                let name = format!("ellipse_n{n}.svg");
                let path = dir.join(&name);
                let svg = boundary_svg(&curves, Some([out.truth.z0[0], out.truth.z0[1]]));
                fs::write(&path, svg).map_err(|source| OutputError::Io { path, source })?;
                files.push(name);
            }
        }
    }
    let mut listed = files.clone();
    listed.push("manifest.toml".to_owned());
    write_manifest(dir, cfg, "run", threads, listed.clone(), out.report.worst_failure_rate())?;
    Ok(listed)
}

/// Boundaries at every α for the first successful replication at size `n`.
fn first_replication_curves(cfg: &ExperimentConfig, records: &[ReplicationRecord], n: usize) -> Option<Vec<Boundary>> {
    let inf = records.iter().filter(|r| r.n == n).find_map(|r| match &r.outcome {
        Outcome::Solved(inf) if inf.full_rank => Some(inf),
        _ => None,
    })?;
    let d = NormalMapDerivative::from_matrix(inf.z.clone(), inf.derivative.clone());
    let sigma = CovarianceEstimate::from_matrix(inf.covariance.clone(), n);
    let curves = cfg
        .alphas
        .iter()
        .zip(&inf.levels)
        .filter_map(|(&alpha, level)| {
            let region = confidence_region(&d, &sigma, n, alpha, cfg.rho0, 0.0).ok()?;
            Some(Boundary {
                level: 1.0 - alpha,
                points: emit_ellipse_boundary(&region, 200).ok()?,
                enclosing: Some(level.simultaneous.clone()),
            })
        })
        .collect();
    Some(curves)
}

pub fn write_limiting_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    rows: &[LimitingRow],
    threads: usize,
) -> Result<Vec<String>, OutputError> {
    ensure_dir(dir)?;
    let mut files = vec![csv_file(dir, "limiting.csv", |w| write_limiting_csv(w, rows))?];
    files.push("manifest.toml".to_owned());
    write_manifest(dir, cfg, "limiting", threads, files.clone(), 0.0)?;
    Ok(files)
}

pub fn write_fixture_outputs(
    dir: &Path,
    report: &crate::fixture::FixtureReport,
) -> Result<Vec<String>, OutputError> {
    ensure_dir(dir)?;
    let path = dir.join("intervals.csv");
    crate::fixture::write_intervals_csv(create(&path)?, &report.levels).map_err(|source| OutputError::Csv { path, source })?;
    let mut files = vec!["intervals.csv".to_owned()];
    if report.derivative.rows() == 2 {
        let curves: Vec<Boundary> = report
            .levels
            .iter()
            .filter_map(|l| {
                Some(Boundary {
                    level: 1.0 - l.alpha,
                    points: emit_ellipse_boundary(&l.region, 200).ok()?,
                    enclosing: Some(l.simultaneous.clone()),
                })
            })
            .collect();
        if !curves.is_empty() {
            let path = dir.join("ellipse.csv");
            write_boundary_csv(create(&path)?, &curves).map_err(|source| OutputError::Csv { path, source })?;
            let path = dir.join("ellipse.svg");
            fs::write(&path, boundary_svg(&curves, None)).map_err(|source| OutputError::Io { path, source })?;
            files.extend(["ellipse.csv".to_owned(), "ellipse.svg".to_owned()]);
        }
    }
    Ok(files)
}
