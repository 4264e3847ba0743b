//! Zeros of the normal map `(f)_S(z) = f(Π_S(z)) + z − Π_S(z)` for affine `f`
//! and a box `S`.
//!
//! [`solve`] is a damped semismooth Newton method: at each iterate the
//! boundary coordinates are committed to a cell, the cell's matrix
//! `J A + I − A` gives the Newton direction, and an Armijo search on the
//! residual norm picks the step. When that direction fails to decrease the
//! residual the remaining cells at the iterate are tried in turn; under
//! coherent orientation one of them carries the true B-derivative inverse.
//!
//! [`solve_bruteforce`] enumerates active sets and serves as an independent
//! oracle.

use alloc::vec::Vec;

use crate::box_geometry::{BoxSet, Cell, FacePattern, DEFAULT_CELL_CAP};
use crate::numerics::{axpy, norm2, norm_inf, LuDecomposition, Matrix};
use crate::svi_model::SaaMap;

/// Largest dimension [`solve_bruteforce`] accepts.
pub const BRUTEFORCE_MAX_DIM: usize = 14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("Newton matrix is singular on every cell at the iterate (pattern {pattern:?})")]
    SingularNewtonMatrix { pattern: FacePattern },
    #[error("enumeration limited to dimension {max}, got {q}")]
    DimensionTooLarge { q: usize, max: usize },
    #[error("dimension mismatch: map has {map}, box has {set}, start has {start}")]
    DimensionMismatch { map: usize, set: usize, start: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop once `‖(f)_S(z)‖₂` is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Sufficient-decrease constant of the Armijo rule.
    pub armijo_slope: f64,
    /// Step halvings tried per direction.
    pub max_halvings: usize,
    /// Boundary band for pattern detection; `None` uses
    /// [`BoxSet::default_tolerance`] at the current iterate.
    pub pattern_tolerance: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-10, max_iterations: 100, armijo_slope: 1e-4, max_halvings: 50, pattern_tolerance: None }
    }
}

impl SolverConfig {
    pub fn tolerance_at(&self, z: &[f64]) -> f64 {
        self.pattern_tolerance.unwrap_or_else(|| BoxSet::default_tolerance(z))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub pattern: FacePattern,
    /// No coordinate of `z` sits on a cell boundary.
    pub is_cell_interior: bool,
    /// `J A + I − A` is invertible for the middle-resolved cell at `z`.
    pub newton_matrix_invertible: bool,
}

impl SolveResult {
    fn at(f: &SaaMap, s: &BoxSet, z: Vec<f64>, iterations: usize, tol: f64) -> Self {
        let x = s.project(&z);
        let residual = norm2(&normal_map_eval(f, s, &z));
        let pattern = s.classify(&z, tol);
        let m = pattern.resolve_middle().selection_matrix().normal_map_matrix(&f.jacobian);
        SolveResult {
            is_cell_interior: pattern.is_cell_interior(),
            newton_matrix_invertible: LuDecomposition::new(&m).is_ok(),
            z,
            x,
            residual,
            iterations,
            pattern,
        }
    }
}

/// `f(Π_S(z)) + z − Π_S(z)`
pub fn normal_map_eval(f: &SaaMap, s: &BoxSet, z: &[f64]) -> Vec<f64> {
    let x = s.project(z);
    let mut out = f.eval(&x);
    for ((o, zi), xi) in out.iter_mut().zip(z).zip(&x) {
        *o += zi - xi;
    }
    out
}

/// Starting point `−b` clipped to `[−10⁶, 10⁶]`, or the origin when `b` is
/// not finite.
pub fn default_start(f: &SaaMap) -> Vec<f64> {
    if f.offset.iter().all(|b| b.is_finite()) {
        f.offset.iter().map(|b| (-b).clamp(-1e6, 1e6)).collect()
    } else {
        alloc::vec![0.0; f.dim()]
    }
}

pub fn solve(f: &SaaMap, s: &BoxSet, cfg: &SolverConfig, z_init: &[f64]) -> Result<SolveResult, SolverError> {
    let q = f.dim();
    if s.dim() != q || z_init.len() != q {
        return Err(SolverError::DimensionMismatch { map: q, set: s.dim(), start: z_init.len() });
    }
    let mut z = z_init.to_vec();
    let mut r = normal_map_eval(f, s, &z);
    let mut norm = norm2(&r);

    for iter in 0..cfg.max_iterations {
        if norm <= cfg.tolerance {
            let tol = cfg.tolerance_at(&z);
            return Ok(SolveResult::at(f, s, z, iter, tol));
        }
        let pattern = s.classify(&z, cfg.tolerance_at(&z));
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();

        let mut any_invertible = false;
        let mut fallback: Option<Vec<f64>> = None;
        let mut accepted = None;
        for cell in candidate_cells(&pattern) {
            let m = cell.selection_matrix().normal_map_matrix(&f.jacobian);
            let Ok(lu) = LuDecomposition::new(&m) else { continue };
            any_invertible = true;
            let d = lu.solve_vec(&rhs);
            if let Some(step) = armijo(f, s, cfg, &z, &d, norm) {
                accepted = Some(step);
                break;
            }
            if fallback.is_none() {
                fallback = Some(axpy(&z, 1.0, &d));
            }
        }
        if !any_invertible {
            return Err(SolverError::SingularNewtonMatrix { pattern });
        }
        // a full step from the committed cell keeps the method moving when no
        // direction passes the line search; max_iterations bounds cycling
        z = match accepted {
            Some(next) => next,
            None => fallback.expect("an invertible cell produced a direction"),
        };
        r = normal_map_eval(f, s, &z);
        norm = norm2(&r);
    }
    if norm <= cfg.tolerance {
        let tol = cfg.tolerance_at(&z);
        return Ok(SolveResult::at(f, s, z, cfg.max_iterations, tol));
    }
    Err(SolverError::MaxIterations { iterations: cfg.max_iterations, residual: norm })
}

/// The middle-resolved cell first, then every other cell containing the
/// point.
fn candidate_cells(pattern: &FacePattern) -> Vec<Cell> {
    let first = pattern.resolve_middle();
    let mut cells = alloc::vec![first.clone()];
    if let Ok(all) = pattern.cells(DEFAULT_CELL_CAP) {
        cells.extend(all.into_iter().filter(|c| *c != first));
    }
    cells
}

fn armijo(f: &SaaMap, s: &BoxSet, cfg: &SolverConfig, z: &[f64], d: &[f64], norm: f64) -> Option<Vec<f64>> {
    let mut t = 1.0;
    for _ in 0..=cfg.max_halvings {
        let trial = axpy(z, t, d);
        let trial_norm = norm2(&normal_map_eval(f, s, &trial));
        if trial_norm <= (1.0 - cfg.armijo_slope * t) * norm {
            return Some(trial);
        }
        t *= 0.5;
    }
    None
}

#[derive(Clone, Copy, PartialEq)]
enum Status {
    AtLower,
    Free,
    AtUpper,
}

/// Every zero of the normal map, found by enumerating which bound (if any)
/// each coordinate of `x` sits on.
///
/// For each assignment the free coordinates solve `f(x)_F = 0`, then the
/// bound and multiplier signs are checked. Assignments whose free block is
/// singular are skipped.
pub fn solve_bruteforce(f: &SaaMap, s: &BoxSet) -> Result<Vec<SolveResult>, SolverError> {
    let q = f.dim();
    if q > BRUTEFORCE_MAX_DIM {
        return Err(SolverError::DimensionTooLarge { q, max: BRUTEFORCE_MAX_DIM });
    }
    if s.dim() != q {
        return Err(SolverError::DimensionMismatch { map: q, set: s.dim(), start: q });
    }
    let options: Vec<Vec<Status>> = (0..q)
        .map(|j| {
            let (lo, up) = (s.lower()[j], s.upper()[j]);
            if lo == up {
                return alloc::vec![Status::AtLower];
            }
            let mut o = Vec::with_capacity(3);
            if lo.is_finite() {
                o.push(Status::AtLower);
            }
            o.push(Status::Free);
            if up.is_finite() {
                o.push(Status::AtUpper);
            }
            o
        })
        .collect();

    let mut solutions: Vec<SolveResult> = Vec::new();
    let mut counter = alloc::vec![0usize; q];
    loop {
        let status: Vec<Status> = counter.iter().zip(&options).map(|(&c, o)| o[c]).collect();
        if let Some(z) = candidate(f, s, &status) {
            let dup = solutions.iter().any(|sol| {
                let scale = 1.0 + norm_inf(&sol.z);
                sol.z.iter().zip(&z).all(|(a, b)| (a - b).abs() <= 1e-9 * scale)
            });
            if !dup {
                let tol = BoxSet::default_tolerance(&z);
                solutions.push(SolveResult::at(f, s, z, 0, tol));
            }
        }
        // mixed-radix increment
        let mut k = 0;
        loop {
            if k == q {
                return Ok(solutions);
            }
            counter[k] += 1;
            if counter[k] < options[k].len() {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
    }
}

fn candidate(f: &SaaMap, s: &BoxSet, status: &[Status]) -> Option<Vec<f64>> {
    let q = f.dim();
    let free: Vec<usize> = (0..q).filter(|&j| status[j] == Status::Free).collect();
    let mut x: Vec<f64> = (0..q)
        .map(|j| match status[j] {
            Status::AtLower => s.lower()[j],
            Status::AtUpper => s.upper()[j],
            Status::Free => 0.0,
        })
        .collect();
    if !free.is_empty() {
        let nf = free.len();
        let mut block = Matrix::zeros(nf, nf);
        let mut rhs = alloc::vec![0.0; nf];
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                block[(a, b)] = f.jacobian[(i, j)];
            }
            let fixed: f64 = (0..q).filter(|j| status[*j] != Status::Free).map(|j| f.jacobian[(i, j)] * x[j]).sum();
            rhs[a] = -(f.offset[i] + fixed);
        }
        let lu = LuDecomposition::new(&block).ok()?;
        for (a, v) in lu.solve_vec(&rhs).into_iter().enumerate() {
            x[free[a]] = v;
        }
    }
    let w = f.eval(&x);
    let scale = 1.0 + norm_inf(&x) + norm_inf(&w);
    let tol = 1e-9 * scale;
    for j in 0..q {
        let (lo, up) = (s.lower()[j], s.upper()[j]);
        let ok = match status[j] {
            Status::Free => x[j] >= lo - tol && x[j] <= up + tol,
            _ if lo == up => true,
            Status::AtLower => w[j] >= -tol,
            Status::AtUpper => w[j] <= tol,
        };
        if !ok {
            return None;
        }
    }
    let x = s.project(&x);
    Some(x.iter().zip(&w).map(|(xi, wi)| xi - wi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svi_model::AffineScenarioModel;
    use alloc::vec;

    fn lcp_map(b: [f64; 2]) -> SaaMap {
        SaaMap::new(Matrix::from_rows(&[[1.0, 0.5], [1.0, 2.0]]), b.to_vec()).unwrap()
    }

    #[test]
    fn normal_map_examples() {
        let s = BoxSet::nonnegative_orthant(2);
        let f0 = AffineScenarioModel::two_dim_benchmark().true_map();
        assert_eq!(normal_map_eval(&f0, &s, &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(normal_map_eval(&f0, &s, &[2.0, 1.0]), f0.eval(&[2.0, 1.0]));
        let ident = SaaMap::new(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        // f((0,2)) + (−1,0) = (0,2) + (−1,0)
        assert_eq!(normal_map_eval(&ident, &s, &[-1.0, 2.0]), vec![-1.0, 2.0]);
    }

    #[test]
    fn true_problem_solves_to_origin() {
        let s = BoxSet::nonnegative_orthant(2);
        let f0 = AffineScenarioModel::two_dim_benchmark().true_map();
        let res = solve(&f0, &s, &SolverConfig::default(), &[1.0, 1.0]).unwrap();
        assert!(res.residual <= 1e-10);
        assert!(norm_inf(&res.z) <= 1e-10);
    }

    #[test]
    fn interior_stationary_point() {
        let s = BoxSet::nonnegative_orthant(2);
        let f = lcp_map([-1.0, -2.0]);
        let res = solve(&f, &s, &SolverConfig::default(), &default_start(&f)).unwrap();
        for v in res.x.iter().chain(&res.z) {
            assert!((v - 2.0 / 3.0).abs() < 1e-10);
        }
        let all = solve_bruteforce(&f, &s).unwrap();
        assert_eq!(all.len(), 1);
        assert!((all[0].x[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn printed_saa_instance() {
        let s = BoxSet::nonnegative_orthant(2);
        let f = SaaMap::new(Matrix::from_rows(&[[0.9292, 0.5400], [0.7536, 2.1111]]), vec![-0.1319, -0.2906]).unwrap();
        let res = solve(&f, &s, &SolverConfig::default(), &default_start(&f)).unwrap();
        assert!((res.x[0] - 0.0782).abs() < 5e-4);
        assert!((res.x[1] - 0.1097).abs() < 5e-4);
        assert!(res.is_cell_interior && res.newton_matrix_invertible);
    }

    #[test]
    fn bruteforce_examples() {
        let s = BoxSet::nonnegative_orthant(2);
        let f0 = AffineScenarioModel::two_dim_benchmark().true_map();
        let sols = solve_bruteforce(&f0, &s).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].x, vec![0.0, 0.0]);

        let f = SaaMap::new(Matrix::identity(2), vec![1.0, 1.0]).unwrap();
        let sols = solve_bruteforce(&f, &s).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].x, vec![0.0, 0.0]);
        assert_eq!(sols[0].z, vec![-1.0, -1.0]);

        let big = SaaMap::new(Matrix::identity(15), vec![0.0; 15]).unwrap();
        assert_eq!(
            solve_bruteforce(&big, &BoxSet::nonnegative_orthant(15)).unwrap_err(),
            SolverError::DimensionTooLarge { q: 15, max: 14 }
        );
    }

    #[test]
    fn bounded_box_with_fixed_coordinate() {
        let s = BoxSet::new(vec![0.0, 1.0, -1.0], vec![1.0, 1.0, 1.0]).unwrap();
        let f = SaaMap::new(
            Matrix::from_rows(&[[2.0, 0.5, 0.0], [0.5, 3.0, 0.2], [0.0, 0.2, 1.0]]),
            vec![-5.0, 0.3, 0.4],
        )
        .unwrap();
        let newton = solve(&f, &s, &SolverConfig::default(), &default_start(&f)).unwrap();
        let oracle = solve_bruteforce(&f, &s).unwrap();
        assert_eq!(oracle.len(), 1);
        for (a, b) in newton.z.iter().zip(&oracle[0].z) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(newton.x[0], 1.0);
        assert_eq!(newton.x[1], 1.0);
    }

    #[test]
    fn singular_newton_matrix_is_reported() {
        let s = BoxSet::nonnegative_orthant(2);
        let f = SaaMap::new(Matrix::zeros(2, 2), vec![-1.0, -1.0]).unwrap();
        let err = solve(&f, &s, &SolverConfig::default(), &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, SolverError::SingularNewtonMatrix { .. }));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let s = BoxSet::nonnegative_orthant(2);
        let f = lcp_map([-1.0, -2.0]);
        let cfg = SolverConfig { max_iterations: 0, ..SolverConfig::default() };
        assert!(matches!(solve(&f, &s, &cfg, &[5.0, -3.0]), Err(SolverError::MaxIterations { .. })));
    }
}
