//! Confidence regions and intervals for the true normal-map solution `z₀`,
//! built from an SAA solution `zₙ`.
//!
//! Everything is driven by `M = d(fₙ)_S(zₙ)`. On the cell containing `zₙ` it
//! is the matrix `J̄ A + I − A`, and with the sample covariance `Σₙ` it
//! gives the region
//!
//! ```text
//! { z : n [M (z − zₙ)]ᵀ Σₙ⁻¹ [M (z − zₙ)] ≤ χ²_q(α) }
//! ```
//!
//! When `Σₙ` is (numerically) singular the inverse is replaced by
//! `(Uₙ)₁ᵀ Dₙ⁻¹ (Uₙ)₁` from the leading eigenpairs and the remaining
//! directions are confined to a slab of half-width `ε`.
//!
//! The second half of the module handles the limiting law of
//! `√n (zₙ − z₀)`: the piecewise-linear map `L_K` with one matrix
//! `Mᵢ = L Aᵢ + I − Aᵢ` per cell at `z₀`. It is used to predict the limiting
//! coverage of the individual intervals.

use alloc::vec::Vec;

use crate::box_geometry::{BoxSet, Cell, CoordTag, GeometryError, Piece, SelectionMatrix, DEFAULT_CELL_CAP};
use crate::numerics::{
    chi2_quantile, determinant, eig_sym, norm_inf, EigenDecomposition, LuDecomposition, Matrix, NumericsError,
    RngStream,
};
use crate::saa_solver::SolveResult;
use crate::svi_model::{CovarianceEstimate, SaaMap};

/// `ρ₀ = DEFAULT_RHO0_RATIO · λ_max(Σₙ)` unless the caller supplies one.
pub const DEFAULT_RHO0_RATIO: f64 = 1e-8;

/// Absolute band added to the slab test so that points built inside the
/// flat directions are not rejected for rounding noise.
const SLAB_ROUNDING: f64 = 1e-9;

/// Monte Carlo samples per sub-stream in [`limiting_individual_coverage`].
pub const COVERAGE_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error("d(f_n)_S(z_n) is not invertible")]
    NonInvertibleDerivative,
    #[error("sample covariance is singular (smallest eigenvalue {min_eigenvalue:e} at or below rho0 = {threshold:e})")]
    SingularCovariance { min_eigenvalue: f64, threshold: f64 },
    #[error("rho0 = {threshold:e} exceeds every eigenvalue of the covariance (largest {largest:e})")]
    ThresholdAboveAllEigenvalues { threshold: f64, largest: f64 },
    #[error("closed-form enclosing box only exists for full-rank regions and slab width 0")]
    UnsupportedRegion,
    #[error("selection matrix of cell {0} is singular")]
    SingularSelection(usize),
    #[error("no cell of the limiting map is consistent with the point")]
    NoConsistentCell,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `d(fₙ)_S(zₙ)` resolved to a single matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMapDerivative {
    pub base: Vec<f64>,
    pub pattern: crate::box_geometry::FacePattern,
    pub matrix: Matrix,
    /// `zₙ` is interior to one cell, so the B-derivative is this matrix.
    pub is_linear: bool,
    pub is_invertible: bool,
    /// `‖M‖_F ‖M⁻¹‖_F`, infinite when singular.
    pub condition: f64,
    inverse: Option<Matrix>,
}

impl NormalMapDerivative {
    /// Derivative given directly as a matrix, taken to be linear.
    pub fn from_matrix(base: Vec<f64>, matrix: Matrix) -> Self {
        let q = matrix.rows();
        let pattern = crate::box_geometry::FacePattern { tags: alloc::vec![CoordTag::Interior; q], tolerance: 0.0 };
        Self::build(base, pattern, matrix, true)
    }

    fn build(base: Vec<f64>, pattern: crate::box_geometry::FacePattern, matrix: Matrix, is_linear: bool) -> Self {
        let inverse = LuDecomposition::new(&matrix).ok().map(|lu| lu.inverse());
        let condition = inverse.as_ref().map_or(f64::INFINITY, |inv| matrix.frobenius_norm() * inv.frobenius_norm());
        NormalMapDerivative { base, pattern, is_invertible: inverse.is_some(), matrix, is_linear, condition, inverse }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn inverse(&self) -> Option<&Matrix> {
        self.inverse.as_ref()
    }

    /// `M⁻¹ Σ M⁻ᵀ`, the estimated covariance of `√n (zₙ − z₀)`.
    pub fn dispersion(&self, sigma: &Matrix) -> Option<Matrix> {
        let inv = self.inverse.as_ref()?;
        Some(inv.matmul(sigma).matmul(&inv.transpose()).symmetrized())
    }
}

/// `d(fₙ)_S(zₙ)` at a solver result. Boundary coordinates are resolved to
/// the middle piece and flagged through `is_linear = false`.
pub fn derivative_at(f: &SaaMap, s: &BoxSet, result: &SolveResult, tol: f64) -> NormalMapDerivative {
    derivative_at_point(f, s, &result.z, tol)
}

pub fn derivative_at_point(f: &SaaMap, s: &BoxSet, z: &[f64], tol: f64) -> NormalMapDerivative {
    let pattern = s.classify(z, tol);
    let m = pattern.resolve_middle().selection_matrix().normal_map_matrix(&f.jacobian);
    let linear = pattern.is_cell_interior();
    NormalMapDerivative::build(z.to_vec(), pattern, m, linear)
}

/// Default `ρ₀` for a covariance matrix.
pub fn default_rho0(eig: &EigenDecomposition) -> f64 {
    DEFAULT_RHO0_RATIO * eig.values.first().copied().unwrap_or(0.0).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionShape {
    /// `{z : (z − c)ᵀ Q (z − c) ≤ radius}` with `Q = MᵀΣₙ⁻¹M` and
    /// `radius = χ²_q(α)/n`.
    FullRank { shape: Matrix, radius: f64, dispersion: Matrix },
    /// Ellipsoid in the leading `rank` eigendirections of `Σₙ` with
    /// `radius = χ²_rank(α)/n`, plus `‖√n U₂ M (z − c)‖_∞ ≤ slab`.
    Degenerate { u1: Matrix, d: Vec<f64>, u2: Matrix, rank: usize, radius: f64, slab: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRegion {
    pub center: Vec<f64>,
    pub n: usize,
    pub alpha: f64,
    /// `M = d(fₙ)_S(zₙ)`
    pub derivative: Matrix,
    pub derivative_inverse: Matrix,
    /// The χ² critical value the statistic is compared against.
    pub critical: f64,
    pub shape: RegionShape,
}

impl ConfidenceRegion {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn is_full_rank(&self) -> bool {
        matches!(self.shape, RegionShape::FullRank { .. })
    }

    /// `n [M(z − c)]ᵀ P [M(z − c)]` with `P = Σₙ⁻¹` or `(Uₙ)₁ᵀDₙ⁻¹(Uₙ)₁`.
    pub fn statistic(&self, z: &[f64]) -> f64 {
        let diff: Vec<f64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let n = self.n as f64;
        match &self.shape {
            RegionShape::FullRank { shape, .. } => n * crate::numerics::dot(&diff, &shape.mul_vec(&diff)),
            RegionShape::Degenerate { u1, d, .. } => {
                let w = self.derivative.mul_vec(&diff);
                let proj = u1.mul_vec(&w);
                n * proj.iter().zip(d).map(|(p, di)| p * p / di).sum::<f64>()
            }
        }
    }

    /// `‖√n U₂ M (z − c)‖_∞`; zero for full-rank regions.
    pub fn slab_violation(&self, z: &[f64]) -> f64 {
        match &self.shape {
            RegionShape::FullRank { .. } => 0.0,
            RegionShape::Degenerate { u2, .. } => {
                let diff: Vec<f64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
                let w = self.derivative.mul_vec(&diff);
                libm::sqrt(self.n as f64) * norm_inf(&u2.mul_vec(&w))
            }
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        region_contains(self, z)
    }
}

/// Full-rank region. Fails when `Σₙ` has an eigenvalue at or below the
/// default `ρ₀` or `M` is singular.
pub fn region_fullrank(
    d: &NormalMapDerivative,
    sigma: &CovarianceEstimate,
    n: usize,
    alpha: f64,
) -> Result<ConfidenceRegion, InferenceError> {
    let eig = eig_sym(&sigma.matrix)?;
    region_fullrank_with(d, sigma, &eig, default_rho0(&eig), n, alpha)
}

fn region_fullrank_with(
    d: &NormalMapDerivative,
    sigma: &CovarianceEstimate,
    eig: &EigenDecomposition,
    rho0: f64,
    n: usize,
    alpha: f64,
) -> Result<ConfidenceRegion, InferenceError> {
    let q = d.dim();
    check_dim(q, sigma.dim())?;
    let inv = d.inverse().ok_or(InferenceError::NonInvertibleDerivative)?.clone();
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min <= rho0 || min <= 0.0 {
        return Err(InferenceError::SingularCovariance { min_eigenvalue: min, threshold: rho0 });
    }
    let sigma_lu = LuDecomposition::new(&sigma.matrix)?;
    let shape = d.matrix.transpose().matmul(&sigma_lu.solve(&d.matrix)?).symmetrized();
    let dispersion = d.dispersion(&sigma.matrix).expect("invertible");
    let critical = chi2_quantile(q as u32, alpha);
    Ok(ConfidenceRegion {
        center: d.base.clone(),
        n,
        alpha,
        derivative: d.matrix.clone(),
        derivative_inverse: inv,
        critical,
        shape: RegionShape::FullRank { shape, radius: critical / n as f64, dispersion },
    })
}

/// Region built from the eigenpairs of `Σₙ` at or above `ρ₀`; `slab = 0`
/// gives the equality-constrained variant.
pub fn region_degenerate(
    d: &NormalMapDerivative,
    sigma: &CovarianceEstimate,
    n: usize,
    alpha: f64,
    rho0: f64,
    slab: f64,
) -> Result<ConfidenceRegion, InferenceError> {
    assert!(rho0 > 0.0, "rho0 must be positive");
    assert!(slab >= 0.0, "slab width must be nonnegative");
    let q = d.dim();
    check_dim(q, sigma.dim())?;
    let inv = d.inverse().ok_or(InferenceError::NonInvertibleDerivative)?.clone();
    let eig = eig_sym(&sigma.matrix)?;
    let rank = eig.values.iter().take_while(|&&v| v >= rho0).count();
    if rank == 0 {
        return Err(InferenceError::ThresholdAboveAllEigenvalues {
            threshold: rho0,
            largest: eig.values.first().copied().unwrap_or(0.0),
        });
    }
    let critical = chi2_quantile(rank as u32, alpha);
    Ok(ConfidenceRegion {
        center: d.base.clone(),
        n,
        alpha,
        derivative: d.matrix.clone(),
        derivative_inverse: inv,
        critical,
        shape: RegionShape::Degenerate {
            u1: eig.vectors.row_block(0, rank),
            d: eig.values[..rank].to_vec(),
            u2: eig.vectors.row_block(rank, q),
            rank,
            radius: critical / n as f64,
            slab,
        },
    })
}

/// Full-rank region when every eigenvalue of `Σₙ` exceeds `ρ₀`, the
/// degenerate one otherwise. `rho0 = None` uses [`DEFAULT_RHO0_RATIO`].
pub fn confidence_region(
    d: &NormalMapDerivative,
    sigma: &CovarianceEstimate,
    n: usize,
    alpha: f64,
    rho0: Option<f64>,
    slab: f64,
) -> Result<ConfidenceRegion, InferenceError> {
    let eig = eig_sym(&sigma.matrix)?;
    let rho0 = rho0.unwrap_or_else(|| default_rho0(&eig));
    match region_fullrank_with(d, sigma, &eig, rho0, n, alpha) {
        Err(InferenceError::SingularCovariance { .. }) if rho0 > 0.0 => region_degenerate(d, sigma, n, alpha, rho0, slab),
        other => other,
    }
}

pub fn region_contains(region: &ConfidenceRegion, z: &[f64]) -> bool {
    if region.statistic(z) > region.critical {
        return false;
    }
    match &region.shape {
        RegionShape::FullRank { .. } => true,
        RegionShape::Degenerate { slab, .. } => {
            let diff: Vec<f64> = z.iter().zip(&region.center).map(|(a, b)| a - b).collect();
            let scale = libm::sqrt(region.n as f64) * norm_inf(&region.derivative.mul_vec(&diff));
            region.slab_violation(z) <= slab + SLAB_ROUNDING * (1.0 + scale)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalKind {
    Simultaneous,
    Individual,
}

impl IntervalKind {
    pub fn short_name(self) -> &'static str {
        match self {
            IntervalKind::Simultaneous => "sim",
            IntervalKind::Individual => "ind",
        }
    }
}

/// One closed interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub kind: IntervalKind,
    /// Confidence level `1 − α`.
    pub level: f64,
}

impl IntervalSet {
    fn centered(center: &[f64], half: &[f64], kind: IntervalKind, alpha: f64) -> Self {
        IntervalSet {
            lower: center.iter().zip(half).map(|(c, h)| c - h).collect(),
            upper: center.iter().zip(half).map(|(c, h)| c + h).collect(),
            kind,
            level: 1.0 - alpha,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn covers(&self, j: usize, v: f64) -> bool {
        self.lower[j] <= v && v <= self.upper[j]
    }

    /// Every coordinate covered: the box contains `z`.
    pub fn covers_all(&self, z: &[f64]) -> bool {
        (0..self.dim()).all(|j| self.covers(j, z[j]))
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (u - l)).collect()
    }
}

/// Minimum enclosing box of a full-rank region or of a degenerate region
/// with zero slab width.
pub fn simultaneous_intervals(region: &ConfidenceRegion) -> Result<IntervalSet, InferenceError> {
    let half: Vec<f64> = match &region.shape {
        RegionShape::FullRank { radius, dispersion, .. } => {
            dispersion.diagonal().iter().map(|g| libm::sqrt(radius * g.max(0.0))).collect()
        }
        RegionShape::Degenerate { u1, d, radius, slab, .. } => {
            if *slab != 0.0 {
                return Err(InferenceError::UnsupportedRegion);
            }
            // z − c = M⁻¹ U₁ᵀ D^{1/2} u · √radius with ‖u‖ ≤ 1
            let sqrt_d: Vec<f64> = d.iter().map(|v| libm::sqrt(*v)).collect();
            let b = region.derivative_inverse.matmul(&u1.transpose()).matmul(&Matrix::from_diagonal(&sqrt_d));
            (0..b.rows()).map(|j| libm::sqrt(*radius) * crate::numerics::norm2(b.row(j))).collect()
        }
    };
    Ok(IntervalSet::centered(&region.center, &half, IntervalKind::Simultaneous, region.alpha))
}

/// `(zₙ)_j ± √χ²₁(α) · r_nj / √n` with `r_nj = √(M⁻¹ΣₙM⁻ᵀ)_jj`, and
/// `r_nj = 0` when `M` is singular.
pub fn individual_intervals(d: &NormalMapDerivative, sigma: &CovarianceEstimate, n: usize, alpha: f64) -> IntervalSet {
    let q = d.dim();
    let r: Vec<f64> = match d.dispersion(&sigma.matrix) {
        Some(g) => g.diagonal().iter().map(|v| libm::sqrt(v.max(0.0))).collect(),
        None => alloc::vec![0.0; q],
    };
    let z = libm::sqrt(chi2_quantile(1, alpha));
    let root_n = libm::sqrt(n as f64);
    let half: Vec<f64> = r.iter().map(|rj| z * rj / root_n).collect();
    IntervalSet::centered(&d.base, &half, IntervalKind::Individual, alpha)
}

/// Clamps every endpoint into `[lo_j, up_j]`, turning intervals for `z₀`
/// into (conservative) intervals for `x₀ = Π_S(z₀)`.
pub fn project_intervals_to_x(intervals: &IntervalSet, s: &BoxSet) -> IntervalSet {
    let clamp = |v: &[f64]| -> Vec<f64> {
        v.iter().zip(s.lower().iter().zip(s.upper())).map(|(&x, (&lo, &up))| x.clamp(lo, up)).collect()
    };
    IntervalSet { lower: clamp(&intervals.lower), upper: clamp(&intervals.upper), ..intervals.clone() }
}

fn check_dim(expected: usize, found: usize) -> Result<(), InferenceError> {
    if expected == found {
        Ok(())
    } else {
        Err(InferenceError::DimensionMismatch { expected, found })
    }
}

/// Sign restriction of one coordinate of the cone `Kᵢ = cone(Pᵢ − z₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSign {
    Free,
    NonNegative,
    NonPositive,
}

/// One selection of the limiting map `L_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LawCell {
    pub cell: Cell,
    pub selection: SelectionMatrix,
    pub cone: Vec<ConeSign>,
    /// `Mᵢ = L Aᵢ + I − Aᵢ`
    pub matrix: Matrix,
    pub inverse: Matrix,
    pub determinant: f64,
    /// `Cᵢ = Mᵢ⁻¹ Σ₀ Mᵢ⁻ᵀ`
    pub covariance: Matrix,
    /// `rⁱⱼ = √(Cᵢ)ⱼⱼ`
    pub scales: Vec<f64>,
}

impl LawCell {
    pub fn cone_contains(&self, h: &[f64], tol: f64) -> bool {
        self.cone.iter().zip(h).all(|(sign, &v)| match sign {
            ConeSign::Free => true,
            ConeSign::NonNegative => v >= -tol,
            ConeSign::NonPositive => v <= tol,
        })
    }
}

/// Which known sufficient condition makes the individual intervals
/// asymptotically exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactnessCondition {
    /// At most two cells meet at `z₀`.
    FewCells,
    /// Every `Cᵢ` is diagonal.
    DiagonalCovariances,
}

/// Limiting objects at the true solution: `L`, `Σ₀` and one [`LawCell`] per
/// normal-manifold cell containing `z₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingLaw {
    pub jacobian: Matrix,
    pub sigma0: Matrix,
    pub z0: Vec<f64>,
    pub cells: Vec<LawCell>,
    sigma0_sqrt: Matrix,
}

pub fn limiting_law(
    l: &Matrix,
    sigma0: &Matrix,
    s: &BoxSet,
    z0: &[f64],
    tol: f64,
) -> Result<LimitingLaw, InferenceError> {
    let q = s.dim();
    check_dim(q, l.rows())?;
    check_dim(q, sigma0.rows())?;
    check_dim(q, z0.len())?;
    let pattern = s.classify(z0, tol);
    let sigma_eig = eig_sym(sigma0)?;
    let mut cells = Vec::new();
    for (i, cell) in pattern.cells(DEFAULT_CELL_CAP)?.into_iter().enumerate() {
        let selection = cell.selection_matrix();
        let matrix = selection.normal_map_matrix(l);
        let lu = LuDecomposition::new(&matrix).map_err(|_| InferenceError::SingularSelection(i))?;
        let inverse = lu.inverse();
        let covariance = inverse.matmul(sigma0).matmul(&inverse.transpose()).symmetrized();
        let scales = covariance.diagonal().iter().map(|v| libm::sqrt(v.max(0.0))).collect();
        let cone = pattern.tags.iter().zip(&cell.pieces).map(|(t, p)| cone_sign(*t, *p)).collect();
        cells.push(LawCell { cell, selection, cone, determinant: lu.determinant(), matrix, inverse, covariance, scales });
    }
    Ok(LimitingLaw { jacobian: l.clone(), sigma0: sigma0.clone(), z0: z0.to_vec(), cells, sigma0_sqrt: sigma_eig.sqrt_psd() })
}

fn cone_sign(tag: CoordTag, piece: Piece) -> ConeSign {
    match (tag, piece) {
        (CoordTag::AtLower, Piece::Middle) | (CoordTag::AtUpper, Piece::Upper) | (CoordTag::AtBothBounds, Piece::Upper) => {
            ConeSign::NonNegative
        }
        (CoordTag::AtLower, Piece::Lower) | (CoordTag::AtUpper, Piece::Middle) | (CoordTag::AtBothBounds, Piece::Lower) => {
            ConeSign::NonPositive
        }
        _ => ConeSign::Free,
    }
}

/// All determinants nonzero (relative to the Hadamard bound) and of one
/// sign.
pub fn coherent_orientation_of(matrices: &[Matrix]) -> bool {
    let mut sign = 0.0;
    for m in matrices {
        let det = determinant(m);
        let bound: f64 = (0..m.rows()).map(|i| crate::numerics::norm2(m.row(i))).product();
        if det.abs() <= 1e-12 * bound || det == 0.0 {
            return false;
        }
        let s = libm::copysign(1.0, det);
        if sign == 0.0 {
            sign = s;
        } else if s != sign {
            return false;
        }
    }
    true
}

pub fn coherent_orientation(law: &LimitingLaw) -> bool {
    let ms: Vec<Matrix> = law.cells.iter().map(|c| c.matrix.clone()).collect();
    coherent_orientation_of(&ms)
}

impl LimitingLaw {
    pub fn dim(&self) -> usize {
        self.z0.len()
    }

    /// `L_K(h) = Mᵢ h` on the first cone containing `h`.
    pub fn apply(&self, h: &[f64]) -> Option<Vec<f64>> {
        let tol = 1e-12 * (1.0 + norm_inf(h));
        self.cells.iter().find(|c| c.cone_contains(h, tol)).map(|c| c.matrix.mul_vec(h))
    }

    /// Known sufficient condition for exact individual coverage, if one holds.
    pub fn exactness_condition(&self) -> Option<ExactnessCondition> {
        if self.cells.len() <= 2 {
            return Some(ExactnessCondition::FewCells);
        }
        let diagonal = self.cells.iter().all(|c| {
            let scale = c.covariance.max_abs().max(f64::MIN_POSITIVE);
            (0..c.covariance.rows())
                .all(|i| (0..c.covariance.cols()).all(|j| i == j || c.covariance[(i, j)].abs() <= 1e-12 * scale))
        });
        diagonal.then_some(ExactnessCondition::DiagonalCovariances)
    }
}

/// Index of the cell used and `h = (L_K)⁻¹(y)`.
pub fn lk_inverse_cell(law: &LimitingLaw, y: &[f64]) -> Result<(usize, Vec<f64>), InferenceError> {
    check_dim(law.dim(), y.len())?;
    for rel in [1e-12, 1e-9] {
        for (i, cell) in law.cells.iter().enumerate() {
            let h = cell.inverse.mul_vec(y);
            if cell.cone_contains(&h, rel * (1.0 + norm_inf(&h))) {
                return Ok((i, h));
            }
        }
    }
    Err(InferenceError::NoConsistentCell)
}

/// `(L_K)⁻¹(y)`; on cone boundaries the lowest-index cell wins.
pub fn lk_inverse(law: &LimitingLaw, y: &[f64]) -> Result<Vec<f64>, InferenceError> {
    lk_inverse_cell(law, y).map(|(_, h)| h)
}

/// Hits of `|Γ_j| ≤ √χ²₁(α) rⁱⱼ` over `samples` draws of `Y₀ ~ N(0, Σ₀)`
/// from one stream, with `Γ = (L_K)⁻¹(Y₀)` and `i` the cell holding `Γ`.
pub fn coverage_hits(
    law: &LimitingLaw,
    j: usize,
    alpha: f64,
    samples: usize,
    stream: RngStream,
) -> Result<u64, InferenceError> {
    let q = law.dim();
    assert!(j < q, "coordinate out of range");
    let z = libm::sqrt(chi2_quantile(1, alpha));
    let mut rng = stream.rng();
    let mut g = alloc::vec![0.0; q];
    let mut hits = 0u64;
    for _ in 0..samples {
        g.iter_mut().for_each(|v| *v = rng.standard_normal());
        let y = law.sigma0_sqrt.mul_vec(&g);
        let (i, gamma) = lk_inverse_cell(law, &y)?;
        if gamma[j].abs() <= z * law.cells[i].scales[j] {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Number of sub-streams [`limiting_individual_coverage`] splits `samples`
/// into, and the size of chunk `k`.
pub fn coverage_chunks(samples: usize) -> impl Iterator<Item = (u64, usize)> {
    let full = samples / COVERAGE_CHUNK;
    let rest = samples % COVERAGE_CHUNK;
    (0..full as u64).map(|k| (k, COVERAGE_CHUNK)).chain((rest > 0).then_some((full as u64, rest)))
}

/// Monte Carlo estimate of the limiting coverage probability of the
/// individual interval for coordinate `j`:
///
/// ```text
/// Σᵢ P( |Γⁱ_j / rⁱⱼ| ≤ √χ²₁(α)  and  Γⁱ ∈ Kᵢ ).
/// ```
///
/// Chunk `k` of [`COVERAGE_CHUNK`] samples draws from `stream.substream(k)`,
/// so the chunks can be evaluated in any order or in parallel.
pub fn limiting_individual_coverage(
    law: &LimitingLaw,
    j: usize,
    alpha: f64,
    samples: usize,
    stream: RngStream,
) -> Result<f64, InferenceError> {
    assert!(samples > 0);
    let mut hits = 0u64;
    for (k, count) in coverage_chunks(samples) {
        hits += coverage_hits(law, j, alpha, count, stream.substream(k))?;
    }
    Ok(hits as f64 / samples as f64)
}
