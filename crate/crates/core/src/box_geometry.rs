//! The feasible box `S`, its Euclidean projector and the normal-manifold
//! cells on which the projector is affine.
//!
//! For a box the normal manifold is a product: coordinate `j` splits the real
//! line into `(-∞, lo_j]`, `[lo_j, up_j]` and `[up_j, ∞)`, and each full
//! dimensional cell picks one piece per coordinate. On a cell the projector
//! has the diagonal 0/1 derivative `A` with `A_jj = 1` exactly on the middle
//! pieces.

use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{norm_inf, Matrix};

/// Default cap on the number of cells [`cells_at`] may enumerate.
pub const DEFAULT_CELL_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid bounds for coordinate {0}")]
    InvalidBounds(usize),
    #[error("bound vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("{count} cells exceed the enumeration cap {cap}")]
    CombinatorialBlowup { count: usize, cap: usize },
    #[error("coordinate {0} sits on a boundary and has not been assigned a piece")]
    UnresolvedPattern(usize),
    #[error("the points share no cell of the normal manifold")]
    NotInCommonCell,
}

/// Product of closed intervals, with infinite ends allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::LengthMismatch(lower.len(), upper.len()));
        }
        for (j, (&lo, &up)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || up.is_nan() || lo > up || lo == f64::INFINITY || up == f64::NEG_INFINITY {
                return Err(GeometryError::InvalidBounds(j));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    /// `ℝ^q_+`
    pub fn nonnegative_orthant(q: usize) -> Self {
        BoxSet { lower: vec![0.0; q], upper: vec![f64::INFINITY; q] }
    }

    pub fn whole_space(q: usize) -> Self {
        BoxSet { lower: vec![f64::NEG_INFINITY; q], upper: vec![f64::INFINITY; q] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&lo, &up))| v >= lo - tol && v <= up + tol)
    }

    /// Euclidean projection: coordinatewise clamp.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim());
        z.iter().zip(self.lower.iter().zip(&self.upper)).map(|(&v, (&lo, &up))| v.clamp(lo, up)).collect()
    }

    /// Band used to decide that a coordinate sits on a bound.
    pub fn default_tolerance(z: &[f64]) -> f64 {
        1e-8 * (1.0 + norm_inf(z))
    }

    pub fn classify(&self, z: &[f64], tol: f64) -> FacePattern {
        assert_eq!(z.len(), self.dim());
        assert!(tol >= 0.0);
        let tags = z
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &up))| classify_coordinate(v, lo, up, tol))
            .collect();
        FacePattern { tags, tolerance: tol }
    }

    /// Directional derivative `dΠ_S(z)(h)`.
    pub fn dpi_apply(&self, z: &[f64], h: &[f64]) -> Vec<f64> {
        self.dpi_apply_tol(z, h, 0.0)
    }

    /// [`BoxSet::dpi_apply`] with boundary membership decided at tolerance `tol`.
    pub fn dpi_apply_tol(&self, z: &[f64], h: &[f64], tol: f64) -> Vec<f64> {
        assert_eq!(h.len(), self.dim());
        self.classify(z, tol).dpi_apply(h)
    }

    /// All cells of the normal manifold that contain `z`.
    pub fn cells_at(&self, z: &[f64], tol: f64) -> Result<Vec<Cell>, GeometryError> {
        self.classify(z, tol).cells(DEFAULT_CELL_CAP)
    }

    /// Checks `dΠ_S(x)(y − x) = −dΠ_S(y)(x − y)` for two points in a common
    /// cell. Errors when no cell contains both points.
    pub fn dpi_symmetry_check(&self, x: &[f64], y: &[f64], tol: f64) -> Result<bool, GeometryError> {
        let px = self.classify(x, tol);
        let py = self.classify(y, tol);
        let cx = px.cells(DEFAULT_CELL_CAP)?;
        let cy = py.cells(DEFAULT_CELL_CAP)?;
        if !cx.iter().any(|c| cy.contains(c)) {
            return Err(GeometryError::NotInCommonCell);
        }
        let yx: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let xy: Vec<f64> = yx.iter().map(|v| -v).collect();
        let lhs = px.dpi_apply(&yx);
        let rhs = py.dpi_apply(&xy);
        let scale = 1.0 + norm_inf(&yx);
        Ok(lhs.iter().zip(&rhs).all(|(a, b)| (a + b).abs() <= 1e-12 * scale))
    }
}

fn classify_coordinate(v: f64, lo: f64, up: f64, tol: f64) -> CoordTag {
    let near_lo = (v - lo).abs() <= tol;
    let near_up = (v - up).abs() <= tol;
    if lo == up && near_lo {
        CoordTag::AtBothBounds
    } else if near_lo && near_up {
        // interval thinner than the band: attach to the closer end
        if (v - lo).abs() <= (v - up).abs() {
            CoordTag::AtLower
        } else {
            CoordTag::AtUpper
        }
    } else if near_lo {
        CoordTag::AtLower
    } else if near_up {
        CoordTag::AtUpper
    } else if v < lo {
        CoordTag::BelowLower
    } else if v > up {
        CoordTag::AboveUpper
    } else {
        CoordTag::Interior
    }
}

/// Position of one coordinate of `z` relative to `[lo, up]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoordTag {
    BelowLower,
    AtLower,
    Interior,
    AtUpper,
    /// `lo == up` and the coordinate sits on that value.
    AtBothBounds,
    AboveUpper,
}

impl CoordTag {
    pub fn is_boundary(self) -> bool {
        matches!(self, CoordTag::AtLower | CoordTag::AtUpper | CoordTag::AtBothBounds)
    }

    /// Pieces of the line that contain the coordinate, middle piece first.
    pub fn pieces(self) -> &'static [Piece] {
        match self {
            CoordTag::BelowLower => &[Piece::Lower],
            CoordTag::AtLower => &[Piece::Middle, Piece::Lower],
            CoordTag::Interior => &[Piece::Middle],
            CoordTag::AtUpper => &[Piece::Middle, Piece::Upper],
            // the middle piece of a degenerate interval has no interior
            CoordTag::AtBothBounds => &[Piece::Lower, Piece::Upper],
            CoordTag::AboveUpper => &[Piece::Upper],
        }
    }
}

/// Per-coordinate classification of a point, together with the tolerance
/// used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct FacePattern {
    pub tags: Vec<CoordTag>,
    pub tolerance: f64,
}

impl FacePattern {
    pub fn dim(&self) -> usize {
        self.tags.len()
    }

    /// True when the point lies in the interior of a single cell, so that
    /// `dΠ_S` is linear there.
    pub fn is_cell_interior(&self) -> bool {
        !self.tags.iter().any(|t| t.is_boundary())
    }

    pub fn boundary_count(&self) -> usize {
        self.tags.iter().filter(|t| t.is_boundary()).count()
    }

    pub fn dpi_apply(&self, h: &[f64]) -> Vec<f64> {
        assert_eq!(h.len(), self.dim());
        self.tags
            .iter()
            .zip(h)
            .map(|(tag, &hj)| match tag {
                CoordTag::Interior => hj,
                CoordTag::BelowLower | CoordTag::AboveUpper | CoordTag::AtBothBounds => 0.0,
                CoordTag::AtLower => hj.max(0.0),
                CoordTag::AtUpper => hj.min(0.0),
            })
            .collect()
    }

    /// Number of cells containing the point.
    pub fn cell_count(&self) -> usize {
        self.tags.iter().fold(1usize, |acc, t| acc.saturating_mul(t.pieces().len()))
    }

    /// Enumerates the cells containing the point. Coordinate 0 varies slowest
    /// and the middle piece comes before the outer piece.
    pub fn cells(&self, cap: usize) -> Result<Vec<Cell>, GeometryError> {
        let count = self.cell_count();
        if count > cap {
            return Err(GeometryError::CombinatorialBlowup { count, cap });
        }
        let mut cells = vec![Vec::with_capacity(self.dim())];
        for tag in &self.tags {
            let options = tag.pieces();
            let mut next = Vec::with_capacity(cells.len() * options.len());
            for prefix in &cells {
                for &p in options {
                    let mut c = prefix.clone();
                    c.push(p);
                    next.push(c);
                }
            }
            cells = next;
        }
        Ok(cells.into_iter().map(|pieces| Cell { pieces }).collect())
    }

    /// Commits every boundary coordinate to the piece on which the projector
    /// moves with it: the middle piece, or the lower piece for fixed
    /// coordinates.
    pub fn resolve_middle(&self) -> Cell {
        Cell { pieces: self.tags.iter().map(|t| t.pieces()[0]).collect() }
    }

    /// Selection matrix of an unambiguous pattern.
    pub fn selection_matrix(&self) -> Result<SelectionMatrix, GeometryError> {
        if let Some(j) = self.tags.iter().position(|t| t.pieces().len() > 1) {
            return Err(GeometryError::UnresolvedPattern(j));
        }
        Ok(self.resolve_middle().selection_matrix())
    }
}

/// One piece of the real line in the per-coordinate split by `lo_j, up_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Piece {
    Lower,
    Middle,
    Upper,
}

/// A full-dimensional cell of the normal manifold: one piece per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cell {
    pub pieces: Vec<Piece>,
}

impl Cell {
    pub fn dim(&self) -> usize {
        self.pieces.len()
    }

    pub fn selection_matrix(&self) -> SelectionMatrix {
        SelectionMatrix { active: self.pieces.iter().map(|p| *p == Piece::Middle).collect() }
    }

    /// Whether `z` lies in the (closed) cell for box `s`, up to `tol`.
    pub fn contains(&self, s: &BoxSet, z: &[f64], tol: f64) -> bool {
        self.pieces.iter().enumerate().all(|(j, p)| {
            let (lo, up, v) = (s.lower[j], s.upper[j], z[j]);
            match p {
                Piece::Lower => v <= lo + tol,
                Piece::Middle => v >= lo - tol && v <= up + tol,
                Piece::Upper => v >= up - tol,
            }
        })
    }
}

/// Diagonal 0/1 matrix representing `dΠ_S` on a cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionMatrix {
    pub active: Vec<bool>,
}

impl SelectionMatrix {
    pub fn dim(&self) -> usize {
        self.active.len()
    }

    pub fn to_matrix(&self) -> Matrix {
        let d: Vec<f64> = self.active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        Matrix::from_diagonal(&d)
    }

    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        h.iter().zip(&self.active).map(|(&v, &a)| if a { v } else { 0.0 }).collect()
    }

    /// `J A + I − A`: the normal map of the linear map `J` on this cell.
    pub fn normal_map_matrix(&self, jacobian: &Matrix) -> Matrix {
        let q = self.dim();
        assert_eq!((jacobian.rows(), jacobian.cols()), (q, q));
        let mut m = Matrix::zeros(q, q);
        for i in 0..q {
            for j in 0..q {
                m[(i, j)] = if self.active[j] {
                    jacobian[(i, j)]
                } else if i == j {
                    1.0
                } else {
                    0.0
                };
            }
        }
        m
    }
}
