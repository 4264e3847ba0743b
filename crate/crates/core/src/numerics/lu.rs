use alloc::vec::Vec;

use super::{Matrix, NumericsError};

/// Relative pivot threshold below which a matrix is declared singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

impl LuDecomposition {
    /// Factors `a`, failing with [`NumericsError::SingularMatrix`] when a pivot
    /// falls below `1e-12 · max|A|`.
    pub fn new(a: &Matrix) -> Result<Self, NumericsError> {
        if !a.is_square() {
            return Err(NumericsError::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        let threshold = SINGULAR_PIVOT_RATIO * a.max_abs();
        let (lu, perm, sign, min_pivot) = factor(a);
        if a.rows() > 0 && (min_pivot <= threshold || min_pivot == 0.0) {
            return Err(NumericsError::SingularMatrix { pivot: min_pivot, threshold });
        }
        Ok(LuDecomposition { lu, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn determinant(&self) -> f64 {
        self.sign * self.lu.diagonal().iter().product::<f64>()
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix, NumericsError> {
        if b.rows() != self.dim() {
            return Err(NumericsError::DimensionMismatch { expected: self.dim(), found: b.rows() });
        }
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col = self.solve_vec(&b.column(j));
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Matrix {
        self.solve(&Matrix::identity(self.dim())).expect("square identity")
    }
}

/// Solves `A X = B` with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    LuDecomposition::new(a)?.solve(b)
}

/// Determinant by pivoted elimination, without any singularity threshold.
pub fn determinant(a: &Matrix) -> f64 {
    assert!(a.is_square());
    let (lu, _, sign, _) = factor(a);
    sign * lu.diagonal().iter().product::<f64>()
}

fn factor(a: &Matrix) -> (Matrix, Vec<usize>, f64, f64) {
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        min_pivot = min_pivot.min(pmax);
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        if pivot == 0.0 {
            continue;
        }
        for i in (k + 1)..n {
            let m = lu[(i, k)] / pivot;
            lu[(i, k)] = m;
            if m != 0.0 {
                for j in (k + 1)..n {
                    lu[(i, j)] -= m * lu[(k, j)];
                }
            }
        }
    }
    (lu, perm, sign, min_pivot)
}
