use alloc::vec::Vec;

use super::{Matrix, NumericsError};

const SYMMETRY_TOL: f64 = 1e-12;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// `A = Uᵀ diag(values) U` with eigenvalues in decreasing order and the
/// matching eigenvectors stored as the rows of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `Uᵀ diag(values) U`
    pub fn reconstruct(&self) -> Matrix {
        self.vectors.transpose().matmul(&Matrix::from_diagonal(&self.values)).matmul(&self.vectors)
    }

    /// `Uᵀ diag(g(λ)) U` for a scalar map `g`.
    pub fn map_values(&self, g: impl Fn(f64) -> f64) -> Matrix {
        let mapped: Vec<f64> = self.values.iter().map(|&v| g(v)).collect();
        self.vectors.transpose().matmul(&Matrix::from_diagonal(&mapped)).matmul(&self.vectors)
    }

    /// Symmetric square root, with negative rounding noise clamped to zero.
    pub fn sqrt_psd(&self) -> Matrix {
        self.map_values(|v| libm::sqrt(v.max(0.0)))
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `1e-12 · ‖A‖_F`.
pub fn eig_sym(a: &Matrix) -> Result<EigenDecomposition, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    if let Some((row, col, gap)) = a.asymmetry(SYMMETRY_TOL) {
        return Err(NumericsError::NotSymmetric { row, col, gap });
    }
    let n = a.rows();
    let mut w = a.symmetrized();
    // columns of v are eigenvectors while iterating
    let mut v = Matrix::identity(n);
    let target = OFF_DIAGONAL_TOL * a.frobenius_norm();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&w) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                rotate(&mut w, &mut v, p, q, c, s);
            }
        }
    }
    if !converged && off_diagonal_norm(&w) > target {
        return Err(NumericsError::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (r, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(r, k)] = v[(k, i)];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

fn off_diagonal_norm(w: &Matrix) -> f64 {
    let n = w.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += w[(i, j)] * w[(i, j)];
            }
        }
    }
    libm::sqrt(s)
}

/// `W ← JᵀWJ`, `V ← VJ` for the plane rotation in `(p, q)`.
fn rotate(w: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = w.rows();
    for k in 0..n {
        let wkp = w[(k, p)];
        let wkq = w[(k, q)];
        w[(k, p)] = c * wkp - s * wkq;
        w[(k, q)] = s * wkp + c * wkq;
    }
    for k in 0..n {
        let wpk = w[(p, k)];
        let wqk = w[(q, k)];
        w[(p, k)] = c * wpk - s * wqk;
        w[(q, k)] = s * wpk + c * wqk;
    }
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
