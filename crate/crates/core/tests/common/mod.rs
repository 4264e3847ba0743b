#![allow(dead_code)]

use svi_core::{BoxSet, Matrix, StreamRng};

pub fn random_matrix(rng: &mut StreamRng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.affine_unit(-scale, scale)).collect();
    Matrix::from_row_major(rows, cols, data).unwrap()
}

pub fn random_vector(rng: &mut StreamRng, q: usize, scale: f64) -> Vec<f64> {
    (0..q).map(|_| rng.affine_unit(-scale, scale)).collect()
}

/// `B − Bᵀ + CᵀC + 0.2 I`: strongly monotone.
pub fn monotone_matrix(rng: &mut StreamRng, q: usize) -> Matrix {
    let b = random_matrix(rng, q, q, 1.0);
    let c = random_matrix(rng, q, q, 1.0);
    b.sub(&b.transpose()).add(&c.transpose().matmul(&c)).add(&Matrix::identity(q).scaled(0.2))
}

/// Symmetric positive definite with eigenvalues at least `floor`.
pub fn spd_matrix(rng: &mut StreamRng, q: usize, floor: f64) -> Matrix {
    let c = random_matrix(rng, q, q, 1.0);
    c.transpose().matmul(&c).add(&Matrix::identity(q).scaled(floor)).symmetrized()
}

/// Mix of one-sided, two-sided, free and fixed coordinates.
pub fn random_box(rng: &mut StreamRng, q: usize) -> BoxSet {
    let mut lower = Vec::with_capacity(q);
    let mut upper = Vec::with_capacity(q);
    for _ in 0..q {
        let lo = rng.affine_unit(-1.0, 0.5);
        let (l, u) = match (rng.unit() * 5.0) as u32 {
            0 => (lo, f64::INFINITY),
            1 => (f64::NEG_INFINITY, lo),
            2 => (f64::NEG_INFINITY, f64::INFINITY),
            3 => (lo, lo),
            _ => (lo, lo + rng.affine_unit(0.1, 2.0)),
        };
        lower.push(l);
        upper.push(u);
    }
    BoxSet::new(lower, upper).unwrap()
}

/// Point whose coordinates sit on a bound with probability about one half.
pub fn point_on_faces(rng: &mut StreamRng, s: &BoxSet) -> Vec<f64> {
    (0..s.dim())
        .map(|j| {
            let (lo, up) = (s.lower()[j], s.upper()[j]);
            let pick = rng.unit();
            if pick < 0.25 && lo.is_finite() {
                lo
            } else if pick < 0.5 && up.is_finite() {
                up
            } else {
                rng.affine_unit(-3.0, 3.0)
            }
        })
        .collect()
}
