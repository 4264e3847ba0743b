//! Affine scenario models `F(x, ξ) = Λ(ξ) x + b(ξ)` with independent uniform
//! entries, their sample averages, and the sample covariance of
//! `F(x, ξⁱ)`.

use alloc::vec::Vec;

use crate::numerics::{Matrix, RngStream};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("need at least {needed} scenarios, have {have}")]
    TooFewScenarios { needed: usize, have: usize },
    #[error("model of dimension {q} needs {expected} ranges, got {found}")]
    RangeCount { q: usize, expected: usize, found: usize },
    #[error("range {0} is empty or not finite")]
    InvalidRange(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Closed interval `[lo, hi]` of a uniform distribution.
pub type Range = (f64, f64);

/// `Λ(ξ)ᵢⱼ ~ U[aᵢⱼ, bᵢⱼ]`, `b(ξ)ᵢ ~ U[cᵢ, dᵢ]`, all independent.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineScenarioModel {
    q: usize,
    lambda_ranges: Vec<Range>,
    offset_ranges: Vec<Range>,
}

/// Offset distributions of the ten-dimensional benchmark family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TenDimOffsets {
    /// every `b_i ~ U[-1, 1]`
    Centered,
    /// `b_1..b_5 ~ U[-1, 0.8]`, `b_6..b_10 ~ U[-1, 1]`
    HalfShifted,
    /// every `b_i ~ U[-1, 0.8]`
    Shifted,
}

impl AffineScenarioModel {
    /// `lambda_ranges` is row-major `q × q`.
    pub fn new(q: usize, lambda_ranges: Vec<Range>, offset_ranges: Vec<Range>) -> Result<Self, ModelError> {
        if lambda_ranges.len() != q * q {
            return Err(ModelError::RangeCount { q, expected: q * q, found: lambda_ranges.len() });
        }
        if offset_ranges.len() != q {
            return Err(ModelError::RangeCount { q, expected: q, found: offset_ranges.len() });
        }
        for (k, (lo, hi)) in lambda_ranges.iter().chain(&offset_ranges).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ModelError::InvalidRange(k));
            }
        }
        Ok(AffineScenarioModel { q, lambda_ranges, offset_ranges })
    }

    /// Two-dimensional benchmark: `Λ ~ U([0,2]×[0,1]×[0,2]×[0,4])`,
    /// `b ~ U([-1,1]²)`.
    pub fn two_dim_benchmark() -> Self {
        AffineScenarioModel::new(2, alloc::vec![(0.0, 2.0), (0.0, 1.0), (0.0, 2.0), (0.0, 4.0)], alloc::vec![(-1.0, 1.0); 2])
            .expect("valid ranges")
    }

    /// Ten-dimensional benchmark: diagonal entries `U[0,4]`, above the
    /// diagonal `U[0,3]`, below `U[0,2]`.
    pub fn ten_dim_benchmark(offsets: TenDimOffsets) -> Self {
        let q = 10;
        let mut lambda = Vec::with_capacity(q * q);
        for i in 0..q {
            for j in 0..q {
                lambda.push(match i.cmp(&j) {
                    core::cmp::Ordering::Equal => (0.0, 4.0),
                    core::cmp::Ordering::Less => (0.0, 3.0),
                    core::cmp::Ordering::Greater => (0.0, 2.0),
                });
            }
        }
        let offset = (0..q)
            .map(|i| match offsets {
                TenDimOffsets::Centered => (-1.0, 1.0),
                TenDimOffsets::HalfShifted if i < 5 => (-1.0, 0.8),
                TenDimOffsets::HalfShifted => (-1.0, 1.0),
                TenDimOffsets::Shifted => (-1.0, 0.8),
            })
            .collect();
        AffineScenarioModel::new(q, lambda, offset).expect("valid ranges")
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn lambda_ranges(&self) -> &[Range] {
        &self.lambda_ranges
    }

    pub fn offset_ranges(&self) -> &[Range] {
        &self.offset_ranges
    }

    /// Draws `n` scenarios. Each scenario consumes `q² + q` uniforms: the
    /// entries of `Λ` in row-major order, then `b`.
    pub fn sample_batch(&self, n: usize, stream: RngStream) -> ScenarioBatch {
        assert!(n >= 1, "a batch needs at least one scenario");
        let q = self.q;
        let mut rng = stream.rng();
        let mut lambdas = Vec::with_capacity(n * q * q);
        let mut offsets = Vec::with_capacity(n * q);
        for _ in 0..n {
            lambdas.extend(self.lambda_ranges.iter().map(|&(lo, hi)| rng.affine_unit(lo, hi)));
            offsets.extend(self.offset_ranges.iter().map(|&(lo, hi)| rng.affine_unit(lo, hi)));
        }
        ScenarioBatch { q, n, lambdas, offsets, stream: Some(stream) }
    }

    /// `f₀(x) = E[Λ] x + E[b]`, with expectations at the range midpoints.
    pub fn true_map(&self) -> SaaMap {
        let mid = |&(lo, hi): &Range| 0.5 * (lo + hi);
        let j = Matrix::from_row_major(self.q, self.q, self.lambda_ranges.iter().map(mid).collect()).expect("finite");
        SaaMap { jacobian: j, offset: self.offset_ranges.iter().map(mid).collect() }
    }

    /// Covariance of `F(x, ξ)`. Rows of `Λ` and `b` are independent, so the
    /// matrix is diagonal with `Σ_j x_j² Var Λ_ij + Var b_i`.
    pub fn population_covariance(&self, x: &[f64]) -> Matrix {
        assert_eq!(x.len(), self.q);
        let var = |&(lo, hi): &Range| (hi - lo) * (hi - lo) / 12.0;
        let diag: Vec<f64> = (0..self.q)
            .map(|i| {
                let row = &self.lambda_ranges[i * self.q..(i + 1) * self.q];
                row.iter().zip(x).map(|(r, xj)| xj * xj * var(r)).sum::<f64>() + var(&self.offset_ranges[i])
            })
            .collect();
        Matrix::from_diagonal(&diag)
    }
}

/// `n` realized scenarios `(Λᵢ, bᵢ)`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioBatch {
    q: usize,
    n: usize,
    lambdas: Vec<f64>,
    offsets: Vec<f64>,
    stream: Option<RngStream>,
}

impl ScenarioBatch {
    /// Batch from explicit scenarios, for fixtures and tests.
    pub fn from_scenarios(scenarios: &[(Matrix, Vec<f64>)]) -> Result<Self, ModelError> {
        let first = scenarios.first().ok_or(ModelError::TooFewScenarios { needed: 1, have: 0 })?;
        let q = first.1.len();
        let mut lambdas = Vec::with_capacity(scenarios.len() * q * q);
        let mut offsets = Vec::with_capacity(scenarios.len() * q);
        for (l, b) in scenarios {
            if l.rows() != q || l.cols() != q {
                return Err(ModelError::DimensionMismatch { expected: q, found: l.rows() });
            }
            if b.len() != q {
                return Err(ModelError::DimensionMismatch { expected: q, found: b.len() });
            }
            lambdas.extend_from_slice(l.as_slice());
            offsets.extend_from_slice(b);
        }
        Ok(ScenarioBatch { q, n: scenarios.len(), lambdas, offsets, stream: None })
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn stream(&self) -> Option<RngStream> {
        self.stream
    }

    pub fn lambda(&self, i: usize) -> Matrix {
        let qq = self.q * self.q;
        Matrix::from_row_major(self.q, self.q, self.lambdas[i * qq..(i + 1) * qq].to_vec()).expect("finite")
    }

    pub fn offset(&self, i: usize) -> &[f64] {
        &self.offsets[i * self.q..(i + 1) * self.q]
    }

    /// `F(x, ξⁱ) = Λᵢ x + bᵢ`
    pub fn scenario_value(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let q = self.q;
        let qq = q * q;
        let l = &self.lambdas[i * qq..(i + 1) * qq];
        (0..q).map(|r| crate::numerics::dot(&l[r * q..(r + 1) * q], x) + self.offsets[i * q + r]).collect()
    }

    /// The sample-average map `fₙ(x) = n⁻¹ Σ (Λᵢ x + bᵢ)`.
    pub fn assemble(&self) -> SaaMap {
        let (q, n) = (self.q, self.n);
        let qq = q * q;
        let mut j = alloc::vec![0.0; qq];
        let mut b = alloc::vec![0.0; q];
        for i in 0..n {
            for (acc, v) in j.iter_mut().zip(&self.lambdas[i * qq..(i + 1) * qq]) {
                *acc += v;
            }
            for (acc, v) in b.iter_mut().zip(&self.offsets[i * q..(i + 1) * q]) {
                *acc += v;
            }
        }
        let inv = 1.0 / n as f64;
        j.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= inv);
        SaaMap { jacobian: Matrix::from_row_major(q, q, j).expect("finite"), offset: b }
    }

    /// Sample covariance of `{F(x, ξⁱ)}` with divisor `n − 1`.
    pub fn sample_covariance(&self, x: &[f64]) -> Result<CovarianceEstimate, ModelError> {
        if self.n < 2 {
            return Err(ModelError::TooFewScenarios { needed: 2, have: self.n });
        }
        if x.len() != self.q {
            return Err(ModelError::DimensionMismatch { expected: self.q, found: x.len() });
        }
        let q = self.q;
        let values: Vec<Vec<f64>> = (0..self.n).map(|i| self.scenario_value(i, x)).collect();
        let mut mean = alloc::vec![0.0; q];
        for v in &values {
            for (m, vi) in mean.iter_mut().zip(v) {
                *m += vi;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.n as f64);
        let mut cov = Matrix::zeros(q, q);
        for v in &values {
            for r in 0..q {
                let dr = v[r] - mean[r];
                for c in r..q {
                    cov[(r, c)] += dr * (v[c] - mean[c]);
                }
            }
        }
        let div = 1.0 / (self.n - 1) as f64;
        for r in 0..q {
            for c in r..q {
                let s = cov[(r, c)] * div;
                cov[(r, c)] = s;
                cov[(c, r)] = s;
            }
        }
        Ok(CovarianceEstimate { matrix: cov, n: self.n })
    }
}

/// Affine map `f(x) = J x + b`; both the SAA map `fₙ` and the true map `f₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaaMap {
    pub jacobian: Matrix,
    pub offset: Vec<f64>,
}

impl SaaMap {
    pub fn new(jacobian: Matrix, offset: Vec<f64>) -> Result<Self, ModelError> {
        if !jacobian.is_square() || jacobian.rows() != offset.len() {
            return Err(ModelError::DimensionMismatch { expected: offset.len(), found: jacobian.rows() });
        }
        Ok(SaaMap { jacobian, offset })
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.jacobian.mul_vec(x);
        for (yi, bi) in y.iter_mut().zip(&self.offset) {
            *yi += bi;
        }
        y
    }
}

/// Sample covariance `Σₙ` together with the sample size it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: Matrix,
    pub n: usize,
}

impl CovarianceEstimate {
    /// Wraps an externally supplied covariance matrix.
    pub fn from_matrix(matrix: Matrix, n: usize) -> Self {
        CovarianceEstimate { matrix, n }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}
