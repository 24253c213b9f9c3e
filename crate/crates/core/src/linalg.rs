//! Weighted ridge regression primitives.
//!
//! [`WeightedCovariance`] keeps `Σ = λI + Σ_j w_j x_j x_jᵀ` together with a
//! Sherman–Morrison inverse for cheap diagnostics. Solves and bonus norms go
//! through a fresh Cholesky factorization of `Σ` instead of the maintained
//! inverse.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Updates between full re-inversions of the maintained inverse.
pub const REFACTOR_EVERY: usize = 512;

#[derive(Clone, Debug)]
pub struct WeightedCovariance {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    lambda: f64,
    count: usize,
}

impl WeightedCovariance {
    /// `Σ = λI` in dimension `dim`.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Numeric(format!("regularizer must be positive, got {lambda}")));
        }
        Ok(WeightedCovariance {
            matrix: DMatrix::identity(dim, dim) * lambda,
            inverse: DMatrix::identity(dim, dim) / lambda,
            lambda,
            count: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
    /// The Sherman–Morrison maintained inverse.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn count(&self) -> usize {
        self.count
    }

    /// `Σ ← Σ + w·xxᵀ`, with the inverse updated by Sherman–Morrison.
    pub fn rank_one_update(&mut self, x: &DVector<f64>, weight: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Numeric(format!(
                "update vector of length {} for a {}-dimensional covariance",
                x.len(),
                self.dim()
            )));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Numeric(format!("update weight must be positive, got {weight}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite update vector".into()));
        }
        self.matrix.ger(weight, x, x, 1.0);
        symmetrize(&mut self.matrix);
        self.count += 1;

        if self.count.is_multiple_of(REFACTOR_EVERY) {
            self.inverse = fresh_inverse(&self.matrix)?;
        } else {
            let u = &self.inverse * x;
            let denom = 1.0 + weight * x.dot(&u);
            self.inverse.ger(-weight / denom, &u, &u, 1.0);
            symmetrize(&mut self.inverse);
        }
        Ok(())
    }

    /// Cholesky factorization of the current `Σ`.
    pub fn factor(&self) -> Result<CovarianceFactor> {
        CovarianceFactor::new(&self.matrix)
    }

    /// `max |Σ·Σ⁻¹ − I|` for the maintained inverse.
    pub fn inverse_drift(&self) -> f64 {
        let n = self.dim();
        (&self.matrix * &self.inverse - DMatrix::<f64>::identity(n, n)).amax()
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn fresh_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut inv = CovarianceFactor::new(m)?.chol.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// Running `b = Σ_j w_j x_j y_j`.
#[derive(Clone, Debug)]
pub struct CorrelationVector {
    vector: DVector<f64>,
    count: usize,
}

impl CorrelationVector {
    pub fn new(dim: usize) -> Self {
        CorrelationVector {
            vector: DVector::zeros(dim),
            count: 0,
        }
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.vector
    }
    pub fn count(&self) -> usize {
        self.count
    }

    /// `b ← b + w·y·x`.
    pub fn add(&mut self, x: &DVector<f64>, target: f64, weight: f64) -> Result<()> {
        if x.len() != self.vector.len() {
            return Err(Error::Numeric(format!(
                "update vector of length {} for a {}-dimensional correlation vector",
                x.len(),
                self.vector.len()
            )));
        }
        if !(target.is_finite() && weight.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite correlation update".into()));
        }
        self.vector.axpy(weight * target, x, 1.0);
        self.count += 1;
        Ok(())
    }
}

/// A Cholesky factorization `Σ = LLᵀ`, reusable across many probes.
#[derive(Clone, Debug)]
pub struct CovarianceFactor {
    chol: Cholesky<f64, Dyn>,
}

impl CovarianceFactor {
    pub fn new(matrix: &DMatrix<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite covariance entry".into()));
        }
        Cholesky::new(matrix.clone())
            .map(|chol| CovarianceFactor { chol })
            .ok_or_else(|| Error::Numeric("covariance is not positive definite".into()))
    }

    /// `Σ⁻¹ b`.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.chol.l_dirty().nrows() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("invalid right-hand side".into()));
        }
        Ok(self.chol.solve(b))
    }

    /// `‖Σ^{-1/2} x‖₂ = ‖L⁻¹ x‖₂`.
    pub fn bonus_norm(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.chol.l_dirty().nrows() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("invalid bonus probe".into()));
        }
        let l = self.chol.l();
        let y = l
            .solve_lower_triangular(x)
            .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
        Ok(y.norm())
    }
}

/// `θ̂ = Σ⁻¹ b` through a fresh factorization of `Σ`.
pub fn ridge_solve(cov: &WeightedCovariance, b: &CorrelationVector) -> Result<DVector<f64>> {
    cov.factor()?.solve(b.vector())
}

/// `√(xᵀ Σ⁻¹ x)` through a fresh factorization of `Σ`.
pub fn bonus_norm(cov: &WeightedCovariance, x: &DVector<f64>) -> Result<f64> {
    cov.factor()?.bonus_norm(x)
}
