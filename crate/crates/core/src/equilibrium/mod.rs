//! Matrix-game solvers: ε-coarse correlated equilibria for general-sum
//! payoffs and exact values of zero-sum games, both on a dense simplex core.

mod cce;
pub mod lp;
mod zero_sum;

pub use cce::{epsilon_cce, marginals, verify_cce, CceCheck, VERIFY_SLACK};
pub use lp::{lp_solve, Constraint, LinearProgram, LpOutcome, LpSolution, Relation};
pub use zero_sum::{zero_sum_value, ZeroSumSolution, DUALITY_TOL};

use crate::error::{Error, Result};

/// Entries below this are clamped to zero in returned distributions.
pub const CLAMP_TOL: f64 = 1e-12;

/// A dense row-major payoff table over `A_max × A_min`.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PayoffMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Usage(format!(
                "payoff table of {} entries cannot be {rows}×{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite payoff entry".into()));
        }
        Ok(PayoffMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Usage("ragged payoff rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.cols + b]
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `αq + β`.
    pub fn affine(&self, scale: f64, shift: f64) -> PayoffMatrix {
        PayoffMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| scale * v + shift).collect(),
        }
    }
}

/// A joint distribution `σ` over `A_max × A_min`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Checks shape, sign and total mass (within `1e-9`).
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(Error::Usage(format!(
                "distribution of {} entries cannot be {rows}×{cols}",
                probs.len()
            )));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !p.is_finite() || *p < -CLAMP_TOL) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!("not a distribution (total mass {total})")));
        }
        Ok(JointDistribution { rows, cols, probs })
    }

    pub fn point_mass(rows: usize, cols: usize, a: usize, b: usize) -> Self {
        let mut probs = vec![0.0; rows * cols];
        probs[a * cols + b] = 1.0;
        JointDistribution { rows, cols, probs }
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        JointDistribution {
            rows,
            cols,
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Product distribution `π × ν`.
    pub fn product(row: &[f64], col: &[f64]) -> Self {
        let probs = row.iter().flat_map(|p| col.iter().map(move |q| p * q)).collect();
        JointDistribution {
            rows: row.len(),
            cols: col.len(),
            probs,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.cols + b]
    }
    /// Row-major probabilities; index `a * cols + b`.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// `E_σ q`.
    pub fn expectation(&self, q: &[f64]) -> f64 {
        self.probs.iter().zip(q).map(|(p, v)| p * v).sum()
    }
}

/// Clamps entries below [`CLAMP_TOL`] to zero and rescales to unit mass.
pub(crate) fn clean_distribution(probs: &mut [f64]) {
    probs.iter_mut().filter(|p| **p < CLAMP_TOL).for_each(|p| *p = 0.0);
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
}

/// Row and column marginals of a joint distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalPair {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}
