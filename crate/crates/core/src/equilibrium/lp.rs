//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are `maximize cᵀx` subject to linear rows and `x ≥ 0`. Sizes are
//! expected to stay in the low hundreds; everything is a dense tableau.

use crate::error::{Error, Result};

/// Reduced-cost threshold for optimality.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Smallest pivot magnitude considered nonzero.
pub const PIVOT_TOL: f64 = 1e-9;
/// Hard cap on pivots across both phases.
pub const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coefficients: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Constraint {
            coefficients,
            relation,
            rhs,
        }
    }
}

/// `maximize objectiveᵀx` subject to `constraints` and `x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

struct Tableau {
    // m rows of (ncols + 1) entries, last entry is the right-hand side
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    iterations: usize,
}

enum PhaseResult {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost` over the current basis, never letting columns with
    /// `allowed[j] == false` enter.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<PhaseResult> {
        loop {
            self.iterations += 1;
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::Invariant(format!("simplex exceeded {MAX_ITERATIONS} pivots")));
            }
            // Bland: lowest-index column with positive reduced cost.
            let entering = (0..self.ncols).find(|&j| {
                allowed[j] && {
                    let reduced = cost[j]
                        - self
                            .rows
                            .iter()
                            .zip(&self.basis)
                            .map(|(row, &bi)| cost[bi] * row[j])
                            .sum::<f64>();
                    reduced > OPTIMALITY_TOL
                }
            });
            let Some(c) = entering else {
                return Ok(PhaseResult::Optimal);
            };
            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[self.ncols] / row[c];
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leaving {
                None => return Ok(PhaseResult::Unbounded),
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    fn value(&self, cost: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.basis)
            .map(|(row, &bi)| cost[bi] * row[self.ncols])
            .sum()
    }
}

/// Solves `lp` with the two-phase simplex method.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.objective.len();
    if lp.objective.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric("non-finite LP objective".into()));
    }
    for con in &lp.constraints {
        if con.coefficients.len() != n {
            return Err(Error::Numeric(format!(
                "constraint has {} coefficients for {n} variables",
                con.coefficients.len()
            )));
        }
        if !con.rhs.is_finite() || con.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("non-finite LP constraint".into()));
        }
    }

    // Flip rows so every right-hand side is nonnegative.
    let rows: Vec<Constraint> = lp
        .constraints
        .iter()
        .map(|con| {
            if con.rhs < 0.0 {
                Constraint {
                    coefficients: con.coefficients.iter().map(|c| -c).collect(),
                    relation: match con.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    },
                    rhs: -con.rhs,
                }
            } else {
                con.clone()
            }
        })
        .collect();
    let m = rows.len();
    let num_slack = rows.iter().filter(|c| c.relation != Relation::Eq).count();
    let num_art = rows.iter().filter(|c| c.relation != Relation::Le).count();
    let art_start = n + num_slack;
    let ncols = art_start + num_art;

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        ncols,
        iterations: 0,
    };
    let (mut next_slack, mut next_art) = (n, art_start);
    for con in &rows {
        let mut row = vec![0.0; ncols + 1];
        row[..n].copy_from_slice(&con.coefficients);
        row[ncols] = con.rhs;
        match con.relation {
            Relation::Le => {
                row[next_slack] = 1.0;
                tab.basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                tab.basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = 1.0;
                tab.basis.push(next_art);
                next_art += 1;
            }
        }
        tab.rows.push(row);
    }

    if num_art > 0 {
        let mut cost = vec![0.0; ncols];
        cost[art_start..].iter_mut().for_each(|c| *c = -1.0);
        let allowed = vec![true; ncols];
        tab.optimize(&cost, &allowed)?;
        let scale = 1.0 + rows.iter().map(|c| c.rhs).fold(0.0, f64::max);
        if tab.value(&cost) < -OPTIMALITY_TOL * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining (zero-valued) artificials out of the basis; rows
        // where that is impossible are redundant and dropped.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                match (0..art_start).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL) {
                    Some(c) => {
                        tab.pivot(r, c);
                        r += 1;
                    }
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(&lp.objective);
    let allowed: Vec<bool> = (0..ncols).map(|j| j < art_start).collect();
    match tab.optimize(&cost, &allowed)? {
        PhaseResult::Unbounded => Ok(LpOutcome::Unbounded),
        PhaseResult::Optimal => {
            let mut x = vec![0.0; n];
            for (row, &bi) in tab.rows.iter().zip(&tab.basis) {
                if bi < n {
                    x[bi] = row[ncols].max(0.0);
                }
            }
            let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
            Ok(LpOutcome::Optimal(LpSolution { x, objective }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn optimal(lp: &LinearProgram) -> LpSolution {
        match lp_solve(lp).unwrap() {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn single_bound() {
        let lp = LinearProgram {
            objective: vec![1.0],
            constraints: vec![Constraint::new(vec![1.0], Relation::Le, 1.0)],
        };
        assert_eq!(optimal(&lp).objective, 1.0);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let lp = LinearProgram {
            objective: vec![1.0],
            constraints: vec![
                Constraint::new(vec![1.0], Relation::Le, 1.0),
                Constraint::new(vec![1.0], Relation::Ge, 2.0),
            ],
        };
        assert_eq!(lp_solve(&lp).unwrap(), LpOutcome::Infeasible);
        let lp = LinearProgram {
            objective: vec![1.0, 0.0],
            constraints: vec![Constraint::new(vec![1.0, -1.0], Relation::Le, 1.0)],
        };
        assert_eq!(lp_solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // max x + 2y, x + y = 1, -y >= -0.25  → y = 0.25, x = 0.75
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            constraints: vec![
                Constraint::new(vec![1.0, 1.0], Relation::Eq, 1.0),
                Constraint::new(vec![0.0, -1.0], Relation::Ge, -0.25),
            ],
        };
        let sol = optimal(&lp);
        assert!((sol.objective - 1.25).abs() < 1e-12);
        assert!((sol.x[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn duplicated_and_degenerate_rows_terminate() {
        let row = Constraint::new(vec![1.0, 1.0, 1.0], Relation::Le, 0.0);
        let mut constraints = vec![row.clone(), row.clone(), row];
        constraints.push(Constraint::new(vec![1.0, 1.0, 1.0], Relation::Eq, 0.0));
        constraints.push(Constraint::new(vec![1.0, 1.0, 1.0], Relation::Eq, 0.0));
        let lp = LinearProgram {
            objective: vec![1.0, 1.0, 1.0],
            constraints,
        };
        assert_eq!(optimal(&lp).objective, 0.0);

        // Beale's classic cycling example for Dantzig's rule.
        let lp = LinearProgram {
            objective: vec![0.75, -150.0, 0.02, -6.0],
            constraints: vec![
                Constraint::new(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0),
                Constraint::new(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0),
                Constraint::new(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0),
            ],
        };
        assert!((optimal(&lp).objective - 0.05).abs() < 1e-12);
    }

    /// Best objective over all vertices of `{Ax ≤ b, x ≥ 0}` by solving every
    /// square subsystem of active constraints.
    fn vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
        let n = c.len();
        let m = a.len();
        // all constraints as rows g·x ≤ h, including -x_i ≤ 0
        let mut g: Vec<Vec<f64>> = a.to_vec();
        let mut h: Vec<f64> = b.to_vec();
        for i in 0..n {
            let mut row = vec![0.0; n];
            row[i] = -1.0;
            g.push(row);
            h.push(0.0);
        }
        let total = m + n;
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let active: Vec<usize> = (0..total).filter(|i| mask >> i & 1 == 1).collect();
            let mat = DMatrix::from_fn(n, n, |r, col| g[active[r]][col]);
            let rhs = DVector::from_fn(n, |r, _| h[active[r]]);
            let Some(x) = mat.lu().solve(&rhs) else { continue };
            let feasible =
                (0..total).all(|i| g[i].iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() <= h[i] + 1e-9);
            if feasible {
                best = best.max(c.iter().zip(x.iter()).map(|(p, q)| p * q).sum());
            }
        }
        best
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..50 {
            let n = rng.random_range(1..=6);
            let m = rng.random_range(1..=6);
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut a: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let mut b: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..2.0)).collect();
            // box constraint keeps the polytope bounded
            a.push(vec![1.0; n]);
            b.push(5.0);
            let lp = LinearProgram {
                objective: c.clone(),
                constraints: a
                    .iter()
                    .zip(&b)
                    .map(|(row, rhs)| Constraint::new(row.clone(), Relation::Le, *rhs))
                    .collect(),
            };
            let want = vertex_enumeration(&c, &a, &b);
            let got = optimal(&lp).objective;
            assert!((got - want).abs() <= 1e-7, "simplex {got} vs enumeration {want}");
        }
    }
}
