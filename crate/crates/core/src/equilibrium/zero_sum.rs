use super::lp::{lp_solve, Constraint, LinearProgram, LpOutcome, Relation};
use super::{clean_distribution, PayoffMatrix};
use crate::error::{Error, Result};

/// Allowed gap between the row player's and column player's LP values.
pub const DUALITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSumSolution {
    pub value: f64,
    /// Maximin strategy of the row (max) player.
    pub row_strategy: Vec<f64>,
    /// Minimax strategy of the column (min) player.
    pub col_strategy: Vec<f64>,
}

/// Solves `max_x min_b Σ_a x_a q(a,b)` for `x` on the simplex. The returned
/// value is relative to the shifted table (all entries `≥ 1`).
fn guaranteed_level(q: &PayoffMatrix) -> Result<(f64, Vec<f64>)> {
    let (na, nb) = (q.rows(), q.cols());
    let v_col = na;
    let mut constraints = Vec::with_capacity(nb + 1);
    for b in 0..nb {
        // v − Σ_a x_a q(a,b) ≤ 0
        let mut coefficients: Vec<f64> = (0..na).map(|a| -q.get(a, b)).collect();
        coefficients.push(1.0);
        constraints.push(Constraint::new(coefficients, Relation::Le, 0.0));
    }
    let mut simplex_row = vec![1.0; na];
    simplex_row.push(0.0);
    constraints.push(Constraint::new(simplex_row, Relation::Eq, 1.0));
    let mut objective = vec![0.0; na];
    objective.push(1.0);
    match lp_solve(&LinearProgram { objective, constraints })? {
        LpOutcome::Optimal(sol) => {
            let mut x = sol.x[..v_col].to_vec();
            clean_distribution(&mut x);
            Ok((sol.x[v_col], x))
        }
        other => Err(Error::Numeric(format!("zero-sum program reported {other:?}"))),
    }
}

/// Value and optimal strategies of the zero-sum game where the row player
/// maximizes and the column player minimizes `q`.
pub fn zero_sum_value(q: &PayoffMatrix) -> Result<ZeroSumSolution> {
    // Shift so both LP value variables are positive and need no sign split.
    let shift = 1.0 - q.min();
    let shifted = q.affine(1.0, shift);
    let (v, row_strategy) = guaranteed_level(&shifted)?;

    // Column player: max_y min_a Σ_b y_b (−q(a,b)) on the transposed,
    // negated and re-shifted table.
    let neg_t = PayoffMatrix::new(
        q.cols(),
        q.rows(),
        (0..q.cols())
            .flat_map(|b| (0..q.rows()).map(move |a| (b, a)))
            .map(|(b, a)| q.max() - q.get(a, b) + 1.0)
            .collect(),
    )?;
    let (w_neg, col_strategy) = guaranteed_level(&neg_t)?;
    let primal = v - shift;
    let dual = q.max() + 1.0 - w_neg;
    if (primal - dual).abs() > DUALITY_TOL {
        return Err(Error::Numeric(format!(
            "zero-sum duality gap {} exceeds tolerance",
            (primal - dual).abs()
        )));
    }
    Ok(ZeroSumSolution {
        value: primal,
        row_strategy,
        col_strategy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[Vec<f64>]) -> PayoffMatrix {
        PayoffMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn single_entry() {
        let sol = zero_sum_value(&m(&[vec![-0.7]])).unwrap();
        assert!((sol.value + 0.7).abs() < 1e-12);
    }

    #[test]
    fn matching_pennies() {
        let sol = zero_sum_value(&m(&[vec![1.0, -1.0], vec![-1.0, 1.0]])).unwrap();
        assert!(sol.value.abs() < 1e-12);
        for p in sol.row_strategy.iter().chain(&sol.col_strategy) {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn equalization_example() {
        // Row 0 with probability x: 3x + (1 − x) = x + 2(1 − x) at x = 1/3.
        let sol = zero_sum_value(&m(&[vec![3.0, 1.0], vec![1.0, 2.0]])).unwrap();
        assert!((sol.value - 5.0 / 3.0).abs() < 1e-12);
        assert!((sol.row_strategy[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((sol.row_strategy[1] - 2.0 / 3.0).abs() < 1e-12);
        // Column 0 with probability y: 3y + (1 − y) = y + 2(1 − y) at y = 1/3.
        assert!((sol.col_strategy[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn saddle_point() {
        let sol = zero_sum_value(&m(&[vec![2.0, 3.0], vec![1.0, 0.0]])).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-12);
        assert_eq!(sol.row_strategy, vec![1.0, 0.0]);
        assert_eq!(sol.col_strategy, vec![1.0, 0.0]);
    }

    fn table(rows: usize, cols: usize, q: &[f64]) -> PayoffMatrix {
        PayoffMatrix::new(rows, cols, q[..rows * cols].to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn minimax_sandwich(
            rows in 1usize..=6,
            cols in 1usize..=6,
            q in prop::collection::vec(-5.0f64..5.0, 36),
        ) {
            let q = table(rows, cols, &q);
            let value = zero_sum_value(&q).unwrap().value;
            let maximin = (0..rows)
                .map(|a| (0..cols).map(|b| q.get(a, b)).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max);
            let minimax = (0..cols)
                .map(|b| (0..rows).map(|a| q.get(a, b)).fold(f64::NEG_INFINITY, f64::max))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(maximin <= value + 1e-9);
            prop_assert!(value <= minimax + 1e-9);
        }

        #[test]
        fn strategies_guarantee_the_value(
            rows in 1usize..=6,
            cols in 1usize..=6,
            q in prop::collection::vec(-5.0f64..5.0, 36),
        ) {
            let q = table(rows, cols, &q);
            let sol = zero_sum_value(&q).unwrap();
            for b in 0..cols {
                let payoff: f64 = (0..rows).map(|a| sol.row_strategy[a] * q.get(a, b)).sum();
                prop_assert!(payoff >= sol.value - 1e-9);
            }
            for a in 0..rows {
                let payoff: f64 = (0..cols).map(|b| sol.col_strategy[b] * q.get(a, b)).sum();
                prop_assert!(payoff <= sol.value + 1e-9);
            }
        }

        #[test]
        fn affine_equivariance(
            rows in 1usize..=5,
            cols in 1usize..=5,
            q in prop::collection::vec(-5.0f64..5.0, 25),
            alpha in 0.1f64..10.0,
            beta in -10.0f64..10.0,
        ) {
            let q = table(rows, cols, &q);
            let base = zero_sum_value(&q).unwrap().value;
            let moved = zero_sum_value(&q.affine(alpha, beta)).unwrap().value;
            prop_assert!((moved - (alpha * base + beta)).abs() <= 1e-8 * (1.0 + alpha));
        }
    }
}
