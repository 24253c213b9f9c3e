use super::lp::{lp_solve, Constraint, LinearProgram, LpOutcome, Relation};
use super::{clean_distribution, JointDistribution, MarginalPair, PayoffMatrix};
use crate::error::{Error, Result};

/// Numeric slack added to ε when checking CCE constraints.
pub const VERIFY_SLACK: f64 = 1e-9;

/// Outcome of checking the two CCE constraint families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CceCheck {
    pub pass: bool,
    /// Largest amount by which a unilateral deviation beats `σ`. Nonpositive
    /// when `σ` is an exact CCE.
    pub worst_violation: f64,
}

/// Row and column sums of `σ`.
pub fn marginals(sigma: &JointDistribution) -> MarginalPair {
    let mut row = vec![0.0; sigma.rows()];
    let mut col = vec![0.0; sigma.cols()];
    for (a, r) in row.iter_mut().enumerate() {
        for (b, c) in col.iter_mut().enumerate() {
            let p = sigma.get(a, b);
            *r += p;
            *c += p;
        }
    }
    MarginalPair { row, col }
}

fn check_shapes(q_max: &PayoffMatrix, q_min: &PayoffMatrix) -> Result<()> {
    if q_max.rows() != q_min.rows() || q_max.cols() != q_min.cols() {
        return Err(Error::Usage(format!(
            "payoff shapes differ: {}×{} vs {}×{}",
            q_max.rows(),
            q_max.cols(),
            q_min.rows(),
            q_min.cols()
        )));
    }
    Ok(())
}

/// Checks `E_σ q_max ≥ max_{a'} E_{b∼ν} q_max(a',b) − ε` and
/// `E_σ q_min ≤ min_{b'} E_{a∼π} q_min(a,b') + ε`.
pub fn verify_cce(
    sigma: &JointDistribution,
    q_max: &PayoffMatrix,
    q_min: &PayoffMatrix,
    epsilon: f64,
) -> Result<CceCheck> {
    check_shapes(q_max, q_min)?;
    if sigma.rows() != q_max.rows() || sigma.cols() != q_max.cols() {
        return Err(Error::Usage("distribution and payoff shapes differ".into()));
    }
    let MarginalPair { row, col } = marginals(sigma);
    let on_max = sigma.expectation(q_max.as_slice());
    let on_min = sigma.expectation(q_min.as_slice());
    let mut worst = f64::NEG_INFINITY;
    for a in 0..q_max.rows() {
        let deviation: f64 = col.iter().enumerate().map(|(b, p)| p * q_max.get(a, b)).sum();
        worst = worst.max(deviation - on_max);
    }
    for b in 0..q_min.cols() {
        let deviation: f64 = row.iter().enumerate().map(|(a, p)| p * q_min.get(a, b)).sum();
        worst = worst.max(on_min - deviation);
    }
    Ok(CceCheck {
        pass: worst <= epsilon + VERIFY_SLACK,
        worst_violation: worst,
    })
}

/// An ε-CCE of the bimatrix game where the row player maximizes `q_max` and
/// the column player minimizes `q_min`.
///
/// Solves `max t` over `σ ∈ Δ(A_max × A_min)` subject to every unilateral
/// deviation gaining at most `-t`. An exact CCE always exists, so the optimum
/// has `t ≥ 0`.
pub fn epsilon_cce(q_max: &PayoffMatrix, q_min: &PayoffMatrix, epsilon: f64) -> Result<JointDistribution> {
    check_shapes(q_max, q_min)?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Usage(format!("ε must be nonnegative, got {epsilon}")));
    }
    let (na, nb) = (q_max.rows(), q_max.cols());
    if na * nb == 1 {
        return Ok(JointDistribution::point_mass(1, 1, 0, 0));
    }
    let range = (q_max.max() - q_max.min()).max(q_min.max() - q_min.min());
    // t is stored shifted by `shift` so the LP variable stays nonnegative;
    // on the simplex `t + shift = Σσ·(…) + shift·Σσ`.
    let shift = 2.0 * range + 1.0;
    let n = na * nb + 1;
    let t_col = na * nb;
    let mut constraints = Vec::with_capacity(na + nb + 1);
    for dev in 0..na {
        // Σσ (q_max(a,b) − q_max(dev,b)) ≥ t
        let mut coefficients = vec![0.0; n];
        for a in 0..na {
            for b in 0..nb {
                coefficients[a * nb + b] = -(q_max.get(a, b) - q_max.get(dev, b) + shift);
            }
        }
        coefficients[t_col] = 1.0;
        constraints.push(Constraint::new(coefficients, Relation::Le, 0.0));
    }
    for dev in 0..nb {
        // Σσ (q_min(a,dev) − q_min(a,b)) ≥ t
        let mut coefficients = vec![0.0; n];
        for a in 0..na {
            for b in 0..nb {
                coefficients[a * nb + b] = -(q_min.get(a, dev) - q_min.get(a, b) + shift);
            }
        }
        coefficients[t_col] = 1.0;
        constraints.push(Constraint::new(coefficients, Relation::Le, 0.0));
    }
    let mut simplex_row = vec![1.0; n];
    simplex_row[t_col] = 0.0;
    constraints.push(Constraint::new(simplex_row, Relation::Eq, 1.0));
    let mut objective = vec![0.0; n];
    objective[t_col] = 1.0;

    let solution = match lp_solve(&LinearProgram { objective, constraints })? {
        LpOutcome::Optimal(s) => s,
        other => {
            return Err(Error::Invariant(format!("CCE program reported {other:?}")));
        }
    };
    let slack = solution.x[t_col] - shift;
    if slack < -epsilon - VERIFY_SLACK {
        return Err(Error::Invariant(format!(
            "CCE program optimum {slack} below -ε = {}",
            -epsilon
        )));
    }
    let mut probs = solution.x[..t_col].to_vec();
    clean_distribution(&mut probs);
    let sigma = JointDistribution::new(na, nb, probs)?;
    let check = verify_cce(&sigma, q_max, q_min, epsilon)?;
    if !check.pass {
        return Err(Error::Invariant(format!(
            "computed distribution violates CCE constraints by {}",
            check.worst_violation
        )));
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::super::zero_sum_value;
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[Vec<f64>]) -> PayoffMatrix {
        PayoffMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn single_cell() {
        let q = m(&[vec![0.3]]);
        let sigma = epsilon_cce(&q, &q, 0.0).unwrap();
        assert_eq!(sigma.as_slice(), &[1.0]);
    }

    #[test]
    fn matching_pennies_uniform_is_tight() {
        let q = m(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let check = verify_cce(&JointDistribution::uniform(2, 2), &q, &q, 0.0).unwrap();
        assert!(check.pass);
        assert_eq!(check.worst_violation, 0.0);
        let sigma = epsilon_cce(&q, &q, 0.0).unwrap();
        assert!(verify_cce(&sigma, &q, &q, 0.0).unwrap().pass);
        // the zero-sum value is 0, so any CCE has E_σ q = 0
        assert!(sigma.expectation(q.as_slice()).abs() < 1e-9);
    }

    #[test]
    fn dominated_row_carries_little_mass() {
        let q_max = m(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        let q_min = m(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        let sigma = epsilon_cce(&q_max, &q_min, 0.1).unwrap();
        assert!(sigma.get(0, 0) + sigma.get(0, 1) >= 0.9 - 1e-12);
    }

    #[test]
    fn dominated_point_mass_fails() {
        let q_max = m(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        let q_min = m(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        let check = verify_cce(&JointDistribution::point_mass(2, 2, 1, 0), &q_max, &q_min, 0.0).unwrap();
        assert!(!check.pass);
        assert_eq!(check.worst_violation, 1.0);
    }

    #[test]
    fn huge_epsilon_accepts_anything() {
        let q_max = m(&[vec![3.0, -2.0], vec![0.5, 1.0]]);
        let q_min = m(&[vec![-1.0, 4.0], vec![2.0, 0.0]]);
        let eps = 2.0 * 6.0;
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let sigma = JointDistribution::point_mass(2, 2, a, b);
            assert!(verify_cce(&sigma, &q_max, &q_min, eps).unwrap().pass);
        }
    }

    #[test]
    fn marginals_of_simple_tables() {
        let mp = marginals(&JointDistribution::uniform(2, 2));
        assert_eq!(mp.row, vec![0.5, 0.5]);
        assert_eq!(mp.col, vec![0.5, 0.5]);
        let mp = marginals(&JointDistribution::point_mass(2, 2, 1, 0));
        assert_eq!(mp.row, vec![0.0, 1.0]);
        assert_eq!(mp.col, vec![1.0, 0.0]);
    }

    #[test]
    fn correlated_table_differs_from_product_of_marginals() {
        let sigma = JointDistribution::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let mp = marginals(&sigma);
        assert!((mp.row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!((mp.col.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let q = [1.0, -1.0, -1.0, 1.0];
        let product = JointDistribution::product(&mp.row, &mp.col);
        assert_eq!(sigma.expectation(&q), 1.0);
        assert_eq!(product.expectation(&q), 0.0);
    }

    #[test]
    fn shape_mismatch_is_usage_error() {
        let a = m(&[vec![0.0, 1.0]]);
        let b = m(&[vec![0.0], vec![1.0]]);
        assert!(matches!(epsilon_cce(&a, &b, 0.0), Err(Error::Usage(_))));
    }

    fn payoff(rows: usize, cols: usize, seed: &[f64]) -> PayoffMatrix {
        PayoffMatrix::new(rows, cols, seed[..rows * cols].to_vec()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn cce_output_always_verifies(
            rows in 1usize..=6,
            cols in 1usize..=6,
            q1 in prop::collection::vec(-3.0f64..3.0, 36),
            q2 in prop::collection::vec(-3.0f64..3.0, 36),
            eps in prop_oneof![Just(0.0), 0.0f64..0.5],
        ) {
            let q_max = payoff(rows, cols, &q1);
            let q_min = payoff(rows, cols, &q2);
            let sigma = epsilon_cce(&q_max, &q_min, eps).unwrap();
            prop_assert!(verify_cce(&sigma, &q_max, &q_min, eps).unwrap().pass);
            prop_assert!(sigma.as_slice().iter().all(|p| *p >= 0.0));
            prop_assert!((sigma.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn zero_sum_product_is_exact_cce(
            rows in 1usize..=6,
            cols in 1usize..=6,
            q in prop::collection::vec(-3.0f64..3.0, 36),
        ) {
            let q = payoff(rows, cols, &q);
            let sol = zero_sum_value(&q).unwrap();
            let sigma = JointDistribution::product(&sol.row_strategy, &sol.col_strategy);
            prop_assert!(verify_cce(&sigma, &q, &q, 0.0).unwrap().pass);
        }
    }
}
