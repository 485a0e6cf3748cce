use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{argmin, check_tol};
use crate::models::{TabularMdp, Validate};
use crate::{Error, Result};

/// Deterministic stationary policy of a tabular model: one action index per
/// state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationaryPolicy {
    pub actions: Vec<usize>,
}

impl StationaryPolicy {
    pub fn new(actions: Vec<usize>) -> Self {
        Self { actions }
    }

    pub fn constant(n_states: usize, action: usize) -> Self {
        Self {
            actions: vec![action; n_states],
        }
    }

    pub fn action(&self, x: usize) -> usize {
        self.actions[x]
    }

    pub fn check(&self, m: &TabularMdp) -> Result<()> {
        if self.actions.len() != m.n_states() {
            return Err(Error::InvalidParameter(format!(
                "policy covers {} states, model has {}",
                self.actions.len(),
                m.n_states()
            )));
        }
        if let Some(&u) = self.actions.iter().find(|&&u| u >= m.n_actions()) {
            return Err(Error::InvalidParameter(format!(
                "policy action {u} out of range (model has {} actions)",
                m.n_actions()
            )));
        }
        Ok(())
    }
}

/// Values indexed by tabular state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `Σ_x prior(x) v(x)`: the value of a randomized start.
    pub fn expect(&self, prior: &[f64]) -> f64 {
        self.0.iter().zip(prior).map(|(v, p)| v * p).sum()
    }
}

/// Output of [`value_iterate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueIteration {
    pub value: ValueFunction,
    pub policy: StationaryPolicy,
    pub iterations: usize,
    /// `‖v_k − v_{k−1}‖∞` for every iteration, starting from `v_0 = 0`.
    pub gaps: Vec<f64>,
    /// Certified bound on `‖v − v*‖∞`.
    pub error_bound: f64,
}

impl ValueIteration {
    /// Optimal value at the model's initial distribution.
    pub fn value_at_initial(&self, m: &TabularMdp) -> f64 {
        self.value.expect(&m.initial)
    }
}

/// `Q(x, u) = c(x, u) + β Σ_{x'} T(x'|x, u) v(x')`.
pub fn q_values(m: &TabularMdp, v: &[f64], x: usize) -> Vec<f64> {
    (0..m.n_actions())
        .map(|u| m.cost[x][u] + m.discount * dot(m.row(x, u), v))
        .collect()
}

/// Greedy policy with respect to `v`, lowest action index on ties.
pub fn greedy_policy(m: &TabularMdp, v: &[f64]) -> StationaryPolicy {
    StationaryPolicy::new((0..m.n_states()).map(|x| argmin(&q_values(m, v, x))).collect())
}

/// Value iteration from `v_0 = 0` on the discounted cost optimality operator.
///
/// Stops at the first `k ≥ 1` where either `k ≥ log(tol(1−β)/‖c‖∞)/log β`
/// (so `β^k ‖c‖∞/(1−β) ≤ tol`) or the last gap is at most `tol(1−β)/β`.
/// Either way `‖v_k − v*‖∞ ≤ tol`.
pub fn value_iterate(m: &TabularMdp, tol: f64) -> Result<ValueIteration> {
    check_tol(tol)?;
    m.ensure_valid()?;
    let beta = m.discount;
    let c_sup = m.cost_sup();
    let k_max = if c_sup > 0.0 {
        ((tol * (1.0 - beta) / c_sup).ln() / beta.ln()).ceil().max(1.0) as usize
    } else {
        1
    };
    let gap_stop = tol * (1.0 - beta) / beta;

    let mut v = vec![0.0; m.n_states()];
    let mut gaps = Vec::new();
    loop {
        let next: Vec<f64> = (0..m.n_states())
            .map(|x| {
                q_values(m, &v, x)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let gap = next
            .iter()
            .zip(&v)
            .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()));
        v = next;
        gaps.push(gap);
        if gaps.len() >= k_max || gap <= gap_stop {
            break;
        }
    }
    let k = gaps.len();
    let error_bound = (beta.powi(k as i32) * c_sup / (1.0 - beta)).min(beta * gaps[k - 1] / (1.0 - beta));
    let policy = greedy_policy(m, &v);
    Ok(ValueIteration {
        value: ValueFunction(v),
        policy,
        iterations: gaps.len(),
        gaps,
        error_bound,
    })
}

/// Solve `(I − β P_π) v = c_π` by LU factorization with partial pivoting.
pub fn evaluate_policy_exact(m: &TabularMdp, policy: &StationaryPolicy) -> Result<ValueFunction> {
    m.ensure_valid()?;
    policy.check(m)?;
    let n = m.n_states();
    let beta = m.discount;
    let a = DMatrix::from_fn(n, n, |x, y| {
        let p = m.kernel[x][policy.action(x)][y];
        if x == y {
            1.0 - beta * p
        } else {
            -beta * p
        }
    });
    let c = DVector::from_fn(n, |x, _| m.cost[x][policy.action(x)]);
    let lu = a.clone().lu();
    let mut v = lu
        .solve(&c)
        .ok_or(Error::SingularSystem { residual: f64::INFINITY })?;
    // One step of iterative refinement.
    let r = &c - &a * &v;
    if let Some(dv) = lu.solve(&r) {
        v += dv;
    }
    let residual = (&c - &a * &v).amax();
    if !residual.is_finite() || residual > 1e-10 {
        return Err(Error::SingularSystem { residual });
    }
    Ok(ValueFunction(v.iter().copied().collect()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single(cost: f64, beta: f64) -> TabularMdp {
        TabularMdp::new(
            vec![vec![vec![1.0]]],
            vec![vec![cost]],
            beta,
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn zero_cost_takes_one_iteration() {
        let mut m = TabularMdp::random(&mut Stream::new(1), 4, 2, 0.9);
        m.cost = vec![vec![0.0; 2]; 4];
        let vi = value_iterate(&m, 1e-9).unwrap();
        assert_eq!(vi.iterations, 1);
        assert!(vi.value.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn geometric_series() {
        let vi = value_iterate(&single(1.0, 0.5), 1e-12).unwrap();
        assert_abs_diff_eq!(vi.value.0[0], 2.0, epsilon = 1e-12);
        let v = evaluate_policy_exact(&single(1.0, 0.5), &StationaryPolicy::constant(1, 0)).unwrap();
        assert_abs_diff_eq!(v.0[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(value_iterate(&single(1.0, 0.5), 0.0), Err(Error::BadTolerance(_))));
        assert!(value_iterate(&single(1.0, 0.5), -1.0).is_err());
    }

    #[test]
    fn unit_cost_value_is_one_over_one_minus_beta() {
        let mut m = TabularMdp::random(&mut Stream::new(8), 5, 3, 0.7);
        m.cost = vec![vec![1.0; 3]; 5];
        let v = evaluate_policy_exact(&m, &StationaryPolicy::new(vec![0, 1, 2, 1, 0])).unwrap();
        for x in v.0 {
            assert_abs_diff_eq!(x, 1.0 / 0.3, epsilon = 1e-12);
        }
    }

    #[test]
    fn absorbing_zero_cost_state() {
        let m = TabularMdp::new(
            vec![vec![vec![0.5, 0.5]], vec![vec![0.0, 1.0]]],
            vec![vec![1.0], vec![0.0]],
            0.8,
            vec![1.0, 0.0],
        )
        .unwrap();
        let v = evaluate_policy_exact(&m, &StationaryPolicy::constant(2, 0)).unwrap();
        assert_eq!(v.0[1], 0.0);
        // v0 = 1 + 0.8 · 0.5 · v0.
        assert_abs_diff_eq!(v.0[0], 1.0 / 0.6, epsilon = 1e-13);
    }

    #[test]
    fn value_iteration_matches_linear_solve_of_greedy() {
        for seed in 0..20 {
            let m = TabularMdp::random(&mut Stream::new(seed), 5, 3, 0.5 + 0.02 * seed as f64);
            let tol = 1e-8;
            let vi = value_iterate(&m, tol).unwrap();
            let exact = evaluate_policy_exact(&m, &vi.policy).unwrap();
            assert!(vi.value.sup_distance(&exact) <= tol, "seed {seed}");
            assert!(vi.error_bound <= tol);
        }
    }

    #[test]
    fn greedy_policy_is_optimal_against_all_policies() {
        let m = TabularMdp::random(&mut Stream::new(3), 3, 2, 0.8);
        let vi = value_iterate(&m, 1e-10).unwrap();
        for code in 0..8usize {
            let pi = StationaryPolicy::new((0..3).map(|x| (code >> x) & 1).collect());
            let v = evaluate_policy_exact(&m, &pi).unwrap();
            for x in 0..3 {
                assert!(v.0[x] >= vi.value.0[x] - 2e-10);
            }
        }
    }

    #[test]
    fn policy_value_matches_simulation() {
        let m = TabularMdp::random(&mut Stream::new(5), 4, 2, 0.9);
        let pi = StationaryPolicy::new(vec![1, 0, 1, 0]);
        let exact = evaluate_policy_exact(&m, &pi).unwrap();
        let horizon = 400;
        let episodes = 20_000;
        let mut rng = Stream::new(77);
        let mut total = 0.0;
        for _ in 0..episodes {
            let mut x = 0;
            let mut disc = 1.0;
            let mut sum = 0.0;
            for _ in 0..horizon {
                let u = pi.action(x);
                sum += disc * m.cost[x][u];
                disc *= m.discount;
                x = rng.categorical(m.row(x, u));
            }
            total += sum;
        }
        let mean = total / episodes as f64;
        let c = m.cost_sup();
        let band = 3.0 * c * 0.9f64.powi(horizon) / 0.1 + 4.0 * c / 0.1 / (episodes as f64).sqrt();
        assert!((mean - exact.0[0]).abs() <= band, "{mean} vs {}", exact.0[0]);
    }

    proptest! {
        #[test]
        fn gaps_contract(seed in 0u64..500, beta in 0.1f64..0.95) {
            let m = TabularMdp::random(&mut Stream::new(seed), 4, 3, beta);
            let vi = value_iterate(&m, 1e-10).unwrap();
            for w in vi.gaps.windows(2) {
                prop_assert!(w[1] <= beta * w[0] + 1e-12);
            }
            prop_assert!(vi.value.sup_norm() <= m.cost_sup() / (1.0 - beta) + 1e-10);
        }

        #[test]
        fn greedy_suboptimality_bound(seed in 0u64..500, beta in 0.1f64..0.95) {
            let m = TabularMdp::random(&mut Stream::new(seed), 5, 3, beta);
            let tol = 1e-6;
            let vi = value_iterate(&m, tol).unwrap();
            let v = evaluate_policy_exact(&m, &vi.policy).unwrap();
            for x in 0..5 {
                prop_assert!(v.0[x] >= vi.value.0[x] - 2.0 * tol);
            }
        }
    }
}
