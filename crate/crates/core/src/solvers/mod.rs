//! Discounted-cost solvers and policy evaluators.
//!
//! * [`value_iterate`] and [`evaluate_policy_exact`] for tabular MDPs.
//! * [`evaluate_region_policy`] propagates the state distribution of a region
//!   model forward under a piecewise-constant or open-loop policy.
//! * [`solve_pomdp_belief_tree`] runs a finite-horizon dynamic program over
//!   reachable beliefs of a tabular POMDP, and [`evaluate_history_policy`]
//!   evaluates an observation-history decision tree exactly.
//!
//! Every truncation horizon is derived from `(tol, β, ‖c‖∞)` through
//! [`horizon_for`]. Ties between actions always go to the lowest index.

mod belief;
mod region;
mod tabular;

use serde::{Deserialize, Serialize};

pub use belief::{
    evaluate_history_policy, evaluate_history_policy_horizon, solve_pomdp_belief_tree,
    solve_pomdp_horizon, BeliefSolution, HistoryEvaluation, HistoryNode, HistoryPolicy,
    DEFAULT_NODE_BUDGET,
};
pub use region::{evaluate_region_policy, evaluate_region_policy_horizon, RegionEvaluation, RegionPolicy};
pub use tabular::{
    evaluate_policy_exact, greedy_policy, q_values, value_iterate, StationaryPolicy, ValueFunction,
    ValueIteration,
};

use crate::{Error, Result};

/// Smallest `H` with `‖c‖∞ β^{H+1} / (1 − β) ≤ tol`: truncating a discounted
/// sum after stage `H` then loses at most `tol`.
pub fn horizon_for(cost_sup: f64, discount: f64, tol: f64) -> Result<usize> {
    check_tol(tol)?;
    if cost_sup <= 0.0 || discount <= 0.0 {
        return Ok(0);
    }
    let mut h = 0usize;
    while tail_bound(cost_sup, discount, h) > tol {
        h += 1;
    }
    Ok(h)
}

/// `‖c‖∞ β^{H+1} / (1 − β)`: the largest possible cost after stage `H`.
pub fn tail_bound(cost_sup: f64, discount: f64, horizon: usize) -> f64 {
    cost_sup * discount.powi(horizon as i32 + 1) / (1.0 - discount)
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::BadTolerance(tol))
    }
}

/// Index of the smallest entry; the first one wins ties.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Which solver produced a design policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySource {
    ValueIteration,
    BeliefTree,
    Analytic,
}
