use serde::{Deserialize, Serialize};

use crate::models::{kernel_tv_sup, TabularPomdp, Validate};
use crate::solvers::{evaluate_history_policy_horizon, tail_bound, HistoryPolicy};
use crate::{Error, Result};

/// Default cap on enumerated trajectories in [`strategic_tv`].
pub const STRATEGIC_BUDGET: u64 = 10_000_000;

/// Default cap on enumerated policies in [`policy_sup_gap`].
pub const SUP_GAP_BUDGET: u64 = 100_000;

/// Exact TV distance between the strategic measures two POMDPs induce under
/// one policy, with its `k · supTV` bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategicTv {
    pub horizon: usize,
    pub exact: f64,
    pub sup_tv: f64,
    pub bound: f64,
    pub holds: bool,
    /// Trajectories with positive probability under either model.
    pub paths: u64,
}

fn same_observation_structure(a: &TabularPomdp, b: &TabularPomdp) -> Result<()> {
    a.ensure_valid()?;
    b.ensure_valid()?;
    if a.mdp.initial != b.mdp.initial {
        return Err(Error::Incompatible("priors differ".into()));
    }
    if a.channel != b.channel {
        return Err(Error::Incompatible("observation channels differ".into()));
    }
    Ok(())
}

/// `Σ |P₁(τ) − P₂(τ)|` over all trajectories `τ = (x, y, u)_{[0,k]}` under a
/// deterministic history policy. Both models must share prior and channel.
pub fn strategic_tv(
    a: &TabularPomdp,
    b: &TabularPomdp,
    policy: &HistoryPolicy,
    k: usize,
    budget: u64,
) -> Result<StrategicTv> {
    same_observation_structure(a, b)?;
    policy.check(a)?;
    let sup_tv = kernel_tv_sup(a, b)?;
    let per_step = (a.mdp.n_states() * a.n_obs()) as u64;
    let required = (0..=k).try_fold(1u64, |acc, _| acc.checked_mul(per_step)).unwrap_or(u64::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded {
            horizon: k,
            budget,
            required,
        });
    }
    let mut walk = Walk {
        a,
        b,
        policy,
        k,
        total: 0.0,
        paths: 0,
    };
    walk.visit(0, None, None, 1.0, 1.0);
    let bound = k as f64 * sup_tv;
    Ok(StrategicTv {
        horizon: k,
        exact: walk.total,
        sup_tv,
        bound,
        holds: walk.total <= bound + 1e-10,
        paths: walk.paths,
    })
}

struct Walk<'a> {
    a: &'a TabularPomdp,
    b: &'a TabularPomdp,
    policy: &'a HistoryPolicy,
    k: usize,
    total: f64,
    paths: u64,
}

impl Walk<'_> {
    /// Extend a path whose last state/action are `prev` and whose tree
    /// cursor is `node`; `pa`, `pb` are its probabilities so far.
    fn visit(&mut self, t: usize, prev: Option<(usize, usize)>, node: Option<usize>, pa: f64, pb: f64) {
        let ns = self.a.mdp.n_states();
        for x in 0..ns {
            let (qa, qb) = match prev {
                None => (self.a.mdp.initial[x], self.b.mdp.initial[x]),
                Some((xp, u)) => (self.a.mdp.kernel[xp][u][x], self.b.mdp.kernel[xp][u][x]),
            };
            let (xa, xb) = (pa * qa, pb * qb);
            if xa <= 0.0 && xb <= 0.0 {
                continue;
            }
            for y in 0..self.a.n_obs() {
                let o = self.a.obs_prob(x, y);
                if o <= 0.0 {
                    continue;
                }
                let cursor = if t == 0 { self.policy.roots[y] } else { self.policy.step(node, y) };
                let u = self.policy.action_at(cursor);
                if t == self.k {
                    self.total += (xa * o - xb * o).abs();
                    self.paths += 1;
                } else {
                    self.visit(t + 1, Some((x, u)), cursor, xa * o, xb * o);
                }
            }
        }
    }
}

/// Largest difference in truncated cost over every deterministic history
/// policy of depth `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupGap {
    pub horizon: usize,
    /// `max_γ |J_H(T₁, γ) − J_H(T₂, γ)|` over stages `0..=H`.
    pub gap: f64,
    /// `‖c‖∞ β^{H+1}/(1−β)`.
    pub tail: f64,
    pub policies: u64,
    /// A maximizing policy (first in enumeration order).
    pub argmax: HistoryPolicy,
}

/// Exhaustive search over all `|U|^{#histories}` deterministic policies on
/// observation histories of length `1..=H+1`.
pub fn policy_sup_gap(a: &TabularPomdp, b: &TabularPomdp, horizon: usize, budget: u64) -> Result<SupGap> {
    same_observation_structure(a, b)?;
    if a.mdp.discount != b.mdp.discount {
        return Err(Error::Incompatible("discount factors differ".into()));
    }
    let (ny, na) = (a.n_obs() as u64, a.mdp.n_actions() as u64);
    let mut decision_nodes = 0u64;
    let mut level = ny;
    for _ in 0..=horizon {
        decision_nodes = decision_nodes.saturating_add(level);
        level = level.saturating_mul(ny);
    }
    let required = u32::try_from(decision_nodes)
        .ok()
        .and_then(|d| na.checked_pow(d))
        .unwrap_or(u64::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded {
            horizon,
            budget,
            required,
        });
    }
    let mut best: Option<(f64, HistoryPolicy)> = None;
    for code in 0..required {
        let mut rest = code;
        let policy = HistoryPolicy::from_fn(ny as usize, horizon, |_| {
            let u = (rest % na) as usize;
            rest /= na;
            u
        });
        let ja = evaluate_history_policy_horizon(a, &policy, horizon)?.value;
        let jb = evaluate_history_policy_horizon(b, &policy, horizon)?.value;
        let gap = (ja - jb).abs();
        if best.as_ref().map_or(true, |(g, _)| gap > *g) {
            best = Some((gap, policy));
        }
    }
    let (gap, argmax) = best.expect("at least one policy");
    let c = a.mdp.cost_sup().max(b.mdp.cost_sup());
    Ok(SupGap {
        horizon,
        gap,
        tail: tail_bound(c, a.mdp.discount, horizon),
        policies: required,
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TabularMdp;
    use crate::rng::Stream;
    use crate::solvers::solve_pomdp_belief_tree;

    fn pair(seed: u64, eps: f64) -> (TabularPomdp, TabularPomdp) {
        let mut rng = Stream::new(seed);
        let a = TabularPomdp::random(&mut rng, 3, 2, 2, 0.5);
        let other = TabularMdp::random(&mut rng, 3, 2, 0.5).kernel;
        let b = a.with_kernel(a.mdp.mixed_toward(&other, eps).kernel);
        (a, b)
    }

    fn random_policy(seed: u64, depth: usize) -> HistoryPolicy {
        let mut rng = Stream::new(seed);
        HistoryPolicy::from_fn(2, depth, |_| rng.index(2))
    }

    #[test]
    fn identical_models_have_zero_strategic_tv() {
        let (a, _) = pair(1, 0.0);
        let s = strategic_tv(&a, &a, &random_policy(1, 3), 3, STRATEGIC_BUDGET).unwrap();
        assert_eq!(s.exact, 0.0);
        assert!(s.holds);
    }

    #[test]
    fn one_step_tv_is_at_most_sup_tv() {
        for seed in 0..20 {
            let (a, b) = pair(seed, 0.3);
            let s = strategic_tv(&a, &b, &random_policy(seed, 1), 1, STRATEGIC_BUDGET).unwrap();
            assert!(s.exact <= s.sup_tv + 1e-12);
        }
    }

    #[test]
    fn one_step_tv_matches_direct_formula() {
        // k = 1 with an open-loop policy u_0 = 1: the trajectory law is
        // P(x0) Q(y0|x0) T(x1|x0,1) Q(y1|x1), so the TV is
        // Σ_{x0} P(x0) Σ_{x1} |T₁ − T₂|(x1|x0,1).
        let (a, b) = pair(3, 0.4);
        let pi = HistoryPolicy::open_loop(&[1, 1], 2);
        let s = strategic_tv(&a, &b, &pi, 1, STRATEGIC_BUDGET).unwrap();
        let mut oracle = 0.0;
        for x0 in 0..3 {
            for x1 in 0..3 {
                oracle += a.mdp.initial[x0] * (a.mdp.kernel[x0][1][x1] - b.mdp.kernel[x0][1][x1]).abs();
            }
        }
        assert!((s.exact - oracle).abs() <= 1e-14);
    }

    #[test]
    fn strategic_tv_is_monotone_and_bounded() {
        for seed in 0..25 {
            let (a, b) = pair(seed, 0.2);
            let pi = random_policy(seed + 100, 4);
            let mut last = 0.0;
            for k in 1..=4 {
                let s = strategic_tv(&a, &b, &pi, k, STRATEGIC_BUDGET).unwrap();
                assert!(s.holds, "seed {seed} k {k}");
                assert!(s.exact >= last - 1e-12);
                last = s.exact;
            }
        }
    }

    #[test]
    fn strategic_budget_is_enforced() {
        let (a, b) = pair(1, 0.1);
        assert!(matches!(
            strategic_tv(&a, &b, &random_policy(1, 4), 4, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn mismatched_channels_are_rejected() {
        let (a, _) = pair(1, 0.1);
        let (c, _) = pair(2, 0.1);
        assert!(matches!(
            strategic_tv(&a, &c, &random_policy(1, 2), 2, STRATEGIC_BUDGET),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn sup_gap_zero_for_identical_models() {
        let (a, _) = pair(4, 0.0);
        assert_eq!(policy_sup_gap(&a, &a, 1, SUP_GAP_BUDGET).unwrap().gap, 0.0);
    }

    #[test]
    fn sup_gap_dominates_optimal_value_gap() {
        for seed in 0..5 {
            let (a, b) = pair(seed, 0.5);
            let h = 2;
            let s = policy_sup_gap(&a, &b, h, SUP_GAP_BUDGET).unwrap();
            assert_eq!(s.policies, 1 << 14);
            let ja = solve_pomdp_belief_tree(&a, 1e-2).unwrap().value;
            let jb = solve_pomdp_belief_tree(&b, 1e-2).unwrap().value;
            assert!(s.gap >= (ja - jb).abs() - 2.0 * s.tail - 2e-2);
        }
    }

    #[test]
    fn sup_gap_small_for_small_mixing() {
        // For a fixed policy, stage t differs by at most ‖c‖∞ · t · supTV / 2
        // (the state law at t has drifted by ≤ t·supTV in TV), and
        // supTV ≤ 2ε under mixing.
        for seed in 0..5 {
            let eps = 0.05;
            let (a, b) = pair(seed, eps);
            let h = 2;
            let s = policy_sup_gap(&a, &b, h, SUP_GAP_BUDGET).unwrap();
            let c = a.mdp.cost_sup();
            let oracle: f64 = (0..=h).map(|t| 0.5f64.powi(t as i32) * c * t as f64 * 2.0 * eps / 2.0).sum();
            assert!(s.gap <= oracle + 1e-12);
        }
    }

    #[test]
    fn sup_gap_budget_is_enforced() {
        let (a, b) = pair(4, 0.1);
        match policy_sup_gap(&a, &b, 3, SUP_GAP_BUDGET) {
            Err(Error::BudgetExceeded { required, .. }) => assert_eq!(required, 1 << 30),
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
