use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{argmin, horizon_for, tail_bound};
use crate::models::{TabularPomdp, Validate};
use crate::{Error, Result};

/// Default cap on distinct belief nodes in [`solve_pomdp_belief_tree`].
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

/// Beliefs are rounded to this grid before deduplication.
const BELIEF_GRID: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryNode {
    pub action: usize,
    /// Successor node for each next observation; `None` means the tree ends
    /// there and the default action takes over.
    pub children: Vec<Option<usize>>,
}

/// Deterministic policy on observation histories, stored as a DAG: nodes
/// reached by different histories may be shared. The first observation
/// selects a root; each later observation follows a child edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryPolicy {
    pub n_obs: usize,
    /// Number of decision stages after the first one covered by the tree.
    pub depth: usize,
    /// Action used once a history leaves the tree.
    pub default_action: usize,
    pub roots: Vec<Option<usize>>,
    pub nodes: Vec<HistoryNode>,
}

impl HistoryPolicy {
    /// Observation-blind action sequence `u_0, …, u_{k−1}`.
    pub fn open_loop(actions: &[usize], n_obs: usize) -> Self {
        let mut nodes: Vec<HistoryNode> = Vec::with_capacity(actions.len());
        for (i, &a) in actions.iter().enumerate() {
            let next = (i + 1 < actions.len()).then_some(i + 1);
            nodes.push(HistoryNode {
                action: a,
                children: vec![next; n_obs],
            });
        }
        Self {
            n_obs,
            depth: actions.len().saturating_sub(1),
            default_action: 0,
            roots: vec![(!actions.is_empty()).then_some(0); n_obs],
            nodes,
        }
    }

    /// Complete tree to `depth`: `choose(history)` gives the action after
    /// observing `history = [y_0, …, y_t]`.
    pub fn from_fn(n_obs: usize, depth: usize, mut choose: impl FnMut(&[usize]) -> usize) -> Self {
        let mut nodes = Vec::new();
        let mut history = Vec::new();
        let roots = (0..n_obs)
            .map(|y| {
                history.push(y);
                let id = Self::grow(&mut nodes, &mut history, n_obs, depth, &mut choose);
                history.pop();
                Some(id)
            })
            .collect();
        Self {
            n_obs,
            depth,
            default_action: 0,
            roots,
            nodes,
        }
    }

    fn grow(
        nodes: &mut Vec<HistoryNode>,
        history: &mut Vec<usize>,
        n_obs: usize,
        depth: usize,
        choose: &mut impl FnMut(&[usize]) -> usize,
    ) -> usize {
        let id = nodes.len();
        nodes.push(HistoryNode {
            action: choose(history),
            children: Vec::new(),
        });
        if history.len() <= depth {
            let children = (0..n_obs)
                .map(|y| {
                    history.push(y);
                    let c = Self::grow(nodes, history, n_obs, depth, choose);
                    history.pop();
                    Some(c)
                })
                .collect();
            nodes[id].children = children;
        }
        id
    }

    /// Node reached after `history`, if still inside the tree.
    pub fn cursor(&self, history: &[usize]) -> Option<usize> {
        let (&first, rest) = history.split_first()?;
        let mut node = (*self.roots.get(first)?)?;
        for &y in rest {
            node = (*self.nodes[node].children.get(y)?)?;
        }
        Some(node)
    }

    /// Action after `history` (default action outside the tree).
    pub fn action(&self, history: &[usize]) -> usize {
        self.cursor(history)
            .map_or(self.default_action, |n| self.nodes[n].action)
    }

    pub(crate) fn step(&self, node: Option<usize>, y: usize) -> Option<usize> {
        node.and_then(|n| self.nodes[n].children.get(y).copied().flatten())
    }

    pub(crate) fn action_at(&self, node: Option<usize>) -> usize {
        node.map_or(self.default_action, |n| self.nodes[n].action)
    }

    pub(crate) fn check(&self, m: &TabularPomdp) -> Result<()> {
        if self.n_obs != m.n_obs() || self.roots.len() != m.n_obs() {
            return Err(Error::InvalidParameter(format!(
                "policy is over {} observations, model has {}",
                self.n_obs,
                m.n_obs()
            )));
        }
        let na = m.mdp.n_actions();
        if self.default_action >= na || self.nodes.iter().any(|n| n.action >= na) {
            return Err(Error::InvalidParameter("policy action out of range".into()));
        }
        let n = self.nodes.len();
        let dangling = self
            .roots
            .iter()
            .chain(self.nodes.iter().flat_map(|n| &n.children))
            .flatten()
            .any(|&c| c >= n);
        if dangling {
            return Err(Error::InvalidParameter("policy references a missing node".into()));
        }
        Ok(())
    }
}

/// Output of [`solve_pomdp_belief_tree`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSolution {
    /// Optimal cost of stages `0..=horizon` at the prior.
    pub value: f64,
    pub policy: HistoryPolicy,
    pub horizon: usize,
    /// `value ≤ J* ≤ value + error_bound` (costs are nonnegative).
    pub error_bound: f64,
    /// Distinct (stage, belief) nodes visited.
    pub nodes: usize,
}

/// ε-optimal POMDP value at the prior via the belief-MDP dynamic program,
/// truncated at the horizon derived from `tol`.
pub fn solve_pomdp_belief_tree(m: &TabularPomdp, tol: f64) -> Result<BeliefSolution> {
    let horizon = horizon_for(m.mdp.cost_sup(), m.mdp.discount, tol)?;
    solve_pomdp_horizon(m, horizon, DEFAULT_NODE_BUDGET)
}

/// Exact minimum of the expected cost of stages `0..=horizon` over all
/// history-dependent policies.
pub fn solve_pomdp_horizon(m: &TabularPomdp, horizon: usize, budget: usize) -> Result<BeliefSolution> {
    m.ensure_valid()?;
    let mut dp = BeliefDp {
        m,
        horizon,
        budget,
        memo: HashMap::new(),
        nodes: Vec::new(),
        values: Vec::new(),
    };
    let ny = m.n_obs();
    let mut value = 0.0;
    let mut roots = Vec::with_capacity(ny);
    for y in 0..ny {
        match dp.posterior(&m.mdp.initial, y) {
            Some((py, b)) => {
                let id = dp.solve(0, b)?;
                value += py * dp.values[id];
                roots.push(Some(id));
            }
            None => roots.push(None),
        }
    }
    let nodes = dp.nodes.len();
    Ok(BeliefSolution {
        value,
        policy: HistoryPolicy {
            n_obs: ny,
            depth: horizon,
            default_action: 0,
            roots,
            nodes: dp.nodes,
        },
        horizon,
        error_bound: tail_bound(m.mdp.cost_sup(), m.mdp.discount, horizon),
        nodes,
    })
}

struct BeliefDp<'a> {
    m: &'a TabularPomdp,
    horizon: usize,
    budget: usize,
    memo: HashMap<(usize, Vec<i64>), usize>,
    nodes: Vec<HistoryNode>,
    values: Vec<f64>,
}

impl BeliefDp<'_> {
    /// `(P(y | b), b(· | y))`, or `None` if `y` has probability zero.
    fn posterior(&self, prior: &[f64], y: usize) -> Option<(f64, Vec<f64>)> {
        let joint: Vec<f64> = prior
            .iter()
            .enumerate()
            .map(|(x, p)| p * self.m.obs_prob(x, y))
            .collect();
        let py: f64 = joint.iter().sum();
        (py > 0.0).then(|| (py, joint.into_iter().map(|p| p / py).collect()))
    }

    fn solve(&mut self, t: usize, belief: Vec<f64>) -> Result<usize> {
        let key = (t, belief.iter().map(|p| (p * BELIEF_GRID).round() as i64).collect());
        if let Some(&id) = self.memo.get(&key) {
            return Ok(id);
        }
        if self.nodes.len() >= self.budget {
            return Err(self.budget_error());
        }
        let mdp = &self.m.mdp;
        let (ns, na, ny) = (mdp.n_states(), mdp.n_actions(), self.m.n_obs());
        let mut q = Vec::with_capacity(na);
        let mut kids = Vec::with_capacity(na);
        for u in 0..na {
            let stage: f64 = (0..ns).map(|x| belief[x] * mdp.cost[x][u]).sum();
            let mut children = vec![None; ny];
            let mut future = 0.0;
            if t < self.horizon {
                let mut pred = vec![0.0; ns];
                for (x, &bx) in belief.iter().enumerate() {
                    if bx > 0.0 {
                        for (next, p) in pred.iter_mut().zip(mdp.row(x, u)) {
                            *next += bx * p;
                        }
                    }
                }
                for (y, child) in children.iter_mut().enumerate() {
                    if let Some((py, post)) = self.posterior(&pred, y) {
                        let id = self.solve(t + 1, post)?;
                        future += py * self.values[id];
                        *child = Some(id);
                    }
                }
            }
            q.push(stage + mdp.discount * future);
            kids.push(children);
        }
        let best = argmin(&q);
        let id = self.nodes.len();
        self.nodes.push(HistoryNode {
            action: best,
            children: kids.swap_remove(best),
        });
        self.values.push(q[best]);
        self.memo.insert(key, id);
        Ok(id)
    }

    fn budget_error(&self) -> Error {
        let branching = (self.m.n_obs() * self.m.mdp.n_actions()) as u64;
        let mut required = 0u64;
        let mut level = self.m.n_obs() as u64;
        for _ in 0..=self.horizon {
            required = required.saturating_add(level);
            level = level.saturating_mul(branching);
        }
        Error::BudgetExceeded {
            horizon: self.horizon,
            budget: self.budget as u64,
            required,
        }
    }
}

/// Result of [`evaluate_history_policy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEvaluation {
    pub value: f64,
    pub horizon: usize,
    pub error_bound: f64,
    /// Whether some history with positive probability left the tree before
    /// the horizon, so that the default action was applied.
    pub default_action_used: bool,
    pub default_action: usize,
}

/// Expected discounted cost of a history policy, truncated at the horizon
/// derived from `tol`.
pub fn evaluate_history_policy(m: &TabularPomdp, policy: &HistoryPolicy, tol: f64) -> Result<HistoryEvaluation> {
    let horizon = horizon_for(m.mdp.cost_sup(), m.mdp.discount, tol)?;
    evaluate_history_policy_horizon(m, policy, horizon)
}

/// Exact expected cost of stages `0..=horizon`, by forward propagation of
/// the joint law of (tree cursor, state).
pub fn evaluate_history_policy_horizon(
    m: &TabularPomdp,
    policy: &HistoryPolicy,
    horizon: usize,
) -> Result<HistoryEvaluation> {
    m.ensure_valid()?;
    policy.check(m)?;
    let mdp = &m.mdp;
    let (ns, ny) = (mdp.n_states(), m.n_obs());
    let mut law: BTreeMap<(Option<usize>, usize), f64> = BTreeMap::new();
    for (x, &p) in mdp.initial.iter().enumerate() {
        for y in 0..ny {
            let w = p * m.obs_prob(x, y);
            if w > 0.0 {
                *law.entry((policy.roots[y], x)).or_default() += w;
            }
        }
    }
    let mut value = 0.0;
    let mut weight = 1.0;
    let mut default_used = false;
    for t in 0..=horizon {
        let mut next: BTreeMap<(Option<usize>, usize), f64> = BTreeMap::new();
        let mut stage = 0.0;
        for (&(node, x), &p) in &law {
            default_used |= node.is_none();
            let u = policy.action_at(node);
            stage += p * mdp.cost[x][u];
            if t == horizon {
                continue;
            }
            for (x2, &px) in mdp.row(x, u).iter().enumerate().take(ns) {
                if px <= 0.0 {
                    continue;
                }
                for y in 0..ny {
                    let w = p * px * m.obs_prob(x2, y);
                    if w > 0.0 {
                        *next.entry((policy.step(node, y), x2)).or_default() += w;
                    }
                }
            }
        }
        value += weight * stage;
        weight *= mdp.discount;
        law = next;
    }
    Ok(HistoryEvaluation {
        value,
        horizon,
        error_bound: tail_bound(mdp.cost_sup(), mdp.discount, horizon),
        default_action_used: default_used,
        default_action: policy.default_action,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Channel, TabularMdp};
    use crate::rng::Stream;
    use crate::solvers::value_iterate;
    use approx::assert_abs_diff_eq;

    fn uninformative(seed: u64, ns: usize, na: usize) -> TabularPomdp {
        let mut rng = Stream::new(seed);
        let mut mdp = TabularMdp::random(&mut rng, ns, na, 0.7);
        mdp.initial = rng.simplex(ns);
        TabularPomdp::new(mdp, Channel::Uninformative).unwrap()
    }

    /// Exhaustive search over open-loop sequences of length `h + 1`.
    fn open_loop_optimum(m: &TabularPomdp, h: usize) -> f64 {
        let mdp = &m.mdp;
        let na = mdp.n_actions();
        let mut best = f64::INFINITY;
        for code in 0..na.pow(h as u32 + 1) {
            let mut b = mdp.initial.clone();
            let mut c = code;
            let mut total = 0.0;
            let mut w = 1.0;
            for _ in 0..=h {
                let u = c % na;
                c /= na;
                total += w * (0..mdp.n_states()).map(|x| b[x] * mdp.cost[x][u]).sum::<f64>();
                w *= mdp.discount;
                let mut nb = vec![0.0; mdp.n_states()];
                for x in 0..mdp.n_states() {
                    for y in 0..mdp.n_states() {
                        nb[y] += b[x] * mdp.kernel[x][u][y];
                    }
                }
                b = nb;
            }
            best = best.min(total);
        }
        best
    }

    #[test]
    fn uninformative_channel_matches_open_loop_search() {
        for (seed, h) in [(1, 0), (2, 3), (3, 6), (4, 5)] {
            let m = uninformative(seed, 3, 2);
            let sol = solve_pomdp_horizon(&m, h, DEFAULT_NODE_BUDGET).unwrap();
            assert_abs_diff_eq!(sol.value, open_loop_optimum(&m, h), epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_channel_matches_value_iteration() {
        let tol = 1e-6;
        for seed in 0..5 {
            let mut rng = Stream::new(seed);
            let mut mdp = TabularMdp::random(&mut rng, 4, 3, 0.6);
            mdp.initial = rng.simplex(4);
            let vi = value_iterate(&mdp, tol).unwrap();
            let sol = solve_pomdp_belief_tree(&TabularPomdp::fully_observed(mdp.clone()), tol).unwrap();
            assert!((sol.value - vi.value_at_initial(&mdp)).abs() <= 2.0 * tol);
        }
    }

    #[test]
    fn zero_cost_is_zero() {
        let mut m = uninformative(9, 3, 2);
        m.mdp.cost = vec![vec![0.0; 2]; 3];
        let sol = solve_pomdp_belief_tree(&m, 1e-9).unwrap();
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn depth_zero_tree_on_single_state() {
        let mdp = TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![1.0]], 0.5, vec![1.0]).unwrap();
        let m = TabularPomdp::fully_observed(mdp);
        let pi = HistoryPolicy::from_fn(1, 0, |_| 0);
        let e = evaluate_history_policy(&m, &pi, 1e-10).unwrap();
        assert!((e.value - 2.0).abs() <= 1e-10);
        assert!(e.default_action_used);
    }

    #[test]
    fn optimal_tree_reevaluates_to_its_value() {
        let tol = 1e-4;
        let m = TabularPomdp::random(&mut Stream::new(21), 3, 2, 2, 0.3);
        let sol = solve_pomdp_belief_tree(&m, tol).unwrap();
        let e = evaluate_history_policy(&m, &sol.policy, tol).unwrap();
        assert!((e.value - sol.value).abs() <= 2.0 * tol);
    }

    #[test]
    fn consecutive_depths_within_tail() {
        let m = TabularPomdp::random(&mut Stream::new(5), 3, 2, 2, 0.6);
        let c = m.mdp.cost_sup();
        for h in 0..6 {
            let a = solve_pomdp_horizon(&m, h, DEFAULT_NODE_BUDGET).unwrap().value;
            let b = solve_pomdp_horizon(&m, h + 1, DEFAULT_NODE_BUDGET).unwrap().value;
            assert!(b >= a - 1e-12 && b - a <= tail_bound(c, 0.6, h) + 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let m = TabularPomdp::random(&mut Stream::new(5), 3, 2, 2, 0.9);
        match solve_pomdp_horizon(&m, 12, 100) {
            Err(Error::BudgetExceeded { horizon, budget, required }) => {
                assert_eq!((horizon, budget), (12, 100));
                assert!(required > 100);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn open_loop_policy_shape() {
        let pi = HistoryPolicy::open_loop(&[1, 0, 1], 2);
        assert_eq!(pi.action(&[0]), 1);
        assert_eq!(pi.action(&[1, 0]), 0);
        assert_eq!(pi.action(&[1, 1, 0]), 1);
        assert_eq!(pi.action(&[1, 1, 0, 0]), 0);
        assert_eq!(pi.depth, 2);
    }

    #[test]
    fn random_tree_matches_simulation() {
        let m = TabularPomdp::random(&mut Stream::new(33), 3, 2, 2, 0.5);
        let mut rng = Stream::new(34);
        let pi = HistoryPolicy::from_fn(2, 5, |_| rng.index(2));
        let e = evaluate_history_policy_horizon(&m, &pi, 40).unwrap();
        let Channel::Matrix(q) = &m.channel else { unreachable!() };
        let episodes = 100_000;
        let mut total = 0.0;
        let mut sim = Stream::new(35);
        for _ in 0..episodes {
            let mut x = sim.categorical(&m.mdp.initial);
            let mut hist = vec![sim.categorical(&q[x])];
            let mut w = 1.0;
            for _ in 0..=40 {
                let u = pi.action(&hist);
                total += w * m.mdp.cost[x][u];
                w *= 0.5;
                x = sim.categorical(m.mdp.row(x, u));
                hist.push(sim.categorical(&q[x]));
            }
        }
        let mean = total / episodes as f64;
        // Costs lie in [0, 1), so the per-episode total is in [0, 2).
        let band = 4.0 * 2.0 / (episodes as f64).sqrt();
        assert!((mean - e.value).abs() <= band, "{mean} vs {}", e.value);
    }
}
