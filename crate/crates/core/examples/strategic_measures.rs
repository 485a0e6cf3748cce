//! Exact total variation between the trajectory laws two POMDPs induce under
//! one history policy, against `k · supTV`, and the largest truncated-cost
//! gap over every deterministic policy.

use mismatch_lab::rng::Stream;
use mismatch_lab::robustness::{policy_sup_gap, random_pomdp_pair, strategic_tv, STRATEGIC_BUDGET, SUP_GAP_BUDGET};
use mismatch_lab::solvers::HistoryPolicy;
use mismatch_lab::Result;

fn main() -> Result<()> {
    let mut rng = Stream::new(12);
    let (a, b) = random_pomdp_pair(&mut rng, 3, 2, 2, 0.2, 0.5);
    let policy = HistoryPolicy::from_fn(2, 5, |_| rng.index(2));
    for k in 1..=5 {
        let s = strategic_tv(&a, &b, &policy, k, STRATEGIC_BUDGET)?;
        println!("k={k}: tv={:.6} bound={:.6} over {} paths", s.exact, s.bound, s.paths);
    }
    for eps in [0.4, 0.2, 0.1, 0.0] {
        let other = a.with_kernel(a.mdp.mixed_toward(&b.mdp.kernel, eps).kernel);
        let g = policy_sup_gap(&a, &other, 2, SUP_GAP_BUDGET)?;
        println!("ε={eps}: sup gap {:.6} over {} policies (tail {:.4})", g.gap, g.policies, g.tail);
    }
    Ok(())
}
