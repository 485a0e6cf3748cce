//! Value iteration on a random tabular MDP, checked against an exact linear
//! solve of the greedy policy.

use mismatch_lab::rng::Stream;
use mismatch_lab::solvers::{evaluate_policy_exact, horizon_for, value_iterate};
use mismatch_lab::{Result, TabularMdp};

fn main() -> Result<()> {
    let m = TabularMdp::random(&mut Stream::new(7), 6, 3, 0.9);
    for tol in [1e-3, 1e-6, 1e-10] {
        let vi = value_iterate(&m, tol)?;
        let exact = evaluate_policy_exact(&m, &vi.policy)?;
        println!(
            "tol {tol:e}: {} sweeps, certified error {:.2e}, |V_vi - V_exact| = {:.2e}, policy {:?}",
            vi.iterations,
            vi.error_bound,
            vi.value.sup_distance(&exact),
            vi.policy.actions
        );
    }
    println!("horizon for a 1e-6 tail: {}", horizon_for(m.cost_sup(), m.discount, 1e-6)?);
    Ok(())
}
