use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mismatch_loss_tabular, MismatchRecord};
use crate::models::{TabularMdp, TabularPomdp};
use crate::rng::Stream;
use crate::Result;

/// Random tabular pairs for the bound checks. Each base pair draws its own
/// sizes, costs, kernel and mixing target from the substream of its index;
/// every `(ε, β)` combination is then evaluated on that pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub pairs: usize,
    pub eps: Vec<f64>,
    pub betas: Vec<f64>,
    pub max_states: usize,
    pub max_actions: usize,
    pub tol: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            pairs: 200,
            eps: vec![0.01, 0.05, 0.2],
            betas: vec![0.3, 0.5, 0.9],
            max_states: 6,
            max_actions: 4,
            tol: 1e-9,
        }
    }
}

/// `(T₁, T₂)` with `T₂ = (1 − ε) T₁ + ε T'` for a random stochastic `T'`,
/// so `supTV(T₁, T₂) ≤ 2ε`. Both share costs, discount and initial state.
pub fn random_pair(rng: &mut Stream, n_states: usize, n_actions: usize, eps: f64, discount: f64) -> (TabularMdp, TabularMdp) {
    let base = TabularMdp::random(rng, n_states, n_actions, discount);
    let target = TabularMdp::random(rng, n_states, n_actions, discount).kernel;
    let mixed = base.mixed_toward(&target, eps);
    (base, mixed)
}

/// `(P₁, P₂)` sharing prior, channel and costs, with
/// `T₂ = (1 − ε) T₁ + ε T'`.
pub fn random_pomdp_pair(
    rng: &mut Stream,
    n_states: usize,
    n_actions: usize,
    n_obs: usize,
    eps: f64,
    discount: f64,
) -> (TabularPomdp, TabularPomdp) {
    let base = TabularPomdp::random(rng, n_states, n_actions, n_obs, discount);
    let target = TabularMdp::random(rng, n_states, n_actions, discount).kernel;
    let mixed = base.with_kernel(base.mdp.mixed_toward(&target, eps).kernel);
    (base, mixed)
}

/// One record per `(pair, ε, β)`, in that nesting order. Runs in parallel;
/// the output order does not depend on scheduling.
pub fn bounds_corpus(spec: &CorpusSpec, master_seed: u64) -> Result<Vec<MismatchRecord>> {
    let tasks: Vec<(usize, f64, f64)> = (0..spec.pairs)
        .flat_map(|p| {
            spec.eps
                .iter()
                .flat_map(move |&e| spec.betas.iter().map(move |&b| (p, e, b)))
        })
        .collect();
    tasks
        .into_par_iter()
        .map(|(p, eps, beta)| {
            let mut rng = Stream::substream(master_seed, p as u64);
            let ns = 2 + rng.index(spec.max_states.max(2) - 1);
            let na = 2 + rng.index(spec.max_actions.max(2) - 1);
            let base = TabularMdp::random(&mut rng, ns, na, beta);
            let target = TabularMdp::random(&mut rng, ns, na, beta).kernel;
            let design = base.mixed_toward(&target, eps);
            Ok(mismatch_loss_tabular(&base, &design, spec.tol)?
                .with_ids(format!("pair{p}"), format!("pair{p}_eps{eps}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::kernel_tv_sup;

    #[test]
    fn mixing_controls_sup_tv() {
        let mut rng = Stream::new(3);
        for eps in [0.01, 0.2, 0.7] {
            let (a, b) = random_pair(&mut rng, 5, 3, eps, 0.5);
            assert!(kernel_tv_sup(&a, &b).unwrap() <= 2.0 * eps + 1e-12);
        }
    }

    #[test]
    fn small_corpus_has_no_violations_and_is_deterministic() {
        let spec = CorpusSpec {
            pairs: 10,
            ..CorpusSpec::default()
        };
        let a = bounds_corpus(&spec, 42).unwrap();
        assert_eq!(a.len(), 90);
        assert!(a.iter().all(|r| r.bound_holds && r.continuity_holds));
        assert_eq!(a, bounds_corpus(&spec, 42).unwrap());
        assert_ne!(a, bounds_corpus(&spec, 43).unwrap());
    }
}
