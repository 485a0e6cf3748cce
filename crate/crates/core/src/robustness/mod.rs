//! Bound checkers and mismatch experiments.
//!
//! * [`continuity_bound`]: `|J*(T₁) − J*(T₂)| ≤ ‖c‖∞ β/(1−β)² sup‖T₁ − T₂‖_TV`.
//! * [`robustness_bound`]: twice that, bounding the loss of running the
//!   design-optimal policy on the true model.
//! * [`mismatch_loss`] computes a [`MismatchRecord`] for tabular, POMDP and
//!   gallery pairs.
//! * [`strategic_tv`] and [`policy_sup_gap`] enumerate finite POMDPs
//!   exactly.
//! * [`bounds_corpus`] sweeps random tabular pairs built by convex mixing.

mod corpus;
mod strategic;

use serde::{Deserialize, Serialize};

pub use corpus::{bounds_corpus, random_pair, random_pomdp_pair, CorpusSpec};
pub use strategic::{policy_sup_gap, strategic_tv, SupGap, StrategicTv, STRATEGIC_BUDGET, SUP_GAP_BUDGET};

use crate::gallery::GalleryEntry;
use crate::models::{kernel_tv_sup, kernel_w1_sup, Discounted, KernelModel, RegionModel, TabularMdp, TabularPomdp};
use crate::solvers::{
    evaluate_history_policy, evaluate_policy_exact, solve_pomdp_belief_tree, value_iterate, PolicySource,
};
use crate::{Error, Result};

/// Slack multiplier on the solver tolerance used in every inequality check.
pub const SLACK: f64 = 4.0;

/// `‖c‖∞ · β/(1−β)² · supTV`.
pub fn continuity_bound_from(cost_sup: f64, discount: f64, sup_tv: f64) -> f64 {
    cost_sup * discount / (1.0 - discount).powi(2) * sup_tv
}

/// `2‖c‖∞ · β/(1−β)² · supTV`.
pub fn robustness_bound_from(cost_sup: f64, discount: f64, sup_tv: f64) -> f64 {
    2.0 * continuity_bound_from(cost_sup, discount, sup_tv)
}

fn bound_inputs<M: KernelModel + Discounted>(a: &M, b: &M) -> Result<(f64, f64, f64)> {
    if a.discount() != b.discount() {
        return Err(Error::Incompatible(format!(
            "discount factors differ: {} vs {}",
            a.discount(),
            b.discount()
        )));
    }
    let tv = kernel_tv_sup(a, b)?;
    Ok((a.cost_bound().max(b.cost_bound()), a.discount(), tv))
}

/// Continuity bound for a pair of compatible models.
pub fn continuity_bound<M: KernelModel + Discounted>(a: &M, b: &M) -> Result<f64> {
    let (c, beta, tv) = bound_inputs(a, b)?;
    Ok(continuity_bound_from(c, beta, tv))
}

/// Robustness bound for a pair of compatible models.
pub fn robustness_bound<M: KernelModel + Discounted>(a: &M, b: &M) -> Result<f64> {
    let (c, beta, tv) = bound_inputs(a, b)?;
    Ok(robustness_bound_from(c, beta, tv))
}

/// Outcome of designing a controller on one model and running it on
/// another. Fields appear in this order as CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchRecord {
    pub true_id: String,
    pub design_id: String,
    pub discount: f64,
    pub cost_sup: f64,
    pub kernel_tv_sup: f64,
    pub kernel_w1_sup: Option<f64>,
    /// `J*(T)`
    pub j_opt_true: f64,
    /// `J*(T_design)`
    pub j_opt_design: f64,
    /// `J(T, γ_design*)`
    pub j_cross: f64,
    /// `j_cross − j_opt_true`
    pub loss: f64,
    pub continuity_bound: f64,
    pub robustness_bound: f64,
    pub tol: f64,
    /// Largest certified error of the three values.
    pub error_bound: f64,
    pub policy_source: PolicySource,
    /// `|j_opt_true − j_opt_design| ≤ continuity_bound + 4·tol`
    #[serde(with = "bit")]
    pub continuity_holds: bool,
    /// `loss ≤ robustness_bound + 4·tol`
    #[serde(with = "bit")]
    pub bound_holds: bool,
}

/// CSV header of [`MismatchRecord`], in column order.
pub const MISMATCH_COLUMNS: [&str; 17] = [
    "true_id",
    "design_id",
    "discount",
    "cost_sup",
    "kernel_tv_sup",
    "kernel_w1_sup",
    "j_opt_true",
    "j_opt_design",
    "j_cross",
    "loss",
    "continuity_bound",
    "robustness_bound",
    "tol",
    "error_bound",
    "policy_source",
    "continuity_holds",
    "bound_holds",
];

/// Inputs shared by every record constructor.
struct Measured {
    cost_sup: f64,
    discount: f64,
    tv: f64,
    w1: Option<f64>,
    j_true: f64,
    j_design: f64,
    j_cross: f64,
    error_bound: f64,
}

impl MismatchRecord {
    fn build(m: Measured, tol: f64, source: PolicySource) -> Self {
        let continuity_bound = continuity_bound_from(m.cost_sup, m.discount, m.tv);
        let robustness_bound = robustness_bound_from(m.cost_sup, m.discount, m.tv);
        let loss = m.j_cross - m.j_true;
        MismatchRecord {
            true_id: "true".into(),
            design_id: "design".into(),
            discount: m.discount,
            cost_sup: m.cost_sup,
            kernel_tv_sup: m.tv,
            kernel_w1_sup: m.w1,
            j_opt_true: m.j_true,
            j_opt_design: m.j_design,
            j_cross: m.j_cross,
            loss,
            continuity_bound,
            robustness_bound,
            tol,
            error_bound: m.error_bound,
            policy_source: source,
            continuity_holds: (m.j_true - m.j_design).abs() <= continuity_bound + SLACK * tol,
            bound_holds: loss <= robustness_bound + SLACK * tol,
        }
    }

    pub fn with_ids(mut self, true_id: impl Into<String>, design_id: impl Into<String>) -> Self {
        self.true_id = true_id.into();
        self.design_id = design_id.into();
        self
    }
}

/// A pair of models to compare: the first is the true model, the second
/// the design model.
#[derive(Debug, Clone, Copy)]
pub enum ModelPair<'a> {
    Tabular(&'a TabularMdp, &'a TabularMdp),
    Pomdp(&'a TabularPomdp, &'a TabularPomdp),
    Gallery(&'a GalleryEntry),
    /// Region models without analytic policies have no applicable solver.
    Region(&'a RegionModel, &'a RegionModel),
}

/// Mismatch record for any supported pair.
pub fn mismatch_loss(pair: ModelPair<'_>, tol: f64) -> Result<MismatchRecord> {
    match pair {
        ModelPair::Tabular(t, d) => mismatch_loss_tabular(t, d, tol),
        ModelPair::Pomdp(t, d) => mismatch_loss_pomdp(t, d, tol),
        ModelPair::Gallery(e) => mismatch_loss_gallery(e, tol),
        ModelPair::Region(..) => Err(Error::NoSolver(
            "region models are only solvable through a gallery entry's analytic policies".into(),
        )),
    }
}

/// Value iteration on both models. Each greedy policy is evaluated exactly
/// on its own model, and the design's policy also on the true model, all at
/// the models' initial distributions.
pub fn mismatch_loss_tabular(truth: &TabularMdp, design: &TabularMdp, tol: f64) -> Result<MismatchRecord> {
    let (cost_sup, discount, tv) = bound_inputs(truth, design)?;
    let vi_true = value_iterate(truth, tol)?;
    let vi_design = value_iterate(design, tol)?;
    let cross = evaluate_policy_exact(truth, &vi_design.policy)?;
    let j_true = evaluate_policy_exact(truth, &vi_true.policy)?.expect(&truth.initial);
    let j_design = evaluate_policy_exact(design, &vi_design.policy)?.expect(&design.initial);
    Ok(MismatchRecord::build(
        Measured {
            cost_sup,
            discount,
            tv,
            w1: kernel_w1_sup(truth, design).ok(),
            j_true,
            j_design,
            j_cross: cross.expect(&truth.initial),
            error_bound: vi_true.error_bound.max(vi_design.error_bound),
        },
        tol,
        PolicySource::ValueIteration,
    ))
}

/// Belief-tree solutions of both POMDPs; the design's history policy is
/// evaluated exactly on the true model.
pub fn mismatch_loss_pomdp(truth: &TabularPomdp, design: &TabularPomdp, tol: f64) -> Result<MismatchRecord> {
    let (cost_sup, discount, tv) = bound_inputs(truth, design)?;
    let s_true = solve_pomdp_belief_tree(truth, tol)?;
    let s_design = solve_pomdp_belief_tree(design, tol)?;
    let cross = evaluate_history_policy(truth, &s_design.policy, tol)?;
    Ok(MismatchRecord::build(
        Measured {
            cost_sup,
            discount,
            tv,
            w1: kernel_w1_sup(truth, design).ok(),
            j_true: s_true.value,
            j_design: s_design.value,
            j_cross: cross.value,
            error_bound: s_true.error_bound.max(s_design.error_bound).max(cross.error_bound),
        },
        tol,
        PolicySource::BeliefTree,
    ))
}

/// Gallery entries use their analytic policies; nothing is optimized.
pub fn mismatch_loss_gallery(entry: &GalleryEntry, tol: f64) -> Result<MismatchRecord> {
    let (cost_sup, discount, tv) = bound_inputs(&entry.truth, &entry.design)?;
    let v = entry.evaluate(tol)?;
    Ok(MismatchRecord::build(
        Measured {
            cost_sup,
            discount,
            tv,
            w1: kernel_w1_sup(&entry.truth, &entry.design).ok(),
            j_true: v.true_optimal,
            j_design: v.design_optimal,
            j_cross: v.cross,
            error_bound: v.error_bound,
        },
        tol,
        PolicySource::Analytic,
    )
    .with_ids(entry.truth.name.clone(), entry.design.name.clone()))
}

/// Booleans as 0/1 in every serialized format.
pub(crate) mod bit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!("expected 0 or 1, got {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{make_robust_weak, make_setwise_cont, make_setwise_robust};
    use crate::rng::Stream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn formula_arithmetic() {
        assert_abs_diff_eq!(continuity_bound_from(1.0, 0.5, 0.1), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(robustness_bound_from(1.0, 0.5, 0.1), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn identical_models_have_zero_bounds_and_loss() {
        let m = TabularMdp::random(&mut Stream::new(2), 4, 3, 0.8);
        assert_eq!(continuity_bound(&m, &m).unwrap(), 0.0);
        assert_eq!(robustness_bound(&m, &m).unwrap(), 0.0);
        let tol = 1e-9;
        let r = mismatch_loss(ModelPair::Tabular(&m, &m), tol).unwrap();
        assert!(r.loss.abs() <= 2.0 * tol);
        assert!(r.bound_holds && r.continuity_holds);
    }

    #[test]
    fn incompatible_discounts_are_rejected() {
        let m = TabularMdp::random(&mut Stream::new(2), 3, 2, 0.8);
        let mut other = m.clone();
        other.discount = 0.7;
        assert!(matches!(continuity_bound(&m, &other), Err(Error::Incompatible(_))));
    }

    #[test]
    fn setwise_cont_bound_is_two_and_holds() {
        let e = make_setwise_cont(4).unwrap();
        let b = continuity_bound(&e.truth, &e.design).unwrap();
        assert_abs_diff_eq!(b, 2.0, epsilon = 1e-12);
        let r = mismatch_loss(ModelPair::Gallery(&e), 1e-10).unwrap();
        assert!((r.j_opt_true - r.j_opt_design).abs() <= b);
        assert!(r.continuity_holds);
    }

    #[test]
    fn gallery_losses() {
        for n in [2, 10, 100] {
            let r = mismatch_loss_gallery(&make_robust_weak(n).unwrap(), 1e-11).unwrap();
            assert_abs_diff_eq!(r.loss, 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(r.j_cross, 3.0, epsilon = 1e-9);
            assert_abs_diff_eq!(r.j_opt_true, 1.0, epsilon = 1e-9);
            assert_eq!(r.policy_source, PolicySource::Analytic);
        }
        let r = mismatch_loss_gallery(&make_setwise_robust(1000).unwrap(), 1e-11).unwrap();
        assert_abs_diff_eq!(r.loss, 0.75 - 1.0 / 8000.0, epsilon = 1e-9);
    }

    #[test]
    fn region_pair_without_policies_has_no_solver() {
        let e = make_robust_weak(3).unwrap();
        assert!(matches!(
            mismatch_loss(ModelPair::Region(&e.truth, &e.design), 1e-6),
            Err(Error::NoSolver(_))
        ));
    }

    #[test]
    fn pomdp_pair_respects_bounds() {
        let mut rng = Stream::new(8);
        let truth = TabularPomdp::random(&mut rng, 3, 2, 2, 0.5);
        let noise = TabularMdp::random(&mut rng, 3, 2, 0.5).kernel;
        let design = truth.with_kernel(truth.mdp.mixed_toward(&noise, 0.1).kernel);
        let r = mismatch_loss_pomdp(&truth, &design, 1e-2).unwrap();
        assert!(r.bound_holds && r.continuity_holds);
        assert!(r.loss >= -2.0 * 1e-2);
    }

    #[test]
    fn csv_columns_match_record_fields() {
        let m = TabularMdp::random(&mut Stream::new(2), 2, 2, 0.5);
        let r = mismatch_loss_tabular(&m, &m, 1e-9).unwrap();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&r).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, MISMATCH_COLUMNS.join(","));
        assert!(text.lines().nth(1).unwrap().ends_with(",1,1"));
    }
}
