//! Controlled transition kernels: finite tabular models, region-structured
//! continuous-state models, additive-noise models, and kernel-level
//! distances.
//!
//! Kernel distances are taken cell by cell over the declared partition
//! (tabular states, or the common refinement of two region partitions).
//! Every kernel here is constant on its cells, so the cell-wise maximum is the
//! true supremum over states.

mod additive;
mod file;
mod region;
mod tabular;

use std::fmt;

pub use additive::{AdditiveNoiseModel, Discretized, KernelTable};
pub use file::{load_model, save_model, ModelDoc, ModelFile, MODEL_SCHEMA_VERSION};
pub use region::{
    ActionSet, AssumptionProfile, ChannelTag, Region, RegionCost, RegionModel,
};
pub use tabular::{Channel, TabularMdp, TabularPomdp};

use crate::Result;

/// Probability rows must sum to one within this tolerance.
pub const ROW_TOL: f64 = 1e-12;

/// A violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    RowNotStochastic { state: usize, action: usize, sum: f64 },
    NegativeProbability { state: usize, action: usize, next: usize },
    ChannelRowNotStochastic { state: usize, sum: f64 },
    InitialNotStochastic { sum: f64 },
    NegativeCost { state: usize, action: usize },
    NonFiniteCost { state: usize, action: usize },
    DiscountOutOfRange(f64),
    StateLabelTooLong { state: usize, len: usize },
    Partition(String),
    KernelNotProbability { region: usize, action: usize, mass: f64 },
    KernelOutsideStateSpace { region: usize, action: usize },
    InitialOutsideStateSpace,
    CostUndefined { action: usize, at: f64 },
    DriftOutOfRange { action: usize, lo: f64, hi: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            Shape(s) => write!(f, "shape mismatch: {s}"),
            RowNotStochastic { state, action, sum } => {
                write!(f, "kernel row (x={state}, u={action}) sums to {sum}")
            }
            NegativeProbability { state, action, next } => {
                write!(f, "negative probability T({next} | {state}, {action})")
            }
            ChannelRowNotStochastic { state, sum } => {
                write!(f, "channel row x={state} sums to {sum}")
            }
            InitialNotStochastic { sum } => write!(f, "initial distribution sums to {sum}"),
            NegativeCost { state, action } => write!(f, "negative cost at (x={state}, u={action})"),
            NonFiniteCost { state, action } => {
                write!(f, "non-finite cost at (x={state}, u={action})")
            }
            DiscountOutOfRange(b) => write!(f, "discount {b} outside (0, 1)"),
            StateLabelTooLong { state, len } => {
                write!(f, "state label {state} has {len} coordinates (max 2)")
            }
            Partition(s) => write!(f, "regions do not partition the state space: {s}"),
            KernelNotProbability {
                region,
                action,
                mass,
            } => write!(f, "kernel (region {region}, action {action}) has mass {mass}"),
            KernelOutsideStateSpace { region, action } => write!(
                f,
                "kernel (region {region}, action {action}) charges points outside the state space"
            ),
            InitialOutsideStateSpace => write!(f, "initial distribution leaves the state space"),
            CostUndefined { action, at } => write!(f, "cost for action {action} undefined at {at}"),
            DriftOutOfRange { action, lo, hi } => write!(
                f,
                "drift for action {action} plus noise reaches [{lo}, {hi}], outside the state space"
            ),
        }
    }
}

/// Something whose invariants can be checked without failing.
pub trait Validate {
    /// Empty means valid.
    fn validate(&self) -> Vec<Violation>;

    fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::InvalidModel(
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    TotalVariation,
    Wasserstein1,
}

/// A model with a controlled kernel that can be compared cell by cell with a
/// structurally compatible model.
pub trait KernelModel {
    /// `max` over cells and actions of `metric(self(·|cell,u), other(·|cell,u))`.
    fn kernel_sup(&self, other: &Self, metric: Metric) -> Result<f64>;
}

/// Discount factor and cost bound of a model, the two scalars every
/// continuity and robustness bound needs.
pub trait Discounted {
    fn discount(&self) -> f64;
    /// `‖c‖∞`
    fn cost_bound(&self) -> f64;
}

impl Discounted for TabularMdp {
    fn discount(&self) -> f64 {
        self.discount
    }

    fn cost_bound(&self) -> f64 {
        self.cost_sup()
    }
}

impl Discounted for TabularPomdp {
    fn discount(&self) -> f64 {
        self.mdp.discount
    }

    fn cost_bound(&self) -> f64 {
        self.mdp.cost_sup()
    }
}

impl Discounted for RegionModel {
    fn discount(&self) -> f64 {
        self.discount
    }

    fn cost_bound(&self) -> f64 {
        self.cost_sup()
    }
}

/// `sup_{x,u} ‖T₁(·|x,u) − T₂(·|x,u)‖_TV` (factor-2 convention).
pub fn kernel_tv_sup<M: KernelModel>(a: &M, b: &M) -> Result<f64> {
    a.kernel_sup(b, Metric::TotalVariation)
}

/// `sup_{x,u} W₁(T₁(·|x,u), T₂(·|x,u))`.
pub fn kernel_w1_sup<M: KernelModel>(a: &M, b: &M) -> Result<f64> {
    a.kernel_sup(b, Metric::Wasserstein1)
}

/// `as_pomdp`: the fully observed model as a POMDP with identity channel.
pub fn as_pomdp(m: &TabularMdp) -> TabularPomdp {
    TabularPomdp::fully_observed(m.clone())
}
