//! Model-mismatch laboratory for discounted-cost stochastic control.
//!
//! The crate measures what happens when an optimal controller is designed
//! against one controlled transition kernel and then run on another. It is
//! organised bottom-up:
//!
//! - [`measures`]: exact algebra and distances (total variation, Wasserstein-1,
//!   setwise gaps) for 1-D measures made of atoms and piecewise-constant
//!   densities.
//! - [`models`]: tabular MDPs/POMDPs, region-structured continuous-state
//!   models, additive-noise models and kernel-level distances.
//! - [`solvers`]: value iteration, exact policy evaluation, forward
//!   propagation for region models and a belief-tree POMDP solver.
//! - [`robustness`]: continuity and robustness bounds, mismatch records,
//!   strategic-measure TV and sup-over-policies gaps.
//! - [`gallery`]: the weak/setwise counterexamples with analytic policies and
//!   closed-form costs.
//! - [`learning`]: simulation, empirical kernels, noise recovery, histogram
//!   densities and learning curves.
//! - [`experiment`]: the config-driven runner behind the `mismatch-lab` binary.

pub mod error;
pub mod experiment;
pub mod gallery;
pub mod learning;
pub mod measures;
pub mod models;
pub mod rng;
pub mod robustness;
pub mod solvers;

pub use error::{Error, Result};
pub use measures::{Atom, Interval, Measure1D, Piece, PiecewisePoly, Poly, RegionSet};
pub use models::{
    AdditiveNoiseModel, Channel, KernelModel, RegionModel, TabularMdp, TabularPomdp, Validate,
    Violation,
};

