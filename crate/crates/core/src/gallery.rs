//! The five kernel-mismatch counterexamples as exactly computable region
//! models, plus the additive-noise family used by the learning experiments.
//!
//! Each [`GalleryEntry`] bundles the approximating model `T_n` (the design
//! model), the limit model `T` (the true model), the analytic policies
//! `γ_n*` and `γ*`, and two sets of closed forms: the values as published
//! ([`GalleryEntry::closed_form_paper`]) and the values of the model as
//! constructed, started from its initial distribution
//! ([`GalleryEntry::closed_form_exact`]). The two differ wherever the
//! published arithmetic counts the first stage differently or contains a
//! slip; nothing is silently corrected.
//!
//! Boundary points are assigned to regions once per entry and listed in
//! [`GalleryEntry::boundary`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::measures::{Interval, Measure1D, PiecewisePoly, Poly, PolyPiece, RegionSet};
use crate::models::{
    ActionSet, AdditiveNoiseModel, AssumptionProfile, ChannelTag, Region, RegionCost, RegionModel, Validate,
    Violation,
};
use crate::solvers::{evaluate_region_policy, RegionPolicy};
use crate::{Error, Result};

/// Discount used by the constructors; change it with
/// [`GalleryEntry::with_discount`].
pub const DEFAULT_DISCOUNT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GalleryKind {
    WeakPomdp,
    WeakFully,
    RobustWeak,
    SetwiseCont,
    SetwiseRobust,
}

impl GalleryKind {
    pub const ALL: [GalleryKind; 5] = [
        GalleryKind::WeakPomdp,
        GalleryKind::WeakFully,
        GalleryKind::RobustWeak,
        GalleryKind::SetwiseCont,
        GalleryKind::SetwiseRobust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GalleryKind::WeakPomdp => "weak_pomdp",
            GalleryKind::WeakFully => "weak_fully",
            GalleryKind::RobustWeak => "robust_weak",
            GalleryKind::SetwiseCont => "setwise_cont",
            GalleryKind::SetwiseRobust => "setwise_robust",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            GalleryKind::WeakPomdp => "POMDP with uninformative channel: weak kernel convergence without value convergence",
            GalleryKind::WeakFully => "fully observed variant: weak kernel convergence without value convergence",
            GalleryKind::RobustWeak => "weak kernel convergence where the design-optimal policy stays suboptimal",
            GalleryKind::SetwiseCont => "square-wave densities: setwise kernel convergence without value convergence",
            GalleryKind::SetwiseRobust => "square-wave densities: setwise kernel convergence without robustness",
        }
    }

    pub fn convergence_mode(self) -> ConvergenceMode {
        match self {
            GalleryKind::WeakPomdp | GalleryKind::WeakFully | GalleryKind::RobustWeak => ConvergenceMode::Weak,
            GalleryKind::SetwiseCont | GalleryKind::SetwiseRobust => ConvergenceMode::Setwise,
        }
    }

    /// Whether the entry shows a failure of continuity (optimal values) or of
    /// robustness (design-optimal policy applied to the true model).
    pub fn witnesses(self) -> Witness {
        match self {
            GalleryKind::WeakPomdp | GalleryKind::WeakFully | GalleryKind::SetwiseCont => Witness::Continuity,
            GalleryKind::RobustWeak | GalleryKind::SetwiseRobust => Witness::Robustness,
        }
    }

    /// Build the entry for parameter `n` at the default discount.
    pub fn make(self, n: usize) -> Result<GalleryEntry> {
        match self {
            GalleryKind::WeakPomdp => make_weak_pomdp(n),
            GalleryKind::WeakFully => make_weak_fully(n),
            GalleryKind::RobustWeak => make_robust_weak(n),
            GalleryKind::SetwiseCont => make_setwise_cont(n),
            GalleryKind::SetwiseRobust => make_setwise_robust(n),
        }
    }

    /// Published closed forms at `(β, n)`.
    pub fn closed_form_paper(self, beta: f64, n: usize) -> ClosedForm {
        self.published_at(beta, 1.0 / n as f64)
    }

    /// Exact closed forms of the constructed models at `(β, n)`.
    pub fn closed_form_exact(self, beta: f64, n: usize) -> ClosedForm {
        self.exact_at(beta, 1.0 / n as f64)
    }

    /// `n → ∞` limit of the published closed forms.
    pub fn limit_published(self, beta: f64) -> ClosedForm {
        self.published_at(beta, 0.0)
    }

    /// `n → ∞` limit of the exact closed forms.
    pub fn limit_exact(self, beta: f64) -> ClosedForm {
        self.exact_at(beta, 0.0)
    }

    fn published_at(self, b: f64, inv_n: f64) -> ClosedForm {
        let g = b / (1.0 - b);
        match self {
            GalleryKind::WeakPomdp => ClosedForm {
                design_optimal: Some(b * (1.0 - inv_n).powi(2)),
                true_optimal: Some(g),
                cross: None,
            },
            GalleryKind::WeakFully => ClosedForm {
                design_optimal: Some(inv_n * inv_n + b * b / (1.0 - b)),
                true_optimal: Some(0.0),
                cross: None,
            },
            GalleryKind::RobustWeak => ClosedForm {
                design_optimal: Some(0.0),
                true_optimal: Some(0.0),
                cross: Some(3.0 / (1.0 - b)),
            },
            GalleryKind::SetwiseCont => ClosedForm {
                design_optimal: Some(g * (1.0 / 12.0 + inv_n / 8.0)),
                true_optimal: Some(b / (12.0 - 6.0 * b)),
                cross: None,
            },
            GalleryKind::SetwiseRobust => ClosedForm {
                design_optimal: None,
                true_optimal: Some(1.0 / (2.0 * (1.0 - b))),
                cross: Some((1.25 - inv_n / 8.0) / (1.0 - b)),
            },
        }
    }

    fn exact_at(self, b: f64, inv_n: f64) -> ClosedForm {
        let g = b / (1.0 - b);
        let (design, truth, cross) = match self {
            // The analytic open-loop policy is the same for both kernels.
            GalleryKind::WeakPomdp => (b * (1.0 - inv_n).powi(2), g, g),
            GalleryKind::WeakFully => (b * inv_n * inv_n + b * b / (1.0 - b), 0.0, 0.0),
            GalleryKind::RobustWeak => (0.0, g, 3.0 * g),
            // Both kernels are action-independent, so the myopic policy is
            // optimal for each and the cross value is the true optimum.
            GalleryKind::SetwiseCont => (g / 12.0, b / (12.0 - 6.0 * b), b / (12.0 - 6.0 * b)),
            GalleryKind::SetwiseRobust => (g * (0.5 - inv_n / 4.0), g / 2.0, g * (1.25 - inv_n / 8.0)),
        };
        ClosedForm {
            design_optimal: Some(design),
            true_optimal: Some(truth),
            cross: Some(cross),
        }
    }
}

impl fmt::Display for GalleryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GalleryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GalleryKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown gallery entry `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceMode {
    Weak,
    Setwise,
    Tv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Continuity,
    Robustness,
}

/// Discounted costs of an entry. `None` marks a value the published
/// derivation does not state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    /// `J(T_n, γ_n*) = J*(T_n)`.
    pub design_optimal: Option<f64>,
    /// `J(T, γ*) = J*(T)`.
    pub true_optimal: Option<f64>,
    /// `J(T, γ_n*)`: the design-optimal policy run on the true model.
    pub cross: Option<f64>,
}

impl ClosedForm {
    /// `|J*(T_n) − J*(T)|`.
    pub fn continuity_gap(&self) -> Option<f64> {
        Some((self.design_optimal? - self.true_optimal?).abs())
    }

    /// `J(T, γ_n*) − J*(T)`.
    pub fn loss(&self) -> Option<f64> {
        Some(self.cross? - self.true_optimal?)
    }
}

/// Values computed by the solver for an entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalleryValues {
    pub design_optimal: f64,
    pub true_optimal: f64,
    pub cross: f64,
    /// Certified truncation error of each value.
    pub error_bound: f64,
}

impl GalleryValues {
    pub fn continuity_gap(&self) -> f64 {
        (self.design_optimal - self.true_optimal).abs()
    }

    pub fn loss(&self) -> f64 {
        self.cross - self.true_optimal
    }
}

/// Which region a boundary point belongs to, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAssignment {
    pub point: f64,
    pub region: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub kind: GalleryKind,
    pub n: usize,
    /// `T_n`
    pub design: RegionModel,
    /// `T`
    pub truth: RegionModel,
    /// `γ_n*`, optimal for the design model.
    pub design_policy: RegionPolicy,
    /// `γ*`, optimal for the true model.
    pub true_policy: RegionPolicy,
    pub boundary: Vec<BoundaryAssignment>,
}

impl GalleryEntry {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn convergence_mode(&self) -> ConvergenceMode {
        self.kind.convergence_mode()
    }

    pub fn assumptions(&self) -> &AssumptionProfile {
        &self.design.assumptions
    }

    pub fn discount(&self) -> f64 {
        self.design.discount
    }

    pub fn with_discount(&self, discount: f64) -> Self {
        Self {
            design: self.design.with_discount(discount),
            truth: self.truth.with_discount(discount),
            ..self.clone()
        }
    }

    pub fn closed_form_paper(&self) -> ClosedForm {
        self.kind.closed_form_paper(self.discount(), self.n)
    }

    pub fn closed_form_exact(&self) -> ClosedForm {
        self.kind.closed_form_exact(self.discount(), self.n)
    }

    /// Evaluate the three policy/model combinations by forward propagation.
    pub fn evaluate(&self, tol: f64) -> Result<GalleryValues> {
        let design = evaluate_region_policy(&self.design, &self.design_policy, tol)?;
        let truth = evaluate_region_policy(&self.truth, &self.true_policy, tol)?;
        let cross = evaluate_region_policy(&self.truth, &self.design_policy, tol)?;
        Ok(GalleryValues {
            design_optimal: design.value,
            true_optimal: truth.value,
            cross: cross.value,
            error_bound: design.error_bound.max(truth.error_bound).max(cross.error_bound),
        })
    }
}

fn need_n(n: usize, even: bool) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    if even && n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("n must be even, got {n}")));
    }
    Ok(())
}

fn boundary(point: f64, region: &str, reason: &str) -> BoundaryAssignment {
    BoundaryAssignment {
        point,
        region: region.into(),
        reason: reason.into(),
    }
}

fn profile(weak: bool, channel: bool, note: &str) -> AssumptionProfile {
    AssumptionProfile {
        kernel_weakly_continuous: weak,
        channel_tv_continuous: channel,
        cost_bounded_continuous: true,
        actions_compact: true,
        note: note.into(),
    }
}

fn single(iv: Interval) -> RegionSet {
    RegionSet::single(iv)
}

/// `{−1}`, `(−1, 1)`, `{1}`: the kernels of both weak entries only react to
/// the endpoints.
fn bounce_regions() -> Vec<Region> {
    vec![
        Region::new("minus_one", single(Interval::point(-1.0))),
        Region::new("interior", single(Interval::open(-1.0, 1.0))),
        Region::new("plus_one", single(Interval::point(1.0))),
    ]
}

/// Endpoint kernel `½δ_a + ½δ_{−a}` and interior kernel `δ_0`.
fn bounce_kernel(a: f64) -> Vec<Vec<Measure1D>> {
    let split = Measure1D::mixture([(0.5, &Measure1D::dirac(a)), (0.5, &Measure1D::dirac(-a))]);
    vec![vec![split.clone()], vec![Measure1D::dirac(0.0)], vec![split]]
}

fn bounce_model(name: String, a: f64, actions: ActionSet, channel: ChannelTag, note: &str) -> RegionModel {
    RegionModel {
        name,
        state_lo: -1.0,
        state_hi: 1.0,
        regions: bounce_regions(),
        actions,
        kernel: bounce_kernel(a),
        cost: RegionCost::SquaredError,
        discount: DEFAULT_DISCOUNT,
        initial: Measure1D::dirac(1.0),
        channel,
        assumptions: profile(false, true, note),
    }
}

fn bounce_boundary() -> Vec<BoundaryAssignment> {
    vec![
        boundary(-1.0, "minus_one", "endpoints are point regions that bounce to both signs"),
        boundary(1.0, "plus_one", "endpoints are point regions that bounce to both signs"),
    ]
}

/// POMDP on `[−1, 1]` with an uninformative channel and cost `(x − u)²`,
/// started at 1. `T` bounces between ±1 forever; `T_n` bounces to
/// `±(1 − 1/n)` and is then absorbed at 0. Observations carry no
/// information, so the analytic optimum is the open-loop sequence
/// `u_0 = 1, u_t = 0` for both kernels.
pub fn make_weak_pomdp(n: usize) -> Result<GalleryEntry> {
    need_n(n, false)?;
    let actions = ActionSet::Interval { lo: -1.0, hi: 1.0 };
    let note = "channel U([-1,1]) carries no information; action set is used only through the analytic policy";
    let a = 1.0 - 1.0 / n as f64;
    let policy = RegionPolicy::open_loop(vec![1.0], 0.0);
    Ok(GalleryEntry {
        kind: GalleryKind::WeakPomdp,
        n,
        design: bounce_model(format!("weak_pomdp_T{n}"), a, actions.clone(), ChannelTag::Uninformative, note),
        truth: bounce_model("weak_pomdp_T".into(), 1.0, actions, ChannelTag::Uninformative, note),
        design_policy: policy.clone(),
        true_policy: policy,
        boundary: bounce_boundary(),
    })
}

/// Fully observed version of [`make_weak_pomdp`] with `U = {−1, 1}`. The
/// kernels ignore the action, so the sign policy (`u = 1` on `[0, 1]`,
/// `u = −1` on `[−1, 0)`) minimizes every stage and is optimal for both.
pub fn make_weak_fully(n: usize) -> Result<GalleryEntry> {
    need_n(n, false)?;
    let actions = ActionSet::Finite(vec![-1.0, 1.0]);
    let note = "kernels are action-independent; the sign policy is stage-wise optimal";
    let a = 1.0 - 1.0 / n as f64;
    let policy = RegionPolicy::stationary(vec![
        (single(Interval::half_open(-1.0, 0.0)), -1.0),
        (single(Interval::closed(0.0, 1.0)), 1.0),
    ]);
    let mut table = bounce_boundary();
    table.push(boundary(0.0, "u = 1", "ties at 0 go to u = 1; both actions cost 1 there"));
    Ok(GalleryEntry {
        kind: GalleryKind::WeakFully,
        n,
        design: bounce_model(format!("weak_fully_T{n}"), a, actions.clone(), ChannelTag::Full, note),
        truth: bounce_model("weak_fully_T".into(), 1.0, actions, ChannelTag::Full, note),
        design_policy: policy.clone(),
        true_policy: policy,
        boundary: table,
    })
}

/// `X = [0, 2]`, `U = {0, 1, 2}`, start at 0. `T = δ_1`. `T_n` keeps the
/// state at `1 − 1/n` under action 1 from below and at `1 + 1/n` under
/// action 1 from above, swaps sides under action 0, and sends the open band
/// `(1 − 1/n, 1 + 1/n)` to 1. Cost `x·1{x ≥ 1}` for actions 0 and 1, and 3
/// for action 2.
pub fn make_robust_weak(n: usize) -> Result<GalleryEntry> {
    need_n(n, false)?;
    let h = 1.0 / n as f64;
    let (lo_edge, hi_edge) = (1.0 - h, 1.0 + h);
    let below = single(Interval::closed(0.0, lo_edge));
    let band = single(Interval::open(lo_edge, hi_edge));
    let above = single(Interval::closed(hi_edge, 2.0));
    let (d_lo, d_hi, d_one) = (Measure1D::dirac(lo_edge), Measure1D::dirac(hi_edge), Measure1D::dirac(1.0));
    let actions = ActionSet::Finite(vec![0.0, 1.0, 2.0]);
    let ramp = PiecewisePoly::new(vec![
        PolyPiece {
            domain: Interval::half_open(0.0, 1.0),
            poly: Poly::constant(0.0),
        },
        PolyPiece {
            domain: Interval::closed(1.0, 2.0),
            poly: Poly::linear(0.0, 1.0),
        },
    ])?;
    let cost = RegionCost::PerAction(vec![
        ramp.clone(),
        ramp,
        PiecewisePoly::on(0.0, 2.0, Poly::constant(3.0)),
    ]);
    let note = "action 2 outside the band is not specified by the construction and moves to 1, like T";
    let design = RegionModel {
        name: format!("robust_weak_T{n}"),
        state_lo: 0.0,
        state_hi: 2.0,
        regions: vec![
            Region::new("below", below.clone()),
            Region::new("band", band.clone()),
            Region::new("above", above.clone()),
        ],
        actions: actions.clone(),
        kernel: vec![
            vec![d_hi.clone(), d_lo.clone(), d_one.clone()],
            vec![d_one.clone()],
            vec![d_lo, d_hi, d_one.clone()],
        ],
        cost: cost.clone(),
        discount: DEFAULT_DISCOUNT,
        initial: Measure1D::dirac(0.0),
        channel: ChannelTag::Full,
        assumptions: profile(false, true, note),
    };
    let truth = RegionModel {
        name: "robust_weak_T".into(),
        regions: vec![Region::new("all", single(Interval::closed(0.0, 2.0)))],
        kernel: vec![vec![d_one]],
        assumptions: profile(true, true, "constant kernel δ_1"),
        ..design.clone()
    };
    Ok(GalleryEntry {
        kind: GalleryKind::RobustWeak,
        n,
        design,
        truth,
        design_policy: RegionPolicy::stationary(vec![(below, 1.0), (band, 2.0), (above, 0.0)]),
        true_policy: RegionPolicy::constant(0.0, 2.0, 1.0),
        boundary: vec![
            boundary(lo_edge, "below", "the one-sided clauses win at the band edges, so the band is open"),
            boundary(hi_edge, "above", "the one-sided clauses win at the band edges, so the band is open"),
        ],
    })
}

/// `L = ∪_k [(2k−2)/2n, (2k−1)/2n)` and `R = ∪_k [(2k−1)/2n, k/n) ∪ {1}`.
pub fn square_wave_sets(n: usize) -> (RegionSet, RegionSet) {
    let w = 1.0 / (2 * n) as f64;
    let left = (1..=n)
        .map(|k| Interval::half_open((2 * k - 2) as f64 * w, (2 * k - 1) as f64 * w))
        .collect();
    let mut right: Vec<Interval> = (1..=n)
        .map(|k| Interval::half_open((2 * k - 1) as f64 * w, if k == n { 1.0 } else { (2 * k) as f64 * w }))
        .collect();
    if let Some(last) = right.last_mut() {
        last.hi_closed = true;
    }
    (RegionSet::new(left), RegionSet::new(right))
}

/// Density `1 + h_n` (2 on `L`, 0 on `R`) with `h_n = 1_L − 1_R`.
pub fn square_wave_density(n: usize) -> Measure1D {
    square_wave(n, true)
}

/// Density `1 − h_n` (2 on `R`, 0 on `L`).
pub fn square_wave_complement(n: usize) -> Measure1D {
    square_wave(n, false)
}

fn square_wave(n: usize, on_left: bool) -> Measure1D {
    let w = 1.0 / (2 * n) as f64;
    let offset = if on_left { 0 } else { 1 };
    let pieces = (0..n)
        .map(|k| crate::measures::Piece {
            lo: (2 * k + offset) as f64 * w,
            hi: if !on_left && k + 1 == n { 1.0 } else { (2 * k + offset + 1) as f64 * w },
            height: 2.0,
        })
        .collect();
    Measure1D::from_parts(Vec::new(), pieces).expect("square wave is a probability density")
}

fn setwise_boundary() -> Vec<BoundaryAssignment> {
    vec![
        boundary(0.0, "L", "the start state 0 lies in L"),
        boundary(1.0, "R", "1 is in R, so δ_1 is absorbing under R's kernel"),
    ]
}

/// `X = [0, 1]`, `U = {0, 1}`, `c = (x − u)²`, start at 0. `T_n` draws
/// from `f_n` on `L` and jumps to 1 on `R`; `T` draws from `U([0, 1])` on
/// `L` and jumps to 1 on `R`. Kernels ignore the action, so the myopic
/// policy (`u = 0` iff `x < 1/2`) is optimal for both.
pub fn make_setwise_cont(n: usize) -> Result<GalleryEntry> {
    need_n(n, true)?;
    let (left, right) = square_wave_sets(n);
    let regions = vec![Region::new("L", left), Region::new("R", right)];
    let note = "kernels are action-independent; the myopic policy is optimal";
    let design = RegionModel {
        name: format!("setwise_cont_T{n}"),
        state_lo: 0.0,
        state_hi: 1.0,
        regions,
        actions: ActionSet::Finite(vec![0.0, 1.0]),
        kernel: vec![vec![square_wave_density(n)], vec![Measure1D::dirac(1.0)]],
        cost: RegionCost::SquaredError,
        discount: DEFAULT_DISCOUNT,
        initial: Measure1D::dirac(0.0),
        channel: ChannelTag::Full,
        assumptions: profile(false, true, note),
    };
    let truth = RegionModel {
        name: "setwise_cont_T".into(),
        kernel: vec![vec![Measure1D::uniform(0.0, 1.0)?], vec![Measure1D::dirac(1.0)]],
        ..design.clone()
    };
    let myopic = RegionPolicy::stationary(vec![
        (single(Interval::half_open(0.0, 0.5)), 0.0),
        (single(Interval::closed(0.5, 1.0)), 1.0),
    ]);
    Ok(GalleryEntry {
        kind: GalleryKind::SetwiseCont,
        n,
        design,
        truth,
        design_policy: myopic.clone(),
        true_policy: myopic,
        boundary: setwise_boundary(),
    })
}

/// `X = [0, 1]`, `U = {0, 1}`, `c(x, 0) = 2`, `c(x, 1) = x`, start at 0.
/// `T_n` draws from `f_n` on (L, 1) and (R, 0) and from `g_n = 1 − h_n` on
/// (L, 0) and (R, 1); `T = U([0, 1])` everywhere. `γ_n*` plays 1 on `L` and
/// 0 on `R`; `γ* ≡ 1`.
pub fn make_setwise_robust(n: usize) -> Result<GalleryEntry> {
    need_n(n, true)?;
    let (left, right) = square_wave_sets(n);
    let (f, g) = (square_wave_density(n), square_wave_complement(n));
    let cost = RegionCost::PerAction(vec![
        PiecewisePoly::on(0.0, 1.0, Poly::constant(2.0)),
        PiecewisePoly::on(0.0, 1.0, Poly::linear(0.0, 1.0)),
    ]);
    let design = RegionModel {
        name: format!("setwise_robust_T{n}"),
        state_lo: 0.0,
        state_hi: 1.0,
        regions: vec![Region::new("L", left.clone()), Region::new("R", right.clone())],
        actions: ActionSet::Finite(vec![0.0, 1.0]),
        kernel: vec![vec![g.clone(), f.clone()], vec![f, g]],
        cost,
        discount: DEFAULT_DISCOUNT,
        initial: Measure1D::dirac(0.0),
        channel: ChannelTag::Full,
        assumptions: profile(false, true, "square-wave densities converge setwise, not in total variation"),
    };
    let truth = RegionModel {
        name: "setwise_robust_T".into(),
        regions: vec![Region::new("all", single(Interval::closed(0.0, 1.0)))],
        kernel: vec![vec![Measure1D::uniform(0.0, 1.0)?]],
        assumptions: profile(true, true, "constant kernel U([0,1])"),
        ..design.clone()
    };
    Ok(GalleryEntry {
        kind: GalleryKind::SetwiseRobust,
        n,
        design,
        truth,
        design_policy: RegionPolicy::stationary(vec![(left, 1.0), (right, 0.0)]),
        true_policy: RegionPolicy::constant(0.0, 1.0, 1.0),
        boundary: setwise_boundary(),
    })
}

/// Drift families for [`make_additive_noise`].
#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    /// `f(x, u) = 0`.
    Zero,
    /// `f(x, u) = clip(x + u, lo + margin, hi − margin)`; the margin keeps
    /// `f + w` inside the state interval for noise supported in
    /// `[−margin, margin]`.
    ClippedShift { margin: f64 },
    /// One drift function per action.
    Custom(Vec<PiecewisePoly>),
}

/// `x ↦ clip(x + u, a, b)` on `[lo, hi]`.
pub fn clipped_shift(lo: f64, hi: f64, u: f64, a: f64, b: f64) -> Result<PiecewisePoly> {
    let p1 = (a - u).clamp(lo, hi);
    let p2 = (b - u).clamp(lo, hi);
    let segments = [
        (lo, p1, Poly::constant(a)),
        (p1, p2, Poly::linear(u, 1.0)),
        (p2, hi, Poly::constant(b)),
    ];
    let last = segments.iter().rposition(|s| s.1 > s.0).unwrap_or(2);
    let mut pieces: Vec<PolyPiece> = segments
        .iter()
        .enumerate()
        .filter(|(_, s)| s.1 > s.0)
        .map(|(i, (s, e, p))| PolyPiece {
            domain: Interval::new(*s, *e, true, i == last),
            poly: p.clone(),
        })
        .collect();
    if pieces.is_empty() {
        pieces.push(PolyPiece {
            domain: Interval::point(lo),
            poly: Poly::constant((lo + u).clamp(a, b)),
        });
    }
    PiecewisePoly::new(pieces)
}

/// Validated additive-noise model `x' = f(x, u) + w` on `[lo, hi]`.
pub fn make_additive_noise(
    drift: DriftSpec,
    noise: Measure1D,
    actions: Vec<f64>,
    lo: f64,
    hi: f64,
) -> Result<AdditiveNoiseModel> {
    let drift = match drift {
        DriftSpec::Zero => vec![PiecewisePoly::on(lo, hi, Poly::constant(0.0)); actions.len()],
        DriftSpec::ClippedShift { margin } => actions
            .iter()
            .map(|&u| clipped_shift(lo, hi, u, lo + margin, hi - margin))
            .collect::<Result<_>>()?,
        DriftSpec::Custom(fs) => fs,
    };
    let m = AdditiveNoiseModel::new(lo, hi, actions, drift, noise);
    let violations = m.validate();
    if let Some(Violation::DriftOutOfRange { action, lo, hi }) = violations
        .iter()
        .find(|v| matches!(v, Violation::DriftOutOfRange { .. }))
    {
        return Err(Error::DriftOutOfRange(format!(
            "action {action}: f + w reaches [{lo}, {hi}], outside [{}, {}]",
            m.state_lo, m.state_hi
        )));
    }
    m.ensure_valid()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::dyadic_family;
    use crate::models::{kernel_tv_sup, kernel_w1_sup};
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-11;

    #[test]
    fn every_entry_matches_its_exact_closed_form() {
        for kind in GalleryKind::ALL {
            for n in [2, 4, 10, 100] {
                for beta in [0.3, 0.5, 0.9] {
                    let e = kind.make(n).unwrap().with_discount(beta);
                    e.design.ensure_valid().unwrap();
                    e.truth.ensure_valid().unwrap();
                    let v = e.evaluate(TOL).unwrap();
                    let c = e.closed_form_exact();
                    let msg = format!("{kind} n={n} β={beta}");
                    assert_abs_diff_eq!(v.design_optimal, c.design_optimal.unwrap(), epsilon = 1e-9);
                    assert_abs_diff_eq!(v.true_optimal, c.true_optimal.unwrap(), epsilon = 1e-9);
                    assert!((v.cross - c.cross.unwrap()).abs() <= 1e-9, "{msg}: {v:?} vs {c:?}");
                }
            }
        }
    }

    #[test]
    fn odd_or_small_n_is_rejected() {
        assert!(make_weak_pomdp(1).is_err());
        assert!(make_setwise_cont(3).is_err());
        assert!(make_setwise_robust(5).is_err());
        assert!(make_robust_weak(3).is_ok());
    }

    #[test]
    fn published_values_at_reference_points() {
        let w = GalleryKind::WeakPomdp.closed_form_paper(0.5, 10);
        assert_abs_diff_eq!(w.design_optimal.unwrap(), 0.405, epsilon = 1e-15);
        assert_eq!(w.true_optimal, Some(1.0));
        let f = GalleryKind::WeakFully.closed_form_paper(0.5, 10);
        assert_abs_diff_eq!(f.design_optimal.unwrap(), 0.51, epsilon = 1e-15);
        let fe = GalleryKind::WeakFully.closed_form_exact(0.5, 10);
        assert_abs_diff_eq!(fe.design_optimal.unwrap(), 0.505, epsilon = 1e-15);
        let r = GalleryKind::RobustWeak.closed_form_paper(0.5, 7);
        assert_eq!((r.cross, r.true_optimal), (Some(6.0), Some(0.0)));
        let s = GalleryKind::SetwiseCont.closed_form_paper(0.5, 4);
        assert_abs_diff_eq!(s.design_optimal.unwrap(), 0.114_583_333_333_333_33, epsilon = 1e-15);
        assert_abs_diff_eq!(s.true_optimal.unwrap(), 1.0 / 18.0, epsilon = 1e-15);
        let lim = GalleryKind::SetwiseCont.limit_published(0.5);
        assert_abs_diff_eq!(lim.continuity_gap().unwrap(), 1.0 / 36.0, epsilon = 1e-15);
    }

    #[test]
    fn published_and_exact_agree_where_no_discrepancy() {
        for n in [2, 10, 50] {
            for b in [0.2, 0.5, 0.8] {
                let p = GalleryKind::WeakPomdp.closed_form_paper(b, n);
                let e = GalleryKind::WeakPomdp.closed_form_exact(b, n);
                assert_eq!(p.design_optimal, e.design_optimal);
                assert_eq!(p.true_optimal, e.true_optimal);
                let p = GalleryKind::SetwiseCont.closed_form_paper(b, n);
                let e = GalleryKind::SetwiseCont.closed_form_exact(b, n);
                assert_eq!(p.true_optimal, e.true_optimal);
            }
        }
    }

    #[test]
    fn robust_weak_loss_is_constant() {
        for n in [2, 10, 100] {
            let e = make_robust_weak(n).unwrap();
            let v = e.evaluate(TOL).unwrap();
            assert_abs_diff_eq!(v.loss(), 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(kernel_w1_sup(&e.design, &e.truth).unwrap(), 1.0 / n as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(kernel_tv_sup(&e.design, &e.truth).unwrap(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn weak_entries_have_w1_one_over_n_and_tv_two() {
        for n in [2, 4, 10, 1000] {
            for e in [make_weak_pomdp(n).unwrap(), make_weak_fully(n).unwrap()] {
                assert_abs_diff_eq!(kernel_w1_sup(&e.design, &e.truth).unwrap(), 1.0 / n as f64, epsilon = 1e-12);
                assert_abs_diff_eq!(kernel_tv_sup(&e.design, &e.truth).unwrap(), 2.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn setwise_entries_have_small_setwise_gap_and_tv_one() {
        let family = dyadic_family(0.0, 1.0, 12);
        for n in [2, 4, 16, 100] {
            let f = square_wave_density(n);
            let u = Measure1D::uniform(0.0, 1.0).unwrap();
            assert!(f.setwise_gap(&u, &family).unwrap() <= 0.5 / n as f64 + 1e-15);
            let e = make_setwise_cont(n).unwrap();
            assert_abs_diff_eq!(kernel_tv_sup(&e.design, &e.truth).unwrap(), 1.0, epsilon = 1e-12);
            let r = make_setwise_robust(n).unwrap();
            assert_abs_diff_eq!(kernel_tv_sup(&r.design, &r.truth).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn square_wave_sets_partition_the_unit_interval() {
        for n in [2, 3, 8] {
            let (l, r) = square_wave_sets(n);
            assert!(crate::measures::partition_defect(&[l.clone(), r.clone()], 0.0, 1.0).is_none());
            assert!(l.contains(0.0) && r.contains(1.0));
            assert_abs_diff_eq!(l.length(), 0.5, epsilon = 1e-15);
            assert_eq!(square_wave_density(n).mass_in_set(&l), 1.0);
            assert_eq!(square_wave_complement(n).mass_in_set(&r), 1.0);
        }
    }

    #[test]
    fn entry_names_round_trip() {
        for kind in GalleryKind::ALL {
            assert_eq!(kind.name().parse::<GalleryKind>().unwrap(), kind);
        }
        assert!("nope".parse::<GalleryKind>().is_err());
    }

    #[test]
    fn additive_noise_examples() {
        let absorbing = make_additive_noise(DriftSpec::Zero, Measure1D::dirac(0.0), vec![0.0], 0.0, 1.0).unwrap();
        assert_eq!(absorbing.transition(&absorbing.noise, 0.3, 0).unwrap(), Measure1D::dirac(0.0));

        let noise = Measure1D::uniform(-0.1, 0.1).unwrap();
        let m = make_additive_noise(
            DriftSpec::ClippedShift { margin: 0.1 },
            noise.clone(),
            vec![-0.2, 0.0, 0.2],
            0.0,
            1.0,
        )
        .unwrap();
        let d = m.discretize(20).unwrap();
        for rows in &d.mdp.kernel {
            for row in rows {
                assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
        assert!(d.defect <= 1e-9);

        let too_wide = make_additive_noise(
            DriftSpec::ClippedShift { margin: 0.05 },
            noise,
            vec![0.0],
            0.0,
            1.0,
        );
        assert!(matches!(too_wide, Err(Error::DriftOutOfRange(_))));
    }

    #[test]
    fn clipped_shift_shape() {
        let f = clipped_shift(0.0, 1.0, 0.3, 0.1, 0.9).unwrap();
        assert_abs_diff_eq!(f.eval(0.0).unwrap(), 0.3);
        assert_abs_diff_eq!(f.eval(0.5).unwrap(), 0.8);
        assert_abs_diff_eq!(f.eval(0.7).unwrap(), 0.9);
        assert_abs_diff_eq!(f.eval(1.0).unwrap(), 0.9);
        let g = clipped_shift(0.0, 1.0, -0.5, 0.1, 0.9).unwrap();
        assert_abs_diff_eq!(g.eval(0.2).unwrap(), 0.1);
        assert_abs_diff_eq!(g.eval(0.8).unwrap(), 0.3);
    }
}
