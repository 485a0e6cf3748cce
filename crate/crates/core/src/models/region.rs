use serde::{Deserialize, Serialize};

use super::{KernelModel, Metric, Validate, Violation};
use crate::measures::{partition_defect, Interval, Measure1D, PiecewisePoly, Poly, RegionSet, MASS_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    pub set: RegionSet,
}

impl Region {
    pub fn new(label: impl Into<String>, set: RegionSet) -> Self {
        Self {
            label: label.into(),
            set,
        }
    }
}

/// Action space. Interval action sets are metadata only: optimization over
/// them is never attempted, analytic policies pick values directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSet {
    Finite(Vec<f64>),
    Interval { lo: f64, hi: f64 },
}

impl ActionSet {
    pub fn contains(&self, u: f64) -> bool {
        match self {
            ActionSet::Finite(v) => v.iter().any(|&a| (a - u).abs() <= 1e-12),
            ActionSet::Interval { lo, hi } => *lo <= u && u <= *hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionCost {
    /// One piecewise polynomial in `x` per finite action, in action order.
    PerAction(Vec<PiecewisePoly>),
    /// `c(x, u) = (x − u)²`.
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelTag {
    Full,
    Uninformative,
}

/// Declared (not verified) status of the standing regularity assumptions:
/// weakly continuous kernel, TV-continuous channel, bounded continuous
/// nonnegative cost, compact action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionProfile {
    pub kernel_weakly_continuous: bool,
    pub channel_tv_continuous: bool,
    pub cost_bounded_continuous: bool,
    pub actions_compact: bool,
    #[serde(default)]
    pub note: String,
}

/// Continuous-state model whose kernel depends on the state only through a
/// finite partition into regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionModel {
    pub name: String,
    /// Closed state interval `[lo, hi]`.
    pub state_lo: f64,
    pub state_hi: f64,
    pub regions: Vec<Region>,
    pub actions: ActionSet,
    /// `kernel[region][column]`; a single column means action-independent.
    pub kernel: Vec<Vec<Measure1D>>,
    pub cost: RegionCost,
    pub discount: f64,
    pub initial: Measure1D,
    pub channel: ChannelTag,
    pub assumptions: AssumptionProfile,
}

impl RegionModel {
    pub fn region_sets(&self) -> Vec<RegionSet> {
        self.regions.iter().map(|r| r.set.clone()).collect()
    }

    pub fn state_interval(&self) -> Interval {
        Interval::closed(self.state_lo, self.state_hi)
    }

    /// Index of the finite action equal to `u`, or 0 for interval action sets.
    pub fn action_index(&self, u: f64) -> Result<usize> {
        match &self.actions {
            ActionSet::Finite(v) => v
                .iter()
                .position(|&a| (a - u).abs() <= 1e-12)
                .ok_or_else(|| Error::InvalidParameter(format!("{u} is not an action of {}", self.name))),
            ActionSet::Interval { lo, hi } if *lo <= u && u <= *hi => Ok(0),
            ActionSet::Interval { lo, hi } => Err(Error::InvalidParameter(format!(
                "{u} outside action interval [{lo}, {hi}]"
            ))),
        }
    }

    pub fn kernel_for(&self, region: usize, u: f64) -> Result<&Measure1D> {
        let idx = self.action_index(u)?;
        let row = &self.kernel[region];
        Ok(if row.len() == 1 { &row[0] } else { &row[idx] })
    }

    pub fn cost_for(&self, u: f64) -> Result<PiecewisePoly> {
        match &self.cost {
            RegionCost::PerAction(polys) => Ok(polys[self.action_index(u)?].clone()),
            RegionCost::SquaredError => {
                self.action_index(u)?;
                Ok(PiecewisePoly::on(self.state_lo, self.state_hi, Poly::squared_distance(u)))
            }
        }
    }

    /// `‖c‖∞` over the state interval and action set.
    pub fn cost_sup(&self) -> f64 {
        match (&self.cost, &self.actions) {
            (RegionCost::PerAction(polys), _) => polys.iter().map(PiecewisePoly::sup_abs).fold(0.0, f64::max),
            (RegionCost::SquaredError, ActionSet::Finite(us)) => us
                .iter()
                .map(|u| (self.state_lo - u).powi(2).max((self.state_hi - u).powi(2)))
                .fold(0.0, f64::max),
            (RegionCost::SquaredError, ActionSet::Interval { lo, hi }) => {
                (self.state_hi - lo).powi(2).max((self.state_lo - hi).powi(2))
            }
        }
    }

    fn columns(&self) -> usize {
        match &self.actions {
            ActionSet::Finite(v) => v.len(),
            ActionSet::Interval { .. } => 1,
        }
    }

    /// Region containing `x`, if any.
    pub fn region_of(&self, x: f64) -> Option<usize> {
        self.regions.iter().position(|r| r.set.contains(x))
    }

    pub fn with_discount(&self, discount: f64) -> Self {
        Self {
            discount,
            ..self.clone()
        }
    }

    fn inside(&self, m: &Measure1D) -> bool {
        m.support()
            .is_some_and(|(lo, hi)| lo >= self.state_lo - 1e-12 && hi <= self.state_hi + 1e-12)
    }
}

impl Validate for RegionModel {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Some(d) = partition_defect(&self.region_sets(), self.state_lo, self.state_hi) {
            out.push(Violation::Partition(d.to_string()));
        }
        let cols = self.columns();
        if self.kernel.len() != self.regions.len() {
            out.push(Violation::Shape(format!(
                "{} kernel rows for {} regions",
                self.kernel.len(),
                self.regions.len()
            )));
        }
        for (r, row) in self.kernel.iter().enumerate() {
            if row.len() != 1 && row.len() != cols {
                out.push(Violation::Shape(format!("region {r} has {} kernel columns", row.len())));
            }
            for (a, m) in row.iter().enumerate() {
                let mass = m.total_mass();
                if (mass - 1.0).abs() > MASS_TOL {
                    out.push(Violation::KernelNotProbability { region: r, action: a, mass });
                }
                if !self.inside(m) {
                    out.push(Violation::KernelOutsideStateSpace { region: r, action: a });
                }
            }
        }
        if let RegionCost::PerAction(polys) = &self.cost {
            if polys.len() != cols {
                out.push(Violation::Shape(format!("{} cost functions for {cols} actions", polys.len())));
            }
            for (a, f) in polys.iter().enumerate() {
                let domains: Vec<RegionSet> =
                    f.pieces().iter().map(|p| RegionSet::single(p.domain)).collect();
                if let Some(d) = partition_defect(&domains, self.state_lo, self.state_hi) {
                    let at = match d {
                        crate::measures::PartitionDefect::Gap(x) => x,
                        crate::measures::PartitionDefect::Overlap(..) => self.state_lo,
                    };
                    out.push(Violation::CostUndefined { action: a, at });
                }
                if f.range().is_some_and(|(lo, _)| lo < -1e-12) {
                    out.push(Violation::NegativeCost { state: 0, action: a });
                }
            }
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            out.push(Violation::DiscountOutOfRange(self.discount));
        }
        let mass = self.initial.total_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            out.push(Violation::InitialNotStochastic { sum: mass });
        }
        if !self.inside(&self.initial) {
            out.push(Violation::InitialOutsideStateSpace);
        }
        out
    }
}

impl KernelModel for RegionModel {
    fn kernel_sup(&self, other: &Self, metric: Metric) -> Result<f64> {
        if self.actions != other.actions {
            return Err(Error::Incompatible("action sets differ".into()));
        }
        if self.state_lo != other.state_lo || self.state_hi != other.state_hi {
            return Err(Error::Incompatible("state intervals differ".into()));
        }
        let cols = self.columns();
        let mut best: f64 = 0.0;
        for (i, ri) in self.regions.iter().enumerate() {
            for (j, rj) in other.regions.iter().enumerate() {
                if ri.set.intersect(&rj.set).is_empty() {
                    continue;
                }
                for a in 0..cols {
                    let p = &self.kernel[i][if self.kernel[i].len() == 1 { 0 } else { a }];
                    let q = &other.kernel[j][if other.kernel[j].len() == 1 { 0 } else { a }];
                    let d = match metric {
                        Metric::TotalVariation => p.tv_distance(q)?,
                        Metric::Wasserstein1 => p.w1_distance(q)?,
                    };
                    best = best.max(d);
                }
            }
        }
        Ok(best)
    }
}
