use serde::{Deserialize, Serialize};

use super::{KernelModel, Metric, TabularMdp, Validate, Violation};
use crate::measures::{partition_defect, Interval, Measure1D, PiecewisePoly, Poly, RegionSet, MASS_TOL};
use crate::{Error, Result};

/// `x_{t+1} = f(x_t, u_t) + w_t` on a closed state interval, with i.i.d.
/// noise `w_t ~ noise` and a finite action grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveNoiseModel {
    pub state_lo: f64,
    pub state_hi: f64,
    pub actions: Vec<f64>,
    /// `drift[a]` is `x ↦ f(x, actions[a])`.
    pub drift: Vec<PiecewisePoly>,
    pub noise: Measure1D,
    /// Stage cost per action; zero unless set.
    pub cost: Vec<PiecewisePoly>,
    pub discount: f64,
    pub initial_state: f64,
}

impl AdditiveNoiseModel {
    pub fn new(
        state_lo: f64,
        state_hi: f64,
        actions: Vec<f64>,
        drift: Vec<PiecewisePoly>,
        noise: Measure1D,
    ) -> Self {
        let zero = PiecewisePoly::on(state_lo, state_hi, Poly::constant(0.0));
        Self {
            state_lo,
            state_hi,
            cost: vec![zero; actions.len()],
            actions,
            drift,
            noise,
            discount: 0.5,
            initial_state: state_lo,
        }
    }

    pub fn with_cost(mut self, cost: Vec<PiecewisePoly>) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    pub fn with_initial_state(mut self, x0: f64) -> Self {
        self.initial_state = x0;
        self
    }

    pub fn with_noise(&self, noise: Measure1D) -> Self {
        Self {
            noise,
            ..self.clone()
        }
    }

    pub fn drift_at(&self, x: f64, action: usize) -> Result<f64> {
        self.drift[action]
            .eval(x)
            .ok_or(Error::UndefinedIntegrand { at: x })
    }

    pub fn cost_at(&self, x: f64, action: usize) -> Result<f64> {
        self.cost[action]
            .eval(x)
            .ok_or(Error::UndefinedIntegrand { at: x })
    }

    /// Next-state distribution from `x` under `action`, using `noise`.
    pub fn transition(&self, noise: &Measure1D, x: f64, action: usize) -> Result<Measure1D> {
        noise.pushforward_affine(1.0, self.drift_at(x, action)?)
    }

    /// Kernel cells over `state_grid × actions` for a given noise law.
    pub fn kernel_table(&self, noise: &Measure1D, state_grid: &[f64]) -> Result<KernelTable> {
        let cells = state_grid
            .iter()
            .map(|&x| {
                (0..self.actions.len())
                    .map(|a| self.transition(noise, x, a))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KernelTable {
            states: state_grid.to_vec(),
            actions: self.actions.clone(),
            cells,
        })
    }

    pub fn bin_edges(&self, n_bins: usize) -> Vec<f64> {
        let h = (self.state_hi - self.state_lo) / n_bins as f64;
        (0..=n_bins)
            .map(|i| if i == n_bins { self.state_hi } else { self.state_lo + i as f64 * h })
            .collect()
    }

    /// Bin index of `x` for `n_bins` equal bins (`[e_i, e_{i+1})`, last bin
    /// closed).
    pub fn bin_of(&self, x: f64, n_bins: usize) -> usize {
        let h = (self.state_hi - self.state_lo) / n_bins as f64;
        (((x - self.state_lo) / h).floor().max(0.0) as usize).min(n_bins - 1)
    }

    /// Tabular model on bin midpoints: row `(i, a)` gives the mass the
    /// pushforward noise law from midpoint `i` puts on each bin. Rows are
    /// renormalized; the largest pre-normalization defect is reported.
    pub fn discretize(&self, n_bins: usize) -> Result<Discretized> {
        if n_bins == 0 {
            return Err(Error::InvalidParameter("n_bins must be positive".into()));
        }
        if !(self.state_lo < self.state_hi) || !self.state_hi.is_finite() || !self.state_lo.is_finite() {
            return Err(Error::UnboundedSupport);
        }
        let edges = self.bin_edges(n_bins);
        let bins: Vec<Interval> = (0..n_bins)
            .map(|i| Interval::new(edges[i], edges[i + 1], true, i + 1 == n_bins))
            .collect();
        let mids: Vec<f64> = (0..n_bins).map(|i| 0.5 * (edges[i] + edges[i + 1])).collect();
        let na = self.actions.len();
        let mut kernel = vec![vec![Vec::new(); na]; n_bins];
        let mut cost = vec![vec![0.0; na]; n_bins];
        let mut defect: f64 = 0.0;
        for (i, &x) in mids.iter().enumerate() {
            for a in 0..na {
                let next = self.transition(&self.noise, x, a)?;
                let mut row: Vec<f64> = bins.iter().map(|b| next.mass_in(b)).collect();
                let sum: f64 = row.iter().sum();
                let d = (1.0 - sum).abs();
                if d > 1e-6 || sum <= 0.0 {
                    return Err(Error::DiscretizationDefect {
                        defect: d,
                        state: i,
                        action: a,
                    });
                }
                defect = defect.max(d);
                row.iter_mut().for_each(|p| *p /= sum);
                kernel[i][a] = row;
                cost[i][a] = self.cost_at(x, a)?;
            }
        }
        let mut initial = vec![0.0; n_bins];
        initial[self.bin_of(self.initial_state, n_bins)] = 1.0;
        let mdp = TabularMdp {
            state_labels: mids.iter().map(|&m| vec![m]).collect(),
            action_labels: self.actions.clone(),
            kernel,
            cost,
            discount: self.discount,
            initial,
        };
        Ok(Discretized { mdp, defect, edges })
    }
}

#[derive(Debug, Clone)]
pub struct Discretized {
    pub mdp: TabularMdp,
    /// Largest `|1 − row mass|` before renormalization.
    pub defect: f64,
    pub edges: Vec<f64>,
}

impl Validate for AdditiveNoiseModel {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.drift.len() != self.actions.len() || self.cost.len() != self.actions.len() {
            out.push(Violation::Shape("drift and cost need one function per action".into()));
            return out;
        }
        let space = [self.state_lo, self.state_hi];
        let covers = |f: &PiecewisePoly| {
            let sets: Vec<RegionSet> = f.pieces().iter().map(|p| RegionSet::single(p.domain)).collect();
            partition_defect(&sets, space[0], space[1])
        };
        let noise_support = self.noise.support();
        if (self.noise.total_mass() - 1.0).abs() > MASS_TOL {
            out.push(Violation::KernelNotProbability {
                region: 0,
                action: 0,
                mass: self.noise.total_mass(),
            });
        }
        for (a, f) in self.drift.iter().enumerate() {
            if covers(f).is_some() {
                out.push(Violation::Shape(format!("drift for action {a} not defined on the whole state space")));
                continue;
            }
            if let (Some((flo, fhi)), Some((wlo, whi))) = (f.range(), noise_support) {
                let (lo, hi) = (flo + wlo, fhi + whi);
                if lo < self.state_lo - 1e-12 || hi > self.state_hi + 1e-12 {
                    out.push(Violation::DriftOutOfRange { action: a, lo, hi });
                }
            }
        }
        for (a, c) in self.cost.iter().enumerate() {
            if let Some(d) = covers(c) {
                let at = match d {
                    crate::measures::PartitionDefect::Gap(x) => x,
                    _ => self.state_lo,
                };
                out.push(Violation::CostUndefined { action: a, at });
            } else if c.range().is_some_and(|(lo, _)| lo < -1e-12) {
                out.push(Violation::NegativeCost { state: 0, action: a });
            }
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            out.push(Violation::DiscountOutOfRange(self.discount));
        }
        if !(self.state_lo..=self.state_hi).contains(&self.initial_state) {
            out.push(Violation::InitialOutsideStateSpace);
        }
        out
    }
}

/// Kernel cells `T(·|x, u)` over a finite state grid and action grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    /// `cells[state][action]`
    pub cells: Vec<Vec<Measure1D>>,
}

impl KernelModel for KernelTable {
    fn kernel_sup(&self, other: &Self, metric: Metric) -> Result<f64> {
        if self.states != other.states || self.actions != other.actions {
            return Err(Error::Incompatible("kernel tables use different grids".into()));
        }
        let mut best: f64 = 0.0;
        for (ra, rb) in self.cells.iter().zip(&other.cells) {
            for (p, q) in ra.iter().zip(rb) {
                best = best.max(match metric {
                    Metric::TotalVariation => p.tv_distance(q)?,
                    Metric::Wasserstein1 => p.w1_distance(q)?,
                });
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::PolyPiece;

    fn identity_drift(lo: f64, hi: f64, shift: f64) -> PiecewisePoly {
        PiecewisePoly::on(lo, hi, Poly::linear(shift, 1.0))
    }

    #[test]
    fn dirac_noise_identity_kernel() {
        let m = AdditiveNoiseModel::new(0.0, 1.0, vec![0.0], vec![identity_drift(0.0, 1.0, 0.0)], Measure1D::dirac(0.0));
        let d = m.discretize(5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(d.mdp.kernel[i][0][j], if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(d.defect, 0.0);
    }

    #[test]
    fn uniform_noise_splits_between_neighbours() {
        // bin width h = 0.1, noise U([−h/2, h/2)), drift x + h/4:
        // from midpoint i the next state is uniform on [e_i + h/4, e_{i+1} + h/4),
        // so 3/4 stays in bin i and 1/4 moves to bin i+1 (exact overlap oracle).
        let h = 0.1;
        let noise = Measure1D::uniform(-h / 2.0, h / 2.0).unwrap();
        let drift = PiecewisePoly::new(vec![
            PolyPiece { domain: Interval::half_open(0.0, 0.9), poly: Poly::linear(h / 4.0, 1.0) },
            PolyPiece { domain: Interval::closed(0.9, 1.0), poly: Poly::constant(0.95) },
        ])
        .unwrap();
        let m = AdditiveNoiseModel::new(0.0, 1.0, vec![0.0], vec![drift], noise);
        let d = m.discretize(10).unwrap();
        for i in 0..9 {
            let row = &d.mdp.kernel[i][0];
            for j in 0..10 {
                let expect = if j == i { 0.75 } else if j == i + 1 { 0.25 } else { 0.0 };
                assert!((row[j] - expect).abs() < 1e-12, "row {i} col {j}: {}", row[j]);
            }
        }
        assert!(d.defect < 1e-9);
    }

    #[test]
    fn out_of_range_drift_rejected_by_discretize() {
        let m = AdditiveNoiseModel::new(0.0, 1.0, vec![0.0], vec![identity_drift(0.0, 1.0, 0.5)], Measure1D::dirac(0.0));
        assert!(matches!(m.discretize(4), Err(Error::DiscretizationDefect { .. })));
        assert!(!m.validate().is_empty());
    }
}
