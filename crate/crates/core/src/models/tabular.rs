use serde::{Deserialize, Serialize};

use super::{KernelModel, Metric, Validate, Violation, ROW_TOL};
use crate::measures::{Atom, Measure1D};
use crate::rng::Stream;
use crate::{Error, Result};

/// Finite controlled Markov model with discounted cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    /// Real-vector label of each state (1 or 2 coordinates).
    pub state_labels: Vec<Vec<f64>>,
    pub action_labels: Vec<f64>,
    /// `kernel[x][u][x']`
    pub kernel: Vec<Vec<Vec<f64>>>,
    /// `cost[x][u] ≥ 0`
    pub cost: Vec<Vec<f64>>,
    pub discount: f64,
    pub initial: Vec<f64>,
}

impl TabularMdp {
    /// Model with labels `0..n` for states and actions.
    pub fn new(
        kernel: Vec<Vec<Vec<f64>>>,
        cost: Vec<Vec<f64>>,
        discount: f64,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let ns = kernel.len();
        let na = kernel.first().map_or(0, Vec::len);
        let m = Self {
            state_labels: (0..ns).map(|x| vec![x as f64]).collect(),
            action_labels: (0..na).map(|u| u as f64).collect(),
            kernel,
            cost,
            discount,
            initial,
        };
        m.ensure_valid()?;
        Ok(m)
    }

    /// Random model: Dirichlet-like rows, costs uniform on `[0, 1)`, initial
    /// state 0.
    pub fn random(rng: &mut Stream, n_states: usize, n_actions: usize, discount: f64) -> Self {
        let kernel = (0..n_states)
            .map(|_| (0..n_actions).map(|_| rng.simplex(n_states)).collect())
            .collect();
        let cost = (0..n_states)
            .map(|_| (0..n_actions).map(|_| rng.unit()).collect())
            .collect();
        let mut initial = vec![0.0; n_states];
        initial[0] = 1.0;
        Self {
            state_labels: (0..n_states).map(|x| vec![x as f64]).collect(),
            action_labels: (0..n_actions).map(|u| u as f64).collect(),
            kernel,
            cost,
            discount,
            initial,
        }
    }

    pub fn n_states(&self) -> usize {
        self.kernel.len()
    }

    pub fn n_actions(&self) -> usize {
        self.kernel.first().map_or(0, Vec::len)
    }

    pub fn row(&self, x: usize, u: usize) -> &[f64] {
        &self.kernel[x][u]
    }

    /// `‖c‖∞`
    pub fn cost_sup(&self) -> f64 {
        self.cost
            .iter()
            .flatten()
            .fold(0.0, |m: f64, c| m.max(c.abs()))
    }

    /// Copy with every kernel row replaced by `(1 − ε)·row + ε·other_row`.
    pub fn mixed_toward(&self, other: &[Vec<Vec<f64>>], eps: f64) -> Self {
        let mut out = self.clone();
        for (x, rows) in out.kernel.iter_mut().enumerate() {
            for (u, row) in rows.iter_mut().enumerate() {
                for (y, p) in row.iter_mut().enumerate() {
                    *p = (1.0 - eps) * *p + eps * other[x][u][y];
                }
            }
        }
        out
    }

    pub fn with_kernel(&self, kernel: Vec<Vec<Vec<f64>>>) -> Self {
        Self {
            kernel,
            ..self.clone()
        }
    }

    fn row_measure(&self, x: usize, u: usize) -> Result<Measure1D> {
        let atoms = self.kernel[x][u]
            .iter()
            .zip(&self.state_labels)
            .map(|(&mass, label)| match label.as_slice() {
                [loc] => Ok(Atom { loc: *loc, mass }),
                _ => Err(Error::Incompatible(
                    "Wasserstein distance needs scalar state labels".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        Measure1D::from_parts(atoms, Vec::new())
    }
}

impl Validate for TabularMdp {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let ns = self.n_states();
        let na = self.n_actions();
        if ns == 0 || na == 0 {
            out.push(Violation::Shape("model needs at least one state and action".into()));
            return out;
        }
        if self.state_labels.len() != ns {
            out.push(Violation::Shape(format!(
                "{} state labels for {ns} states",
                self.state_labels.len()
            )));
        }
        for (x, l) in self.state_labels.iter().enumerate() {
            if l.is_empty() || l.len() > 2 {
                out.push(Violation::StateLabelTooLong { state: x, len: l.len() });
            }
        }
        if self.action_labels.len() != na {
            out.push(Violation::Shape(format!(
                "{} action labels for {na} actions",
                self.action_labels.len()
            )));
        }
        for (x, rows) in self.kernel.iter().enumerate() {
            if rows.len() != na {
                out.push(Violation::Shape(format!("state {x} has {} actions", rows.len())));
                continue;
            }
            for (u, row) in rows.iter().enumerate() {
                if row.len() != ns {
                    out.push(Violation::Shape(format!("row ({x}, {u}) has length {}", row.len())));
                    continue;
                }
                if let Some(y) = row.iter().position(|&p| p < 0.0 || !p.is_finite()) {
                    out.push(Violation::NegativeProbability { state: x, action: u, next: y });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOL {
                    out.push(Violation::RowNotStochastic { state: x, action: u, sum });
                }
            }
        }
        if self.cost.len() != ns || self.cost.iter().any(|r| r.len() != na) {
            out.push(Violation::Shape("cost matrix must be states × actions".into()));
        } else {
            for (x, row) in self.cost.iter().enumerate() {
                for (u, &c) in row.iter().enumerate() {
                    if !c.is_finite() {
                        out.push(Violation::NonFiniteCost { state: x, action: u });
                    } else if c < 0.0 {
                        out.push(Violation::NegativeCost { state: x, action: u });
                    }
                }
            }
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            out.push(Violation::DiscountOutOfRange(self.discount));
        }
        let sum: f64 = self.initial.iter().sum();
        if self.initial.len() != ns {
            out.push(Violation::Shape(format!(
                "initial distribution has length {}",
                self.initial.len()
            )));
        } else if (sum - 1.0).abs() > ROW_TOL || self.initial.iter().any(|&p| p < 0.0) {
            out.push(Violation::InitialNotStochastic { sum });
        }
        out
    }
}

fn check_same_shape(a: &TabularMdp, b: &TabularMdp) -> Result<()> {
    if a.n_states() != b.n_states() || a.n_actions() != b.n_actions() {
        return Err(Error::Incompatible(format!(
            "{}×{} vs {}×{} models",
            a.n_states(),
            a.n_actions(),
            b.n_states(),
            b.n_actions()
        )));
    }
    Ok(())
}

impl KernelModel for TabularMdp {
    fn kernel_sup(&self, other: &Self, metric: Metric) -> Result<f64> {
        check_same_shape(self, other)?;
        if metric == Metric::Wasserstein1 && self.state_labels != other.state_labels {
            return Err(Error::Incompatible("state labels differ".into()));
        }
        let mut best: f64 = 0.0;
        for x in 0..self.n_states() {
            for u in 0..self.n_actions() {
                let d = match metric {
                    Metric::TotalVariation => self.kernel[x][u]
                        .iter()
                        .zip(&other.kernel[x][u])
                        .map(|(p, q)| (p - q).abs())
                        .sum(),
                    Metric::Wasserstein1 => {
                        let p = self.row_measure(x, u)?;
                        let q = other.row_measure(x, u)?;
                        // rows are stochastic to ROW_TOL, compare unnormalized
                        w1_unchecked(&p, &q)?
                    }
                };
                best = best.max(d);
            }
        }
        Ok(best)
    }
}

fn w1_unchecked(p: &Measure1D, q: &Measure1D) -> Result<f64> {
    let scale = |m: &Measure1D| {
        let t = m.total_mass();
        Measure1D::mixture([(1.0 / t, m)])
    };
    scale(p).w1_distance(&scale(q))
}

/// Observation channel of a finite POMDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// `q[x][y]`, row-stochastic.
    Matrix(Vec<Vec<f64>>),
    /// Observations carry no information; collapses to a single symbol.
    Uninformative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPomdp {
    pub mdp: TabularMdp,
    pub channel: Channel,
}

impl TabularPomdp {
    pub fn new(mdp: TabularMdp, channel: Channel) -> Result<Self> {
        let p = Self { mdp, channel };
        p.ensure_valid()?;
        Ok(p)
    }

    /// Identity channel `Q(y|x) = 1{x = y}`.
    pub fn fully_observed(mdp: TabularMdp) -> Self {
        let n = mdp.n_states();
        let q = (0..n)
            .map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            mdp,
            channel: Channel::Matrix(q),
        }
    }

    pub fn random(
        rng: &mut Stream,
        n_states: usize,
        n_actions: usize,
        n_obs: usize,
        discount: f64,
    ) -> Self {
        let mut mdp = TabularMdp::random(rng, n_states, n_actions, discount);
        mdp.initial = rng.simplex(n_states);
        let q = (0..n_states).map(|_| rng.simplex(n_obs)).collect();
        Self {
            mdp,
            channel: Channel::Matrix(q),
        }
    }

    pub fn n_obs(&self) -> usize {
        match &self.channel {
            Channel::Matrix(q) => q.first().map_or(0, Vec::len),
            Channel::Uninformative => 1,
        }
    }

    pub fn obs_prob(&self, x: usize, y: usize) -> f64 {
        match &self.channel {
            Channel::Matrix(q) => q[x][y],
            Channel::Uninformative => 1.0,
        }
    }

    pub fn with_kernel(&self, kernel: Vec<Vec<Vec<f64>>>) -> Self {
        Self {
            mdp: self.mdp.with_kernel(kernel),
            channel: self.channel.clone(),
        }
    }
}

impl Validate for TabularPomdp {
    fn validate(&self) -> Vec<Violation> {
        let mut out = self.mdp.validate();
        if let Channel::Matrix(q) = &self.channel {
            if q.len() != self.mdp.n_states() {
                out.push(Violation::Shape(format!("channel has {} rows", q.len())));
            }
            let ny = self.n_obs();
            for (x, row) in q.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.len() != ny || row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > ROW_TOL {
                    out.push(Violation::ChannelRowNotStochastic { state: x, sum });
                }
            }
        }
        out
    }
}

impl KernelModel for TabularPomdp {
    fn kernel_sup(&self, other: &Self, metric: Metric) -> Result<f64> {
        self.mdp.kernel_sup(&other.mdp, metric)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{as_pomdp, kernel_tv_sup, kernel_w1_sup};

    fn two_by_two() -> TabularMdp {
        TabularMdp::new(
            vec![
                vec![vec![0.5, 0.5], vec![1.0, 0.0]],
                vec![vec![0.0, 1.0], vec![0.25, 0.75]],
            ],
            vec![vec![1.0, 0.0], vec![0.5, 2.0]],
            0.9,
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn random_model_is_valid() {
        let m = TabularMdp::random(&mut Stream::new(3), 4, 2, 0.5);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn bad_row_is_named() {
        let mut m = two_by_two();
        m.kernel[1][0] = vec![0.4, 0.5];
        let v = m.validate();
        assert_eq!(v.len(), 1);
        match v[0] {
            Violation::RowNotStochastic { state, action, sum } => {
                assert_eq!((state, action), (1, 0));
                assert!((sum - 0.9).abs() < 1e-15);
            }
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixing_toward_uniform_scales_tv() {
        let m = TabularMdp::random(&mut Stream::new(11), 5, 3, 0.5);
        let unif = vec![vec![vec![0.2; 5]; 3]; 5];
        let eps = 0.3;
        let mixed = m.mixed_toward(&unif, eps);
        // per-row oracle: ε·tv(row, uniform)
        let mut expect: f64 = 0.0;
        for x in 0..5 {
            for u in 0..3 {
                let tv: f64 = m.kernel[x][u].iter().map(|p| (p - 0.2).abs()).sum();
                expect = expect.max(eps * tv);
            }
        }
        let got = kernel_tv_sup(&m, &mixed).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert_eq!(kernel_tv_sup(&m, &m).unwrap(), 0.0);
        assert_eq!(kernel_w1_sup(&m, &m).unwrap(), 0.0);
        // support of length 4
        assert!(kernel_w1_sup(&m, &mixed).unwrap() <= 4.0 / 2.0 * got + 1e-12);
    }

    #[test]
    fn incompatible_shapes() {
        let a = TabularMdp::random(&mut Stream::new(1), 3, 2, 0.5);
        let b = TabularMdp::random(&mut Stream::new(1), 4, 2, 0.5);
        assert!(matches!(kernel_tv_sup(&a, &b), Err(Error::Incompatible(_))));
    }

    #[test]
    fn identity_channel() {
        let m = two_by_two();
        let p = as_pomdp(&m);
        assert!(p.validate().is_empty());
        assert_eq!(p.n_obs(), 2);
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(p.obs_prob(x, y), if x == y { 1.0 } else { 0.0 });
            }
        }
        let single = TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![1.0]], 0.5, vec![1.0]).unwrap();
        assert_eq!(as_pomdp(&single).n_obs(), 1);
    }

    #[test]
    fn marginalizing_observations_recovers_kernel() {
        let m = TabularMdp::random(&mut Stream::new(5), 3, 2, 0.5);
        let p = as_pomdp(&m);
        for x in 0..3 {
            for u in 0..2 {
                for x2 in 0..3 {
                    let marg: f64 = (0..3).map(|y| p.mdp.kernel[x][u][x2] * p.obs_prob(x2, y)).sum();
                    assert_eq!(marg, m.kernel[x][u][x2]);
                }
            }
        }
    }
}
