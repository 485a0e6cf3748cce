//! Learning kernels from data and measuring what the estimate costs.
//!
//! * [`simulate`] / [`simulate_additive`] produce trajectories under an
//!   exploration rule.
//! * [`empirical_kernel`] counts transitions per `(x, u)`; unvisited cells get
//!   a fallback row and are flagged.
//! * [`recover_noise`] inverts a known additive drift, [`histogram_density`]
//!   smooths samples into a piecewise-constant density, and
//!   [`pushforward_kernel`] turns a noise law back into kernel cells.
//! * [`learning_curve`] designs against counting estimates of growing sample
//!   size and records the loss on the true model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measures::{Measure1D, Piece};
use crate::models::{AdditiveNoiseModel, KernelTable, TabularMdp, Validate};
use crate::rng::Stream;
use crate::robustness::{mismatch_loss_tabular, SLACK};
use crate::solvers::StationaryPolicy;
use crate::{Error, Result};

/// How actions are chosen while collecting data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exploration {
    /// `u_t` uniform on the action set, independent of the state.
    UniformRandom,
    /// A fixed stationary policy. For continuous states the policy is read on
    /// `policy.actions.len()` equal bins of the state interval.
    Policy(StationaryPolicy),
}

impl Exploration {
    pub fn id(&self) -> &'static str {
        match self {
            Self::UniformRandom => "uniform-random",
            Self::Policy(_) => "policy",
        }
    }

    fn choose(&self, rng: &mut Stream, n_actions: usize, bin: impl FnOnce(usize) -> usize) -> usize {
        match self {
            Self::UniformRandom => rng.index(n_actions),
            Self::Policy(p) => p.action(bin(p.actions.len())),
        }
    }
}

/// A tabular path `x_0, u_0, x_1, …, u_{N−1}, x_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub exploration: String,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Transition `i` as `(x_i, u_i, x_{i+1})`.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.actions
            .iter()
            .enumerate()
            .map(|(i, &u)| (self.states[i], u, self.states[i + 1]))
    }

    /// The first `n` transitions.
    pub fn prefix(&self, n: usize) -> Trajectory {
        let n = n.min(self.len());
        Trajectory {
            states: self.states[..=n].to_vec(),
            actions: self.actions[..n].to_vec(),
            exploration: self.exploration.clone(),
            seed: self.seed,
        }
    }
}

/// A real-valued path of an additive-noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousTrajectory {
    pub states: Vec<f64>,
    pub actions: Vec<usize>,
    pub exploration: String,
    pub seed: u64,
}

/// Run `steps` transitions of `m` starting from a draw of its prior.
pub fn simulate(m: &TabularMdp, exploration: &Exploration, steps: usize, rng: &mut Stream) -> Result<Trajectory> {
    m.ensure_valid()?;
    if let Exploration::Policy(p) = exploration {
        p.check(m)?;
    }
    let seed = rng.seed();
    let mut x = rng.categorical(&m.initial);
    let mut states = Vec::with_capacity(steps + 1);
    let mut actions = Vec::with_capacity(steps);
    states.push(x);
    for _ in 0..steps {
        let u = exploration.choose(rng, m.n_actions(), |_| x);
        x = rng.categorical(&m.kernel[x][u]);
        actions.push(u);
        states.push(x);
    }
    Ok(Trajectory {
        states,
        actions,
        exploration: exploration.id().into(),
        seed,
    })
}

/// Run `steps` transitions `x' = f(x, u) + w` from the model's initial state.
pub fn simulate_additive(
    m: &AdditiveNoiseModel,
    exploration: &Exploration,
    steps: usize,
    rng: &mut Stream,
) -> Result<ContinuousTrajectory> {
    m.ensure_valid()?;
    let na = m.actions.len();
    if let Exploration::Policy(p) = exploration {
        if p.actions.is_empty() || p.actions.iter().any(|&u| u >= na) {
            return Err(Error::InvalidParameter(format!(
                "exploration policy needs at least one bin and actions below {na}"
            )));
        }
    }
    let sampler = m.noise.sampler();
    let seed = rng.seed();
    let mut x = m.initial_state;
    let mut states = Vec::with_capacity(steps + 1);
    let mut actions = Vec::with_capacity(steps);
    states.push(x);
    for _ in 0..steps {
        let u = exploration.choose(rng, na, |bins| m.bin_of(x, bins));
        x = m.drift_at(x, u)? + sampler.draw(rng);
        actions.push(u);
        states.push(x);
    }
    Ok(ContinuousTrajectory {
        states,
        actions,
        exploration: exploration.id().into(),
        seed,
    })
}

/// Row used for `(x, u)` pairs the trajectory never visits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    Uniform,
    Row(Vec<f64>),
}

/// Count-ratio kernel estimate with per-cell visit information.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalKernel {
    /// `kernel[x][u][x']`
    pub kernel: Vec<Vec<Vec<f64>>>,
    /// Number of departures from each `(x, u)`.
    pub visits: Vec<Vec<usize>>,
}

impl EmpiricalKernel {
    pub fn visited(&self, x: usize, u: usize) -> bool {
        self.visits[x][u] > 0
    }

    pub fn unvisited_cells(&self) -> usize {
        self.visits.iter().flatten().filter(|&&c| c == 0).count()
    }
}

/// `T̂(x'|x,u) = #{x → x' under u} / #{x under u}`, with `fallback` on
/// unvisited cells.
pub fn empirical_kernel(
    tr: &Trajectory,
    n_states: usize,
    n_actions: usize,
    fallback: &Fallback,
) -> Result<EmpiricalKernel> {
    if tr.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let fill = match fallback {
        Fallback::Uniform => vec![1.0 / n_states as f64; n_states],
        Fallback::Row(r) if r.len() == n_states => r.clone(),
        Fallback::Row(r) => {
            return Err(Error::InvalidParameter(format!(
                "fallback row has {} entries, expected {n_states}",
                r.len()
            )))
        }
    };
    let mut counts = vec![vec![vec![0usize; n_states]; n_actions]; n_states];
    for (x, u, y) in tr.transitions() {
        if x >= n_states || y >= n_states || u >= n_actions {
            return Err(Error::InvalidParameter(format!(
                "transition ({x}, {u}, {y}) outside a {n_states}x{n_actions} model"
            )));
        }
        counts[x][u][y] += 1;
    }
    let visits: Vec<Vec<usize>> = counts
        .iter()
        .map(|row| row.iter().map(|c| c.iter().sum()).collect())
        .collect();
    let kernel = counts
        .iter()
        .zip(&visits)
        .map(|(row, v)| {
            row.iter()
                .zip(v)
                .map(|(c, &total)| {
                    if total == 0 {
                        fill.clone()
                    } else {
                        c.iter().map(|&k| k as f64 / total as f64).collect()
                    }
                })
                .collect()
        })
        .collect();
    Ok(EmpiricalKernel { kernel, visits })
}

/// Equal-mass atoms at `w_i = x_{i+1} − f(x_i, u_i)`.
pub fn recover_noise(tr: &ContinuousTrajectory, m: &AdditiveNoiseModel) -> Result<Measure1D> {
    if tr.actions.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let w = tr
        .actions
        .iter()
        .enumerate()
        .map(|(i, &u)| Ok(tr.states[i + 1] - m.drift_at(tr.states[i], u)?))
        .collect::<Result<Vec<_>>>()?;
    Measure1D::empirical(&w)
}

/// `⌈N^{1/3}⌉` clipped to `[5, 200]`.
pub fn default_bins(n_samples: usize) -> usize {
    ((n_samples as f64).cbrt().ceil() as usize).clamp(5, 200)
}

/// Histogram on equal bins `[e_i, e_{i+1})` of `[lo, hi]` (last bin closed),
/// normalized to a probability density. `bins = None` uses
/// [`default_bins`].
pub fn histogram_density(samples: &[f64], bins: Option<usize>, lo: f64, hi: f64) -> Result<Measure1D> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("histogram range [{lo}, {hi}] is not a bounded interval")));
    }
    let bins = bins.unwrap_or_else(|| default_bins(samples.len()));
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let h = (hi - lo) / bins as f64;
    let edge = |i: usize| if i == bins { hi } else { lo + i as f64 * h };
    let mut counts = vec![0usize; bins];
    for &s in samples {
        if !(lo..=hi).contains(&s) {
            return Err(Error::SampleOutOfRange { value: s, lo, hi });
        }
        let mut i = (((s - lo) / h).floor() as usize).min(bins - 1);
        // floating division can land one bin off near an edge
        if s < edge(i) {
            i -= 1;
        } else if i + 1 < bins && s >= edge(i + 1) {
            i += 1;
        }
        counts[i] += 1;
    }
    let n = samples.len() as f64;
    let pieces = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let (a, b) = (edge(i), edge(i + 1));
            Piece {
                lo: a,
                hi: b,
                height: c as f64 / n / (b - a),
            }
        })
        .collect();
    Measure1D::from_parts(Vec::new(), pieces)
}

/// Kernel cells `T(·|x, u) = noise(· − f(x, u))` on `state_grid`.
pub fn pushforward_kernel(noise: &Measure1D, m: &AdditiveNoiseModel, state_grid: &[f64]) -> Result<KernelTable> {
    m.kernel_table(noise, state_grid)
}

/// Kernel estimator used in a learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Count ratios on a tabular trajectory.
    Counting,
    /// Drift inversion on an additive-noise trajectory.
    NoiseInversion,
    /// Histogram of recovered noise.
    Histogram,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Self::Counting => "counting",
            Self::NoiseInversion => "noise-inversion",
            Self::Histogram => "histogram",
        }
    }
}

/// One `(N, seed)` point of a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub sup_tv: f64,
    pub sup_w1: Option<f64>,
    pub j_opt_true: f64,
    pub j_cross: f64,
    pub loss: f64,
    pub robustness_bound: f64,
    #[serde(with = "crate::robustness::bit")]
    pub bound_holds: bool,
    pub unvisited_cells: usize,
}

/// CSV header of [`LearningRecord`].
pub const LEARNING_COLUMNS: [&str; 11] = [
    "N",
    "seed",
    "estimator",
    "sup_tv",
    "sup_w1",
    "j_opt_true",
    "j_cross",
    "loss",
    "robustness_bound",
    "bound_holds",
    "unvisited_cells",
];

/// What to run in [`learning_curve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub estimator: Estimator,
    /// Strictly increasing sample sizes; each is a prefix of one long run.
    pub sample_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub exploration: Exploration,
    pub fallback: Fallback,
    pub tol: f64,
}

/// Records ordered by `(N, seed)` in the order of the spec's lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub estimator: Estimator,
    pub sample_sizes: Vec<usize>,
    pub records: Vec<LearningRecord>,
}

impl LearningCurve {
    /// Median loss per sample size (mean of the two middle values for an
    /// even count).
    pub fn median_losses(&self) -> Vec<(usize, f64)> {
        self.sample_sizes
            .iter()
            .map(|&n| {
                let losses: Vec<f64> = self.records.iter().filter(|r| r.n == n).map(|r| r.loss).collect();
                (n, median(&losses))
            })
            .collect()
    }

    /// Whether the median loss never increases from one sample size to the
    /// next.
    pub fn median_nonincreasing(&self) -> bool {
        self.median_losses().windows(2).all(|w| w[1].1 <= w[0].1)
    }

    pub fn all_bounds_hold(&self) -> bool {
        self.records.iter().all(|r| r.bound_holds)
    }
}

/// Median of a slice; NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile (type 7); NaN when empty.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}

/// For every seed, simulate `max N` steps of `truth` on the substream
/// `(master_seed, seed)`; for every `N`, estimate from the first `N`
/// transitions, design by value iteration and evaluate that policy on
/// `truth`.
pub fn learning_curve(truth: &TabularMdp, spec: &CurveSpec, master_seed: u64) -> Result<LearningCurve> {
    if spec.estimator != Estimator::Counting {
        return Err(Error::Incompatible(format!(
            "estimator '{}' needs an additive-noise model; tabular curves use counting",
            spec.estimator.name()
        )));
    }
    if spec.sample_sizes.is_empty() || spec.seeds.is_empty() {
        return Err(Error::InvalidParameter("sample sizes and seeds must be nonempty".into()));
    }
    if spec.sample_sizes[0] == 0 || spec.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sample sizes must be positive and strictly increasing".into()));
    }
    let n_max = *spec.sample_sizes.last().expect("nonempty");
    let runs = spec
        .seeds
        .par_iter()
        .map(|&seed| simulate(truth, &spec.exploration, n_max, &mut Stream::substream(master_seed, seed)))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = spec
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..spec.seeds.len()).map(move |s| (n, s)))
        .collect();
    let records = tasks
        .into_par_iter()
        .map(|(n, s)| {
            let est = empirical_kernel(&runs[s].prefix(n), truth.n_states(), truth.n_actions(), &spec.fallback)?;
            let design = truth.with_kernel(est.kernel.clone());
            let r = mismatch_loss_tabular(truth, &design, spec.tol)?;
            Ok(LearningRecord {
                n,
                seed: spec.seeds[s],
                estimator: spec.estimator,
                sup_tv: r.kernel_tv_sup,
                sup_w1: r.kernel_w1_sup,
                j_opt_true: r.j_opt_true,
                j_cross: r.j_cross,
                loss: r.loss,
                robustness_bound: r.robustness_bound,
                bound_holds: r.loss <= r.robustness_bound + SLACK * spec.tol,
                unvisited_cells: est.unvisited_cells(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LearningCurve {
        estimator: spec.estimator,
        sample_sizes: spec.sample_sizes.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::clipped_shift;
    use crate::models::{kernel_tv_sup, kernel_w1_sup, KernelModel, Metric};
    use approx::assert_abs_diff_eq;

    fn cycle(n: usize) -> TabularMdp {
        let kernel = (0..n)
            .map(|x| {
                let mut row = vec![0.0; n];
                row[(x + 1) % n] = 1.0;
                vec![row]
            })
            .collect();
        let mut init = vec![0.0; n];
        init[0] = 1.0;
        TabularMdp::new(kernel, vec![vec![0.0]; n], 0.5, init).unwrap()
    }

    fn uniform_noise_model() -> AdditiveNoiseModel {
        let drift = [0.0, 0.5, 1.0]
            .iter()
            .map(|&u| clipped_shift(0.0, 2.0, u, 0.0, 1.0).unwrap())
            .collect();
        AdditiveNoiseModel::new(0.0, 2.0, vec![0.0, 0.5, 1.0], drift, Measure1D::uniform(0.0, 1.0).unwrap())
    }

    #[test]
    fn deterministic_cycle_is_followed_exactly() {
        let tr = simulate(&cycle(4), &Exploration::UniformRandom, 9, &mut Stream::new(1)).unwrap();
        assert_eq!(tr.states, vec![0, 1, 2, 3, 0, 1, 2, 3, 0, 1]);
        assert_eq!(tr.len(), 9);
    }

    #[test]
    fn simulation_is_seeded() {
        let m = TabularMdp::random(&mut Stream::new(5), 5, 3, 0.5);
        let a = simulate(&m, &Exploration::UniformRandom, 500, &mut Stream::new(9)).unwrap();
        let b = simulate(&m, &Exploration::UniformRandom, 500, &mut Stream::new(9)).unwrap();
        let c = simulate(&m, &Exploration::UniformRandom, 500, &mut Stream::new(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn policy_exploration_uses_the_policy() {
        let m = TabularMdp::random(&mut Stream::new(5), 3, 2, 0.5);
        let pi = StationaryPolicy::new(vec![1, 0, 1]);
        let tr = simulate(&m, &Exploration::Policy(pi.clone()), 200, &mut Stream::new(2)).unwrap();
        assert!(tr.transitions().all(|(x, u, _)| u == pi.action(x)));
    }

    #[test]
    fn counting_matches_hand_count() {
        // (0, 0) visited four times with successors 1, 1, 2, 1
        let tr = Trajectory {
            states: vec![0, 1, 0, 1, 0, 2, 0, 1],
            actions: vec![0, 1, 0, 1, 0, 1, 0],
            exploration: "manual".into(),
            seed: 0,
        };
        let est = empirical_kernel(&tr, 3, 2, &Fallback::Uniform).unwrap();
        assert_eq!(est.kernel[0][0], vec![0.0, 0.75, 0.25]);
        assert_eq!(est.visits[0][0], 4);
        assert!(!est.visited(0, 1));
        assert_eq!(est.kernel[0][1], vec![1.0 / 3.0; 3]);
        assert_eq!(est.unvisited_cells(), 6 - 3);
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let tr = Trajectory {
            states: vec![0],
            actions: vec![],
            exploration: "manual".into(),
            seed: 0,
        };
        assert!(matches!(empirical_kernel(&tr, 2, 2, &Fallback::Uniform), Err(Error::EmptyTrajectory)));
    }

    #[test]
    fn long_uniform_exploration_learns_the_kernel() {
        let m = TabularMdp::random(&mut Stream::new(11), 5, 3, 0.5);
        let tr = simulate(&m, &Exploration::UniformRandom, 100_000, &mut Stream::new(12)).unwrap();
        let est = empirical_kernel(&tr, 5, 3, &Fallback::Uniform).unwrap();
        assert_eq!(est.unvisited_cells(), 0);
        for row in est.kernel.iter().flatten() {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        let learned = m.with_kernel(est.kernel);
        assert!(kernel_tv_sup(&learned, &m).unwrap() <= 0.05);
    }

    #[test]
    fn noiseless_recovery_is_a_point_mass_at_zero() {
        let m = uniform_noise_model().with_noise(Measure1D::dirac(0.0));
        let tr = simulate_additive(&m, &Exploration::UniformRandom, 50, &mut Stream::new(3)).unwrap();
        assert_eq!(recover_noise(&tr, &m).unwrap(), Measure1D::dirac(0.0));
    }

    #[test]
    fn recovered_noise_converges_in_w1() {
        let m = uniform_noise_model();
        let tr = simulate_additive(&m, &Exploration::UniformRandom, 10_000, &mut Stream::new(4)).unwrap();
        assert!(tr.states.iter().all(|x| (0.0..=2.0).contains(x)));
        let mu = recover_noise(&tr, &m).unwrap();
        assert_abs_diff_eq!(mu.total_mass(), 1.0, epsilon = 1e-12);
        assert_eq!(mu.atoms().len(), 10_000);
        assert!(mu.w1_distance(&m.noise).unwrap() <= 0.02);
    }

    #[test]
    fn histogram_of_a_point_fills_one_bin() {
        let h = histogram_density(&[0.35; 7], Some(10), 0.0, 1.0).unwrap();
        assert_eq!(h.pieces().len(), 1);
        let p = h.pieces()[0];
        assert_abs_diff_eq!(p.lo, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn histogram_edges_and_errors() {
        let h = histogram_density(&[0.0, 0.5, 1.0, 1.0], Some(2), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(h.mass_in(&crate::Interval::half_open(0.0, 0.5)), 0.25, epsilon = 1e-15);
        assert!(matches!(histogram_density(&[], None, 0.0, 1.0), Err(Error::EmptySamples)));
        assert!(matches!(
            histogram_density(&[1.5], None, 0.0, 1.0),
            Err(Error::SampleOutOfRange { .. })
        ));
        assert_eq!(default_bins(10), 5);
        assert_eq!(default_bins(1000), 10);
        assert_eq!(default_bins(100_000_000), 200);
    }

    #[test]
    fn histogram_converges_in_tv() {
        let mut rng = Stream::new(6);
        let samples: Vec<f64> = (0..100_000).map(|_| rng.unit()).collect();
        let h = histogram_density(&samples, Some(20), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(h.total_mass(), 1.0, epsilon = 1e-12);
        assert!(h.tv_distance(&Measure1D::uniform(0.0, 1.0).unwrap()).unwrap() <= 0.05);
    }

    #[test]
    fn pushforward_of_dirac_is_the_drift() {
        let m = uniform_noise_model();
        let t = pushforward_kernel(&Measure1D::dirac(0.0), &m, &[0.2, 1.7]).unwrap();
        assert_eq!(t.cells[0][1], Measure1D::dirac(0.7));
        assert_eq!(t.cells[1][2], Measure1D::dirac(1.0));
    }

    #[test]
    fn pushforward_distances_equal_noise_distances() {
        let m = uniform_noise_model();
        let grid: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
        let truth = Measure1D::uniform(0.0, 1.0).unwrap();
        let mut rng = Stream::new(8);
        let samples: Vec<f64> = (0..2000).map(|_| rng.unit()).collect();
        let est = histogram_density(&samples, None, 0.0, 1.0).unwrap();
        let a = pushforward_kernel(&truth, &m, &grid).unwrap();
        let b = pushforward_kernel(&est, &m, &grid).unwrap();
        let tv = est.tv_distance(&truth).unwrap();
        let w1 = est.w1_distance(&truth).unwrap();
        assert_abs_diff_eq!(a.kernel_sup(&b, Metric::TotalVariation).unwrap(), tv, epsilon = 1e-12);
        assert_abs_diff_eq!(a.kernel_sup(&b, Metric::Wasserstein1).unwrap(), w1, epsilon = 1e-12);
    }

    #[test]
    fn discretized_pushforward_equals_counting_on_shifted_data() {
        // Counting the synthetic transitions m_i → f(m_i, u) + w_k over every
        // recovered w_k reproduces the discretized pushforward of the
        // recovered noise, up to its renormalization defect.
        let m = uniform_noise_model();
        let tr = simulate_additive(&m, &Exploration::UniformRandom, 300, &mut Stream::new(21)).unwrap();
        let mu = recover_noise(&tr, &m).unwrap();
        let bins = 8;
        let d = m.with_noise(mu.clone()).discretize(bins).unwrap();
        let mids: Vec<f64> = d.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
        for (i, &x) in mids.iter().enumerate() {
            for u in 0..m.actions.len() {
                let mut counts = vec![0.0; bins];
                for a in mu.atoms() {
                    let y = m.drift_at(x, u).unwrap() + a.loc;
                    counts[m.bin_of(y, bins)] += a.mass;
                }
                for j in 0..bins {
                    assert_abs_diff_eq!(d.mdp.kernel[i][u][j], counts[j], epsilon = d.defect + 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic_model_is_learned_exactly() {
        let m = cycle(2);
        let spec = CurveSpec {
            estimator: Estimator::Counting,
            sample_sizes: vec![10, 100],
            seeds: vec![1, 2],
            exploration: Exploration::UniformRandom,
            fallback: Fallback::Uniform,
            tol: 1e-9,
        };
        let curve = learning_curve(&m, &spec, 0).unwrap();
        assert_eq!(curve.records.len(), 4);
        for r in &curve.records {
            assert!(r.loss <= 2e-9);
            assert_eq!(r.sup_tv, 0.0);
            assert_eq!(r.unvisited_cells, 0);
        }
    }

    #[test]
    fn curve_rejects_bad_specs() {
        let m = cycle(2);
        let mut spec = CurveSpec {
            estimator: Estimator::Histogram,
            sample_sizes: vec![10, 100],
            seeds: vec![1],
            exploration: Exploration::UniformRandom,
            fallback: Fallback::Uniform,
            tol: 1e-9,
        };
        assert!(matches!(learning_curve(&m, &spec, 0), Err(Error::Incompatible(_))));
        spec.estimator = Estimator::Counting;
        spec.sample_sizes = vec![100, 100];
        assert!(matches!(learning_curve(&m, &spec, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn curve_records_respect_the_bound_and_csv_header() {
        let m = TabularMdp::random(&mut Stream::new(30), 4, 2, 0.5);
        let spec = CurveSpec {
            estimator: Estimator::Counting,
            sample_sizes: vec![50, 500, 5000],
            seeds: (0..6).collect(),
            exploration: Exploration::UniformRandom,
            fallback: Fallback::Uniform,
            tol: 1e-9,
        };
        let curve = learning_curve(&m, &spec, 7).unwrap();
        assert!(curve.all_bounds_hold());
        assert_eq!(curve, learning_curve(&m, &spec, 7).unwrap());
        assert!(curve.records.iter().all(|r| r.sup_w1.is_some()));
        let w1 = kernel_w1_sup(&m, &m).unwrap();
        assert_eq!(w1, 0.0);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&curve.records[0]).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), LEARNING_COLUMNS.join(","));
    }

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
        assert!(median(&[]).is_nan());
    }
}
