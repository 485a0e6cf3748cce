use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gallery::GalleryKind;
use crate::learning::{Exploration, Fallback};
use crate::robustness::{CorpusSpec, STRATEGIC_BUDGET, SUP_GAP_BUDGET};
use crate::{Error, Result};

/// Version accepted in the `version` field of a config file.
pub const CONFIG_VERSION: u32 = 1;

/// A complete experiment definition. Everything random derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Solver tolerance for value iteration and truncated evaluation.
    pub tol: f64,
    pub experiment: ExperimentSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Gallery,
    BoundsCorpus,
    Strategic,
    SupGap,
    Learn,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        Self::Gallery,
        Self::BoundsCorpus,
        Self::Strategic,
        Self::SupGap,
        Self::Learn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gallery => "gallery",
            Self::BoundsCorpus => "bounds-corpus",
            Self::Strategic => "strategic",
            Self::SupGap => "sup-gap",
            Self::Learn => "learn",
        }
    }

    /// Stem of the result files (`<stem>.csv`, `<stem>.jsonl`).
    pub fn stem(self) -> &'static str {
        match self {
            Self::Gallery => "gallery",
            Self::BoundsCorpus => "bounds",
            Self::Strategic => "strategic",
            Self::SupGap => "supgap",
            Self::Learn => "learning",
        }
    }
}

/// Kind-specific parameters, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    Gallery(GalleryParams),
    BoundsCorpus(CorpusParams),
    Strategic(StrategicParams),
    SupGap(SupGapParams),
    Learn(LearnParams),
}

impl ExperimentSpec {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Self::Gallery(_) => ExperimentKind::Gallery,
            Self::BoundsCorpus(_) => ExperimentKind::BoundsCorpus,
            Self::Strategic(_) => ExperimentKind::Strategic,
            Self::SupGap(_) => ExperimentKind::SupGap,
            Self::Learn(_) => ExperimentKind::Learn,
        }
    }

    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Gallery => Self::Gallery(GalleryParams::default()),
            ExperimentKind::BoundsCorpus => Self::BoundsCorpus(CorpusParams::default()),
            ExperimentKind::Strategic => Self::Strategic(StrategicParams::default()),
            ExperimentKind::SupGap => Self::SupGap(SupGapParams::default()),
            ExperimentKind::Learn => Self::Learn(LearnParams::default()),
        }
    }
}

/// Evaluate gallery entries on an `n × β` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalleryParams {
    #[serde(default = "all_entries")]
    pub entries: Vec<GalleryKind>,
    pub n: Vec<usize>,
    pub betas: Vec<f64>,
}

fn all_entries() -> Vec<GalleryKind> {
    GalleryKind::ALL.to_vec()
}

impl Default for GalleryParams {
    fn default() -> Self {
        Self {
            entries: all_entries(),
            n: vec![4, 10, 100],
            betas: vec![0.5],
        }
    }
}

/// Random tabular pairs built by convex mixing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusParams {
    pub pairs: usize,
    pub eps: Vec<f64>,
    pub betas: Vec<f64>,
    pub max_states: usize,
    pub max_actions: usize,
}

impl Default for CorpusParams {
    fn default() -> Self {
        let d = CorpusSpec::default();
        Self {
            pairs: d.pairs,
            eps: d.eps,
            betas: d.betas,
            max_states: d.max_states,
            max_actions: d.max_actions,
        }
    }
}

impl CorpusParams {
    pub fn spec(&self, tol: f64) -> CorpusSpec {
        CorpusSpec {
            pairs: self.pairs,
            eps: self.eps.clone(),
            betas: self.betas.clone(),
            max_states: self.max_states,
            max_actions: self.max_actions,
            tol,
        }
    }
}

/// Exact strategic-measure TV on random POMDP pairs under random history
/// policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategicParams {
    pub pairs: usize,
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub horizons: Vec<usize>,
    pub eps: f64,
    pub beta: f64,
    #[serde(default = "strategic_budget")]
    pub budget: u64,
}

fn strategic_budget() -> u64 {
    STRATEGIC_BUDGET
}

impl Default for StrategicParams {
    fn default() -> Self {
        Self {
            pairs: 100,
            states: 3,
            actions: 2,
            observations: 2,
            horizons: vec![1, 2, 3, 4],
            eps: 0.2,
            beta: 0.5,
            budget: STRATEGIC_BUDGET,
        }
    }
}

/// Sup-over-policies gap along a mixing sequence `ε₁ > ε₂ > …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupGapParams {
    pub pairs: usize,
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub horizon: usize,
    pub eps: Vec<f64>,
    pub beta: f64,
    #[serde(default = "sup_gap_budget")]
    pub budget: u64,
    /// Tolerance of the belief-tree solves for `J*`; the tree grows
    /// exponentially in the horizon this implies, so it is kept separate
    /// from the global `tol`.
    pub value_tol: f64,
}

fn sup_gap_budget() -> u64 {
    SUP_GAP_BUDGET
}

impl Default for SupGapParams {
    fn default() -> Self {
        Self {
            pairs: 10,
            states: 3,
            actions: 2,
            observations: 2,
            horizon: 2,
            eps: vec![0.4, 0.2, 0.1, 0.05, 0.0],
            beta: 0.5,
            budget: SUP_GAP_BUDGET,
            value_tol: 1e-2,
        }
    }
}

/// Learning curve on a random tabular model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnParams {
    pub states: usize,
    pub actions: usize,
    pub beta: f64,
    pub sample_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "uniform_random")]
    pub exploration: Exploration,
    #[serde(default)]
    pub fallback: Fallback,
}

fn uniform_random() -> Exploration {
    Exploration::UniformRandom
}

impl Default for LearnParams {
    fn default() -> Self {
        Self {
            states: 5,
            actions: 3,
            beta: 0.5,
            sample_sizes: vec![100, 1_000, 10_000, 100_000],
            seeds: (0..20).collect(),
            exploration: Exploration::UniformRandom,
            fallback: Fallback::Uniform,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}

fn nonempty<T>(field: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(invalid(field, "must be nonempty"));
    }
    Ok(())
}

fn discount(field: &str, b: f64) -> Result<()> {
    if !(b > 0.0 && b < 1.0) {
        return Err(invalid(field, format!("discount {b} is not in (0, 1)")));
    }
    Ok(())
}

fn mixing(field: &str, e: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&e) {
        return Err(invalid(field, format!("mixing weight {e} is not in [0, 1]")));
    }
    Ok(())
}

fn at_least(field: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(invalid(field, format!("{v} is below the minimum {min}")));
    }
    Ok(())
}

/// First backtick-quoted token of a serde message, e.g. the field in
/// "missing field `seed`".
fn quoted(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

impl ExperimentConfig {
    pub fn new(seed: u64, output_dir: impl Into<PathBuf>, experiment: ExperimentSpec) -> Self {
        Self {
            version: CONFIG_VERSION,
            seed,
            output_dir: output_dir.into(),
            tol: 1e-9,
            experiment,
        }
    }

    /// Parse and validate.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            invalid(quoted(&msg).unwrap_or("config"), msg.clone())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind()
    }

    /// SHA-256 of everything that determines the results: the config without
    /// its output directory.
    pub fn fingerprint(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output_dir");
        }
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&v)?)))
    }

    /// Check every field; the error names the first offending one.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(
                "version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.version),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid("tol", format!("{} is not a positive tolerance", self.tol)));
        }
        match &self.experiment {
            ExperimentSpec::Gallery(p) => {
                nonempty("experiment.entries", &p.entries)?;
                nonempty("experiment.n", &p.n)?;
                nonempty("experiment.betas", &p.betas)?;
                for &b in &p.betas {
                    discount("experiment.betas", b)?;
                }
                let setwise = p
                    .entries
                    .iter()
                    .any(|k| matches!(k, GalleryKind::SetwiseCont | GalleryKind::SetwiseRobust));
                for &n in &p.n {
                    at_least("experiment.n", n, 2)?;
                    if setwise && n % 2 != 0 {
                        return Err(invalid("experiment.n", format!("setwise entries need even n, got {n}")));
                    }
                }
            }
            ExperimentSpec::BoundsCorpus(p) => {
                at_least("experiment.pairs", p.pairs, 1)?;
                nonempty("experiment.eps", &p.eps)?;
                nonempty("experiment.betas", &p.betas)?;
                for &e in &p.eps {
                    mixing("experiment.eps", e)?;
                }
                for &b in &p.betas {
                    discount("experiment.betas", b)?;
                }
                at_least("experiment.max_states", p.max_states, 2)?;
                at_least("experiment.max_actions", p.max_actions, 2)?;
            }
            ExperimentSpec::Strategic(p) => {
                at_least("experiment.pairs", p.pairs, 1)?;
                at_least("experiment.states", p.states, 1)?;
                at_least("experiment.actions", p.actions, 1)?;
                at_least("experiment.observations", p.observations, 1)?;
                nonempty("experiment.horizons", &p.horizons)?;
                mixing("experiment.eps", p.eps)?;
                discount("experiment.beta", p.beta)?;
            }
            ExperimentSpec::SupGap(p) => {
                at_least("experiment.pairs", p.pairs, 1)?;
                at_least("experiment.states", p.states, 1)?;
                at_least("experiment.actions", p.actions, 1)?;
                at_least("experiment.observations", p.observations, 1)?;
                nonempty("experiment.eps", &p.eps)?;
                for &e in &p.eps {
                    mixing("experiment.eps", e)?;
                }
                if p.eps.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(invalid("experiment.eps", "mixing sequence must be strictly decreasing"));
                }
                discount("experiment.beta", p.beta)?;
                if !(p.value_tol > 0.0 && p.value_tol.is_finite()) {
                    return Err(invalid("experiment.value_tol", "must be a positive tolerance"));
                }
            }
            ExperimentSpec::Learn(p) => {
                at_least("experiment.states", p.states, 1)?;
                at_least("experiment.actions", p.actions, 1)?;
                discount("experiment.beta", p.beta)?;
                nonempty("experiment.sample_sizes", &p.sample_sizes)?;
                nonempty("experiment.seeds", &p.seeds)?;
                if p.sample_sizes[0] == 0 || p.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid(
                        "experiment.sample_sizes",
                        "must be positive and strictly increasing",
                    ));
                }
                if let Fallback::Row(r) = &p.fallback {
                    if r.len() != p.states {
                        return Err(invalid("experiment.fallback", format!("row needs {} entries", p.states)));
                    }
                }
            }
        }
        Ok(())
    }
}
