use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{
    CorpusParams, ExperimentConfig, ExperimentKind, ExperimentSpec, GalleryParams, LearnParams, StrategicParams,
    SupGapParams, CONFIG_VERSION,
};
use crate::gallery::GalleryKind;
use crate::learning::{learning_curve, CurveSpec, Estimator, LearningRecord};
use crate::models::TabularMdp;
use crate::rng::{substream_seed, Stream};
use crate::robustness::{
    bounds_corpus, mismatch_loss_gallery, policy_sup_gap, random_pomdp_pair, strategic_tv, MismatchRecord,
};
use crate::solvers::{solve_pomdp_belief_tree, HistoryPolicy};
use crate::{Error, Result};

/// Version of the result-file layout recorded in every manifest.
pub const RESULT_FORMAT_VERSION: u32 = 1;

/// Allowed distance between a computed gallery value and its exact closed
/// form, on top of the certified truncation error.
pub const GALLERY_MATCH_TOL: f64 = 1e-9;

/// Command-line overrides of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: usize,
    pub sha256: String,
}

/// Written last, as `manifest.json`, next to the result files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config_version: u32,
    pub crate_name: String,
    pub crate_version: String,
    pub kind: ExperimentKind,
    pub config_sha256: String,
    pub master_seed: u64,
    /// How per-task generators derive from the master seed.
    pub substreams: String,
    pub tasks: usize,
    pub violations: usize,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

impl RunReport {
    /// `0` on success, `2` when `check` is set and some row violates its
    /// bound.
    pub fn exit_code(&self, check: bool) -> i32 {
        if check && self.manifest.violations > 0 {
            2
        } else {
            0
        }
    }
}

/// One gallery entry at one `(n, β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryRow {
    pub entry: GalleryKind,
    pub n: usize,
    pub beta: f64,
    pub kernel_tv_sup: f64,
    pub kernel_w1_sup: Option<f64>,
    pub j_design: f64,
    pub j_true: f64,
    pub j_cross: f64,
    pub continuity_gap: f64,
    pub loss: f64,
    pub exact_design: f64,
    pub exact_true: f64,
    pub exact_cross: f64,
    pub published_design: Option<f64>,
    pub published_true: Option<f64>,
    pub published_cross: Option<f64>,
    pub error_bound: f64,
    pub robustness_bound: f64,
    #[serde(with = "crate::robustness::bit")]
    pub matches_exact: bool,
    #[serde(with = "crate::robustness::bit")]
    pub bound_holds: bool,
}

/// Strategic TV of one pair at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategicRow {
    pub pair: usize,
    pub k: usize,
    pub exact: f64,
    pub sup_tv: f64,
    pub bound: f64,
    pub paths: u64,
    #[serde(with = "crate::robustness::bit")]
    pub holds: bool,
    /// `exact` is at least the previous horizon's value.
    #[serde(with = "crate::robustness::bit")]
    pub nondecreasing: bool,
}

/// Sup-over-policies gap of one pair at one mixing weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupGapRow {
    pub pair: usize,
    pub eps: f64,
    pub horizon: usize,
    pub policies: u64,
    pub gap: f64,
    /// `|J*₁ − J*₂|` from belief-tree solves.
    pub value_gap: f64,
    pub tail: f64,
    /// Sum of the two solves' certified errors.
    pub value_error: f64,
    /// `value_gap − 2·tail − value_error`
    pub lower_bound: f64,
    #[serde(with = "crate::robustness::bit")]
    pub holds: bool,
    /// `gap` is at most the previous (larger) mixing weight's gap.
    #[serde(with = "crate::robustness::bit")]
    pub shrinking: bool,
}

/// Load a config file and run it.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunReport> {
    run(&ExperimentConfig::load(path)?, opts)
}

/// Run an experiment and write `<stem>.csv`, `<stem>.jsonl` and
/// `manifest.json` into the output directory. Each file is written to a
/// temporary name and renamed into place.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let output = pool.install(|| execute(&cfg))?;

    fs::create_dir_all(&cfg.output_dir)?;
    let stem = cfg.kind().stem();
    let files = vec![
        write_atomic(&cfg.output_dir, &format!("{stem}.csv"), &output.csv, output.rows)?,
        write_atomic(&cfg.output_dir, &format!("{stem}.jsonl"), &output.jsonl, output.rows)?,
    ];
    let manifest = Manifest {
        format_version: RESULT_FORMAT_VERSION,
        config_version: CONFIG_VERSION,
        crate_name: env!("CARGO_PKG_NAME").into(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind(),
        config_sha256: cfg.fingerprint()?,
        master_seed: cfg.seed,
        substreams: "splitmix64 seeded with mix64(master ^ mix64(task + 0x9E3779B97F4A7C15))".into(),
        tasks: output.tasks,
        violations: output.violations,
        files,
    };
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    write_atomic(&cfg.output_dir, "manifest.json", &text, 1)?;
    Ok(RunReport {
        output_dir: cfg.output_dir,
        manifest,
    })
}

/// Write `bytes` to `dir/name` via a temporary file and a rename.
pub(crate) fn write_atomic(dir: &Path, name: &str, bytes: &[u8], rows: usize) -> Result<FileEntry> {
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))?;
    Ok(FileEntry {
        name: name.into(),
        rows,
        sha256: hex::encode(Sha256::digest(bytes)),
    })
}

struct Output {
    csv: Vec<u8>,
    jsonl: Vec<u8>,
    rows: usize,
    tasks: usize,
    violations: usize,
}

fn encode<T: Serialize>(rows: &[T], tasks: usize, violations: usize) -> Result<Output> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let csv = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let mut jsonl = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut jsonl, r)?;
        jsonl.push(b'\n');
    }
    Ok(Output {
        csv,
        jsonl,
        rows: rows.len(),
        tasks,
        violations,
    })
}

fn execute(cfg: &ExperimentConfig) -> Result<Output> {
    match &cfg.experiment {
        ExperimentSpec::Gallery(p) => {
            let rows = gallery_rows(p, cfg.tol)?;
            let bad = rows.iter().filter(|r| !(r.matches_exact && r.bound_holds)).count();
            encode(&rows, rows.len(), bad)
        }
        ExperimentSpec::BoundsCorpus(p) => {
            let rows = corpus_rows(p, cfg.tol, cfg.seed)?;
            let bad = rows.iter().filter(|r| !(r.bound_holds && r.continuity_holds)).count();
            encode(&rows, p.pairs, bad)
        }
        ExperimentSpec::Strategic(p) => {
            let rows = strategic_rows(p, cfg.seed)?;
            let bad = rows.iter().filter(|r| !(r.holds && r.nondecreasing)).count();
            encode(&rows, p.pairs, bad)
        }
        ExperimentSpec::SupGap(p) => {
            let rows = sup_gap_rows(p, cfg.seed)?;
            let bad = rows.iter().filter(|r| !(r.holds && r.shrinking)).count();
            encode(&rows, p.pairs, bad)
        }
        ExperimentSpec::Learn(p) => {
            let rows = learn_rows(p, cfg.tol, cfg.seed)?;
            let bad = rows.iter().filter(|r| !r.bound_holds).count();
            encode(&rows, p.seeds.len(), bad)
        }
    }
}

/// Rows ordered by entry, then `β`, then `n`.
pub fn gallery_rows(p: &GalleryParams, tol: f64) -> Result<Vec<GalleryRow>> {
    let tasks: Vec<(GalleryKind, f64, usize)> = p
        .entries
        .iter()
        .flat_map(|&k| p.betas.iter().flat_map(move |&b| p.n.iter().map(move |&n| (k, b, n))))
        .collect();
    tasks
        .into_par_iter()
        .map(|(kind, beta, n)| {
            let entry = kind.make(n)?.with_discount(beta);
            let r = mismatch_loss_gallery(&entry, tol)?;
            let exact = kind.closed_form_exact(beta, n);
            let published = kind.closed_form_paper(beta, n);
            let (ed, et, ec) = (
                exact.design_optimal.expect("exact forms are complete"),
                exact.true_optimal.expect("exact forms are complete"),
                exact.cross.expect("exact forms are complete"),
            );
            let close = |a: f64, b: f64| (a - b).abs() <= GALLERY_MATCH_TOL + r.error_bound;
            Ok(GalleryRow {
                entry: kind,
                n,
                beta,
                kernel_tv_sup: r.kernel_tv_sup,
                kernel_w1_sup: r.kernel_w1_sup,
                j_design: r.j_opt_design,
                j_true: r.j_opt_true,
                j_cross: r.j_cross,
                continuity_gap: (r.j_opt_design - r.j_opt_true).abs(),
                loss: r.loss,
                exact_design: ed,
                exact_true: et,
                exact_cross: ec,
                published_design: published.design_optimal,
                published_true: published.true_optimal,
                published_cross: published.cross,
                error_bound: r.error_bound,
                robustness_bound: r.robustness_bound,
                matches_exact: close(r.j_opt_design, ed) && close(r.j_opt_true, et) && close(r.j_cross, ec),
                bound_holds: r.bound_holds,
            })
        })
        .collect()
}

pub fn corpus_rows(p: &CorpusParams, tol: f64, seed: u64) -> Result<Vec<MismatchRecord>> {
    bounds_corpus(&p.spec(tol), seed)
}

/// Pair `i` and its policy come from substream `i`; rows are ordered by
/// pair, then horizon.
pub fn strategic_rows(p: &StrategicParams, seed: u64) -> Result<Vec<StrategicRow>> {
    let depth = p.horizons.iter().copied().max().unwrap_or(0);
    let per_pair = (0..p.pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::substream(seed, i as u64);
            let (a, b) = random_pomdp_pair(&mut rng, p.states, p.actions, p.observations, p.eps, p.beta);
            let policy = HistoryPolicy::from_fn(p.observations, depth, |_| rng.index(p.actions));
            let mut last = f64::NEG_INFINITY;
            p.horizons
                .iter()
                .map(|&k| {
                    let s = strategic_tv(&a, &b, &policy, k, p.budget)?;
                    let row = StrategicRow {
                        pair: i,
                        k,
                        exact: s.exact,
                        sup_tv: s.sup_tv,
                        bound: s.bound,
                        paths: s.paths,
                        holds: s.holds,
                        nondecreasing: s.exact >= last - 1e-12,
                    };
                    last = s.exact;
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_pair.into_iter().flatten().collect())
}

/// Pair `i` mixes one random model toward one random target with every
/// weight of the sequence; rows are ordered by pair, then weight.
pub fn sup_gap_rows(p: &SupGapParams, seed: u64) -> Result<Vec<SupGapRow>> {
    let per_pair = (0..p.pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::substream(seed, i as u64);
            let (base, far) = random_pomdp_pair(&mut rng, p.states, p.actions, p.observations, 1.0, p.beta);
            let s_base = solve_pomdp_belief_tree(&base, p.value_tol)?;
            let mut last = f64::INFINITY;
            p.eps
                .iter()
                .map(|&eps| {
                    let other = base.with_kernel(base.mdp.mixed_toward(&far.mdp.kernel, eps).kernel);
                    let g = policy_sup_gap(&base, &other, p.horizon, p.budget)?;
                    let s_other = solve_pomdp_belief_tree(&other, p.value_tol)?;
                    let value_gap = (s_base.value - s_other.value).abs();
                    let value_error = s_base.error_bound + s_other.error_bound;
                    let lower_bound = value_gap - 2.0 * g.tail - value_error;
                    let row = SupGapRow {
                        pair: i,
                        eps,
                        horizon: p.horizon,
                        policies: g.policies,
                        gap: g.gap,
                        value_gap,
                        tail: g.tail,
                        value_error,
                        lower_bound,
                        holds: g.gap >= lower_bound,
                        shrinking: g.gap <= last + 1e-12,
                    };
                    last = g.gap;
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_pair.into_iter().flatten().collect())
}

/// Task id of the substream that draws the true model of a learning run.
const LEARN_MODEL_TASK: u64 = 0;
/// Task id whose substream seed becomes the master of the curve's seeds.
const LEARN_CURVE_TASK: u64 = 1;

/// The random true model a learn experiment uses for `seed`.
pub fn learn_model(p: &LearnParams, seed: u64) -> TabularMdp {
    TabularMdp::random(&mut Stream::substream(seed, LEARN_MODEL_TASK), p.states, p.actions, p.beta)
}

pub fn learn_rows(p: &LearnParams, tol: f64, seed: u64) -> Result<Vec<LearningRecord>> {
    let truth = learn_model(p, seed);
    let spec = CurveSpec {
        estimator: Estimator::Counting,
        sample_sizes: p.sample_sizes.clone(),
        seeds: p.seeds.clone(),
        exploration: p.exploration.clone(),
        fallback: p.fallback.clone(),
        tol,
    };
    Ok(learning_curve(&truth, &spec, substream_seed(seed, LEARN_CURVE_TASK))?.records)
}
