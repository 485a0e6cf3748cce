use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentKind;
use super::run::{write_atomic, Manifest};
use crate::gallery::GalleryKind;
use crate::learning::{median, quantile};
use crate::{Error, Result};

/// Files written by [`plotdata`] and any warnings raised on the way.
#[derive(Debug, Clone, Default)]
pub struct PlotReport {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// A CSV result file with columns looked up by name.
struct Table {
    headers: csv::StringRecord,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { headers, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    }

    fn require(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.col(n)).collect()
    }
}

fn num(rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let s = &rec[i];
    s.parse().map_err(|_| Error::InvalidParameter(format!("`{s}` is not a number")))
}

/// One whitespace-separated series with a `#` header line.
struct Series {
    name: String,
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

impl Series {
    fn new(name: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    fn render(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(" "));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

/// Turn the results in `result_dir` into gnuplot `.dat` series in
/// `out_dir`. The experiment kind comes from the manifest.
pub fn plotdata(result_dir: &Path, out_dir: &Path) -> Result<PlotReport> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(result_dir.join("manifest.json"))?)?;
    let kind = manifest.kind;
    let table = Table::read(&result_dir.join(format!("{}.csv", kind.stem())))?;
    let series = match kind {
        ExperimentKind::Gallery => gallery_series(&table)?,
        ExperimentKind::BoundsCorpus => vec![bounds_series(&table)?],
        ExperimentKind::Strategic => vec![strategic_series(&table)?],
        ExperimentKind::SupGap => vec![sup_gap_series(&table)?],
        ExperimentKind::Learn => vec![learning_series(&table)?],
    };
    let mut report = PlotReport::default();
    if table.rows.is_empty() {
        report
            .warnings
            .push(format!("{} has no rows; writing an empty series", kind.stem()));
    }
    fs::create_dir_all(out_dir)?;
    for s in series {
        let name = format!("{}.dat", s.name);
        write_atomic(out_dir, &name, s.render().as_bytes(), s.rows.len())?;
        report.files.push(out_dir.join(name));
    }
    Ok(report)
}

/// `n`, computed and exact `J*(T_n)`, the published value (NaN where none),
/// the `n → ∞` limit and the true optimum, one file per entry and `β`.
fn gallery_series(t: &Table) -> Result<Vec<Series>> {
    let c = t.require(&["entry", "n", "beta", "j_design", "exact_design", "published_design", "j_true"])?;
    let mut groups: BTreeMap<(String, String), Vec<&csv::StringRecord>> = BTreeMap::new();
    for r in &t.rows {
        groups.entry((r[c[0]].to_string(), r[c[2]].to_string())).or_default().push(r);
    }
    if groups.is_empty() {
        return Ok(vec![Series::new("gallery", gallery_columns())]);
    }
    groups
        .into_iter()
        .map(|((entry, beta), rows)| {
            let kind: GalleryKind = entry.parse()?;
            let b: f64 = num(rows[0], c[2])?;
            let limit = kind.limit_exact(b).design_optimal.unwrap_or(f64::NAN);
            let mut s = Series::new(format!("gallery_{entry}_beta{beta}"), gallery_columns());
            for r in rows {
                let published = if r[c[5]].is_empty() { f64::NAN } else { num(r, c[5])? };
                s.rows.push(vec![num(r, c[1])?, num(r, c[3])?, num(r, c[4])?, published, limit, num(r, c[6])?]);
            }
            Ok(s)
        })
        .collect()
}

fn gallery_columns() -> Vec<&'static str> {
    vec!["n", "j_design", "exact_design", "published_design", "limit_design", "j_true"]
}

fn bounds_series(t: &Table) -> Result<Series> {
    let c = t.require(&[
        "kernel_tv_sup",
        "loss",
        "robustness_bound",
        "j_opt_true",
        "j_opt_design",
        "continuity_bound",
    ])?;
    let mut s = Series::new(
        "bounds",
        vec!["sup_tv", "loss", "robustness_bound", "continuity_gap", "continuity_bound"],
    );
    for r in &t.rows {
        s.rows.push(vec![
            num(r, c[0])?,
            num(r, c[1])?,
            num(r, c[2])?,
            (num(r, c[3])? - num(r, c[4])?).abs(),
            num(r, c[5])?,
        ]);
    }
    Ok(s)
}

/// Per horizon: largest exact TV, largest bound and the largest ratio
/// `exact / bound` over pairs.
fn strategic_series(t: &Table) -> Result<Series> {
    let c = t.require(&["k", "exact", "bound"])?;
    let mut by_k: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
    for r in &t.rows {
        let (k, e, b) = (num(r, c[0])? as u64, num(r, c[1])?, num(r, c[2])?);
        let slot = by_k.entry(k).or_insert((0.0, 0.0, 0.0));
        slot.0 = slot.0.max(e);
        slot.1 = slot.1.max(b);
        if b > 0.0 {
            slot.2 = slot.2.max(e / b);
        }
    }
    let mut s = Series::new("strategic", vec!["k", "max_exact", "max_bound", "max_ratio"]);
    s.rows = by_k.into_iter().map(|(k, (e, b, q))| vec![k as f64, e, b, q]).collect();
    Ok(s)
}

/// Per mixing weight (in file order): median and largest gap, largest
/// lower bound.
fn sup_gap_series(t: &Table) -> Result<Series> {
    let c = t.require(&["eps", "gap", "lower_bound"])?;
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, (Vec<f64>, f64)> = BTreeMap::new();
    for r in &t.rows {
        let key = r[c[0]].to_string();
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        let g = groups.entry(key).or_insert((Vec::new(), f64::NEG_INFINITY));
        g.0.push(num(r, c[1])?);
        g.1 = g.1.max(num(r, c[2])?);
    }
    let mut s = Series::new("supgap", vec!["eps", "median_gap", "max_gap", "max_lower_bound"]);
    for key in order {
        let (gaps, lower) = &groups[&key];
        let max = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        s.rows.push(vec![key.parse().unwrap_or(f64::NAN), median(gaps), max, *lower]);
    }
    Ok(s)
}

/// Per sample size: median loss with quartiles, and whether the median has
/// not increased since the previous size (1/0).
fn learning_series(t: &Table) -> Result<Series> {
    let c = t.require(&["N", "loss"])?;
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in &t.rows {
        groups.entry(num(r, c[0])? as u64).or_default().push(num(r, c[1])?);
    }
    let mut s = Series::new(
        "learning_loss",
        vec!["N", "median_loss", "q25_loss", "q75_loss", "median_nonincreasing"],
    );
    let mut prev = f64::INFINITY;
    for (n, losses) in groups {
        let m = median(&losses);
        s.rows.push(vec![
            n as f64,
            m,
            quantile(&losses, 0.25),
            quantile(&losses, 0.75),
            f64::from(u8::from(m <= prev)),
        ]);
        prev = m;
    }
    Ok(s)
}
