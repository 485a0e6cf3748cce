//! One-dimensional measures made of point masses and piecewise-constant
//! densities, with exact distances between them.
//!
//! Total variation follows the factor-2 convention
//! `‖μ − ν‖_TV = 2 sup_B |μ(B) − ν(B)|`, so two distinct point masses are at
//! distance 2.

mod poly;
mod sets;
mod text;

use serde::{Deserialize, Serialize};

pub use poly::{PiecewisePoly, Poly, PolyPiece};
pub use sets::{dyadic_family, partition_defect, Interval, PartitionDefect, RegionSet, EDGE_TOL};

use crate::rng::Stream;
use crate::{Error, Result};

/// Tolerance on total mass for a measure to count as a probability measure.
pub const MASS_TOL: f64 = 1e-12;
/// Heights and masses whose magnitude is below this are dropped.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub loc: f64,
    pub mass: f64,
}

/// Constant density `height` on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

impl Piece {
    pub fn mass(&self) -> f64 {
        self.height * (self.hi - self.lo)
    }
}

/// Finite mixture of atoms and piecewise-constant densities, always held in
/// canonical form: atoms sorted with distinct locations and positive mass,
/// pieces sorted, non-overlapping, positive height, with equal-height
/// neighbours merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure1D {
    atoms: Vec<Atom>,
    pieces: Vec<Piece>,
}

impl Measure1D {
    pub fn dirac(loc: f64) -> Self {
        Self {
            atoms: vec![Atom { loc, mass: 1.0 }],
            pieces: Vec::new(),
        }
    }

    /// Uniform probability on `[lo, hi)`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidMeasure(format!("bad uniform support [{lo}, {hi})")));
        }
        Ok(Self {
            atoms: Vec::new(),
            pieces: vec![Piece {
                lo,
                hi,
                height: 1.0 / (hi - lo),
            }],
        })
    }

    /// Builds a measure from arbitrary atoms and pieces, validating inputs
    /// and bringing them to canonical form. Overlapping pieces add up.
    pub fn from_parts(atoms: Vec<Atom>, pieces: Vec<Piece>) -> Result<Self> {
        for a in &atoms {
            if !a.loc.is_finite() || !a.mass.is_finite() {
                return Err(Error::UnboundedSupport);
            }
            if a.mass < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "negative atom mass {} at {}",
                    a.mass, a.loc
                )));
            }
        }
        for p in &pieces {
            if !p.lo.is_finite() || !p.hi.is_finite() || !p.height.is_finite() {
                return Err(Error::UnboundedSupport);
            }
            if !(p.lo < p.hi) {
                return Err(Error::InvalidMeasure(format!(
                    "piece [{}, {}) is empty or reversed",
                    p.lo, p.hi
                )));
            }
            if p.height < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "negative height {} on [{}, {})",
                    p.height, p.lo, p.hi
                )));
            }
        }
        Ok(Self::canonical_from(atoms, pieces))
    }

    /// Equal-mass atoms at the given locations (an empirical measure).
    pub fn empirical(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySamples);
        }
        let n = values.len() as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let atoms = sorted
            .chunk_by(|a, b| a == b)
            .map(|run| Atom {
                loc: run[0],
                mass: run.len() as f64 / n,
            })
            .collect();
        Self::from_parts(atoms, Vec::new())
    }

    /// `Σ wᵢ μᵢ`; weights must be nonnegative.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a Measure1D)>) -> Self {
        let mut atoms = Vec::new();
        let mut pieces = Vec::new();
        for (w, m) in parts {
            if w == 0.0 {
                continue;
            }
            atoms.extend(m.atoms.iter().map(|a| Atom {
                loc: a.loc,
                mass: w * a.mass,
            }));
            pieces.extend(m.pieces.iter().map(|p| Piece {
                height: w * p.height,
                ..*p
            }));
        }
        Self::canonical_from(atoms, pieces)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Re-canonicalizes; a no-op on values produced by this type.
    pub fn canonical(&self) -> Self {
        Self::canonical_from(self.atoms.clone(), self.pieces.clone())
    }

    fn canonical_from(mut atoms: Vec<Atom>, pieces: Vec<Piece>) -> Self {
        atoms.sort_by(|a, b| a.loc.total_cmp(&b.loc));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        let mut anchor = f64::NEG_INFINITY;
        for a in atoms {
            match merged.last_mut() {
                Some(last) if a.loc - anchor <= EDGE_TOL => last.mass += a.mass,
                _ => {
                    anchor = a.loc;
                    merged.push(a);
                }
            }
        }
        merged.retain(|a| a.mass > 0.0);
        Self {
            atoms: merged,
            pieces: canonical_pieces(pieces),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>()
            + self.pieces.iter().map(Piece::mass).sum::<f64>()
    }

    /// Accepts a mass within `MASS_TOL` of one, widened to the rounding
    /// bound of a naive sum when there are many terms.
    pub fn ensure_probability(&self) -> Result<()> {
        let mass = self.total_mass();
        let terms = (self.atoms.len() + self.pieces.len()) as f64;
        if (mass - 1.0).abs() > MASS_TOL.max(terms * f64::EPSILON) {
            return Err(Error::NotNormalized { mass });
        }
        Ok(())
    }

    /// Smallest closed interval containing the support.
    pub fn support(&self) -> Option<(f64, f64)> {
        let lo = self
            .atoms
            .first()
            .map(|a| a.loc)
            .into_iter()
            .chain(self.pieces.first().map(|p| p.lo))
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .atoms
            .last()
            .map(|a| a.loc)
            .into_iter()
            .chain(self.pieces.last().map(|p| p.hi))
            .fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }

    pub fn mass_in(&self, iv: &Interval) -> f64 {
        if iv.is_empty() {
            return 0.0;
        }
        let start = self.atoms.partition_point(|a| a.loc < iv.lo);
        let atom_mass: f64 = self.atoms[start..]
            .iter()
            .take_while(|a| a.loc <= iv.hi)
            .filter(|a| iv.contains(a.loc))
            .map(|a| a.mass)
            .sum();
        let pstart = self.pieces.partition_point(|p| p.hi <= iv.lo);
        let piece_mass: f64 = self.pieces[pstart..]
            .iter()
            .take_while(|p| p.lo < iv.hi)
            .map(|p| p.height * iv.overlap_length(p.lo, p.hi))
            .sum();
        atom_mass + piece_mass
    }

    pub fn mass_in_set(&self, set: &RegionSet) -> f64 {
        set.parts().iter().map(|iv| self.mass_in(iv)).sum()
    }

    /// Distribution function `μ((-∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.mass_in(&Interval::new(f64::NEG_INFINITY, x, false, true))
    }

    fn density_at(&self, x: f64) -> f64 {
        let idx = self.pieces.partition_point(|p| p.lo <= x);
        match idx.checked_sub(1).map(|i| &self.pieces[i]) {
            Some(p) if x < p.hi => p.height,
            _ => 0.0,
        }
    }

    fn atom_at(&self, x: f64) -> f64 {
        let idx = self.atoms.partition_point(|a| a.loc < x - EDGE_TOL);
        match self.atoms.get(idx) {
            Some(a) if (a.loc - x).abs() <= EDGE_TOL => a.mass,
            _ => 0.0,
        }
    }

    fn breakpoints(&self, other: &Measure1D, with_atoms: bool) -> Vec<f64> {
        let mut xs: Vec<f64> = Vec::new();
        for m in [self, other] {
            for p in &m.pieces {
                xs.push(p.lo);
                xs.push(p.hi);
            }
            if with_atoms {
                xs.extend(m.atoms.iter().map(|a| a.loc));
            }
        }
        snap_sorted(xs)
    }

    /// Total variation distance (factor-2 convention), in `[0, 2]`.
    pub fn tv_distance(&self, other: &Measure1D) -> Result<f64> {
        self.ensure_probability()?;
        other.ensure_probability()?;
        Ok(self.l1_difference(other))
    }

    /// `Σ |atom mass differences| + ∫ |density difference|`, without the
    /// normalization check.
    pub(crate) fn l1_difference(&self, other: &Measure1D) -> f64 {
        let mut total = 0.0;
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.atoms, &other.atoms);
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if (x.loc - y.loc).abs() <= EDGE_TOL => {
                    total += (x.mass - y.mass).abs();
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x.loc < y.loc => {
                    total += x.mass;
                    i += 1;
                }
                (Some(_), Some(y)) => {
                    total += y.mass;
                    j += 1;
                }
                (Some(x), None) => {
                    total += x.mass;
                    i += 1;
                }
                (None, Some(y)) => {
                    total += y.mass;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        let breaks = self.breakpoints(other, false);
        for w in breaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let d = self.density_at(mid) - other.density_at(mid);
            total += d.abs() * (w[1] - w[0]);
        }
        total
    }

    /// Wasserstein-1 distance `∫ |F_μ(t) − F_ν(t)| dt`, computed exactly from
    /// the piecewise-linear distribution functions.
    pub fn w1_distance(&self, other: &Measure1D) -> Result<f64> {
        for m in [self, other] {
            match m.support() {
                Some((lo, hi)) if lo.is_finite() && hi.is_finite() => {}
                Some(_) => return Err(Error::UnboundedSupport),
                None => return Err(Error::NotNormalized { mass: 0.0 }),
            }
        }
        self.ensure_probability()?;
        other.ensure_probability()?;
        let breaks = self.breakpoints(other, true);
        let (mut f_self, mut f_other) = (0.0, 0.0);
        let mut total = 0.0;
        for (k, &x) in breaks.iter().enumerate() {
            f_self += self.atom_at(x);
            f_other += other.atom_at(x);
            let Some(&next) = breaks.get(k + 1) else { break };
            let len = next - x;
            let mid = 0.5 * (x + next);
            let (ds, dn) = (self.density_at(mid), other.density_at(mid));
            let d0 = f_self - f_other;
            let d1 = d0 + (ds - dn) * len;
            total += if d0 * d1 >= 0.0 {
                0.5 * (d0.abs() + d1.abs()) * len
            } else {
                0.5 * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs()) * len
            };
            f_self += ds * len;
            f_other += dn * len;
        }
        Ok(total)
    }

    /// `max_{B ∈ family} |μ(B) − ν(B)|`.
    pub fn setwise_gap(&self, other: &Measure1D, family: &[Interval]) -> Result<f64> {
        if family.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(family
            .iter()
            .map(|b| (self.mass_in(b) - other.mass_in(b)).abs())
            .fold(0.0, f64::max))
    }

    /// `∫ f dμ`, exact for piecewise polynomials.
    pub fn integrate(&self, f: &PiecewisePoly) -> Result<f64> {
        let whole = Interval::closed(f64::NEG_INFINITY, f64::INFINITY);
        let mut total = 0.0;
        for a in &self.atoms {
            total += a.mass * f.eval(a.loc).ok_or(Error::UndefinedIntegrand { at: a.loc })?;
        }
        for p in &self.pieces {
            total += p.height * f.integrate_segment(p.lo, p.hi, &whole)?;
        }
        Ok(total)
    }

    /// `∫_D f dμ` for a finite union of intervals `D`; `f` only needs to be
    /// defined on `D ∩ supp μ`.
    pub fn integrate_over(&self, f: &PiecewisePoly, domain: &RegionSet) -> Result<f64> {
        let mut total = 0.0;
        for iv in domain.parts() {
            let start = self.atoms.partition_point(|a| a.loc < iv.lo);
            for a in self.atoms[start..].iter().take_while(|a| a.loc <= iv.hi) {
                if iv.contains(a.loc) {
                    total +=
                        a.mass * f.eval(a.loc).ok_or(Error::UndefinedIntegrand { at: a.loc })?;
                }
            }
            let pstart = self.pieces.partition_point(|p| p.hi <= iv.lo);
            for p in self.pieces[pstart..].iter().take_while(|p| p.lo < iv.hi) {
                total += p.height * f.integrate_segment(p.lo, p.hi, iv)?;
            }
        }
        Ok(total)
    }

    /// Image under `x ↦ scale·x + shift`.
    pub fn pushforward_affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if scale == 0.0 {
            return Err(Error::ZeroScale);
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                loc: scale * a.loc + shift,
                mass: a.mass,
            })
            .collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let (x, y) = (scale * p.lo + shift, scale * p.hi + shift);
                Piece {
                    lo: x.min(y),
                    hi: x.max(y),
                    height: p.height / scale.abs(),
                }
            })
            .collect();
        Ok(Self::canonical_from(atoms, pieces))
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self)
    }

    /// One inverse-CDF draw.
    pub fn sample(&self, rng: &mut Stream) -> f64 {
        self.sampler().draw(rng)
    }
}

/// Sorts and merges values closer than [`EDGE_TOL`] to the first value of
/// their cluster.
fn snap_sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        match out.last() {
            Some(&last) if x - last <= EDGE_TOL => {}
            _ => out.push(x),
        }
    }
    out
}

fn snapped_index(breaks: &[f64], x: f64) -> usize {
    let idx = breaks.partition_point(|&b| b < x - EDGE_TOL);
    // the cluster representative lies within tolerance of x
    if idx < breaks.len() && (breaks[idx] - x).abs() <= EDGE_TOL {
        idx
    } else {
        idx.saturating_sub(1)
    }
}

fn canonical_pieces(mut pieces: Vec<Piece>) -> Vec<Piece> {
    pieces.retain(|p| p.height > 0.0 && p.hi > p.lo);
    if pieces.is_empty() {
        return pieces;
    }
    pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let already = pieces.windows(2).all(|w| {
        let gap = w[1].lo - w[0].hi;
        gap > EDGE_TOL || (gap == 0.0 && (w[0].height - w[1].height).abs() > ZERO_TOL)
    }) && pieces
        .iter()
        .all(|p| p.height > ZERO_TOL && p.hi - p.lo > EDGE_TOL);
    if already {
        return pieces;
    }
    let breaks = snap_sorted(pieces.iter().flat_map(|p| [p.lo, p.hi]).collect());
    let mut starts: Vec<Vec<usize>> = vec![Vec::new(); breaks.len()];
    let mut ends = vec![0usize; pieces.len()];
    for (i, p) in pieces.iter().enumerate() {
        let s = snapped_index(&breaks, p.lo);
        let e = snapped_index(&breaks, p.hi);
        if e > s {
            starts[s].push(i);
            ends[i] = e;
        }
    }
    let mut active: Vec<usize> = Vec::new();
    let mut out: Vec<Piece> = Vec::new();
    for k in 0..breaks.len().saturating_sub(1) {
        active.retain(|&i| ends[i] > k);
        active.extend_from_slice(&starts[k]);
        let h: f64 = active.iter().map(|&i| pieces[i].height).sum();
        if h <= ZERO_TOL {
            continue;
        }
        let (lo, hi) = (breaks[k], breaks[k + 1]);
        match out.last_mut() {
            Some(last) if last.hi == lo && (last.height - h).abs() <= ZERO_TOL => last.hi = hi,
            _ => out.push(Piece { lo, hi, height: h }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Component {
    Atom(f64),
    Piece(Piece),
}

/// Precomputed inverse-CDF sampler.
#[derive(Debug, Clone)]
pub struct Sampler {
    cum: Vec<f64>,
    parts: Vec<Component>,
    total: f64,
}

impl Sampler {
    fn new(m: &Measure1D) -> Self {
        // pieces are split at interior atoms so the walk follows the CDF
        let mut parts: Vec<(f64, u8, Component)> = m
            .atoms
            .iter()
            .map(|a| (a.loc, 0, Component::Atom(a.loc)))
            .collect();
        for p in &m.pieces {
            let mut lo = p.lo;
            let start = m.atoms.partition_point(|a| a.loc <= p.lo);
            for a in m.atoms[start..].iter().take_while(|a| a.loc < p.hi) {
                parts.push((lo, 1, Component::Piece(Piece { lo, hi: a.loc, ..*p })));
                lo = a.loc;
            }
            parts.push((lo, 1, Component::Piece(Piece { lo, ..*p })));
        }
        parts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut cum = Vec::with_capacity(parts.len());
        let mut acc = 0.0;
        for (_, _, c) in &parts {
            acc += match c {
                Component::Atom(x) => m.atom_at(*x),
                Component::Piece(p) => p.mass(),
            };
            cum.push(acc);
        }
        Self {
            cum,
            parts: parts.into_iter().map(|p| p.2).collect(),
            total: acc,
        }
    }

    pub fn draw(&self, rng: &mut Stream) -> f64 {
        let u = rng.unit() * self.total;
        let idx = self.cum.partition_point(|&c| c <= u).min(self.parts.len() - 1);
        match self.parts[idx] {
            Component::Atom(x) => x,
            Component::Piece(p) => {
                let start = if idx == 0 { 0.0 } else { self.cum[idx - 1] };
                let x = p.lo + (u - start) / p.height;
                x.clamp(p.lo, p.hi.next_down())
            }
        }
    }
}
