use serde::{Deserialize, Serialize};

/// Coincidence tolerance for interval endpoints.
pub const EDGE_TOL: f64 = 1e-12;

/// An interval of the real line with explicit endpoint closedness.
///
/// A point is the closed interval `[x, x]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "yes")]
    pub lo_closed: bool,
    #[serde(default)]
    pub hi_closed: bool,
}

fn yes() -> bool {
    true
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, false)
    }

    /// `[lo, hi]`
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, true)
    }

    /// `(lo, hi)`
    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false)
    }

    pub fn point(x: f64) -> Self {
        Self::closed(x, x)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi && !self.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        let out = Interval::new(lo, hi, lo_closed, hi_closed);
        (!out.is_empty()).then_some(out)
    }

    /// Length of the overlap with `[a, b]`, ignoring endpoint closedness.
    pub fn overlap_length(&self, a: f64, b: f64) -> f64 {
        (self.hi.min(b) - self.lo.max(a)).max(0.0)
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_point() {
            return write!(f, "{{{}}}", self.lo);
        }
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// A finite union of pairwise disjoint intervals, kept sorted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionSet(pub Vec<Interval>);

impl RegionSet {
    pub fn new(mut parts: Vec<Interval>) -> Self {
        parts.retain(|p| !p.is_empty());
        parts.sort_by(|a, b| {
            a.lo.total_cmp(&b.lo)
                .then_with(|| b.lo_closed.cmp(&a.lo_closed))
        });
        Self(parts)
    }

    pub fn single(iv: Interval) -> Self {
        Self::new(vec![iv])
    }

    pub fn parts(&self) -> &[Interval] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.0.iter().any(|p| p.contains(x))
    }

    pub fn length(&self) -> f64 {
        self.0.iter().map(Interval::length).sum()
    }

    pub fn intersect(&self, other: &RegionSet) -> RegionSet {
        let mut out = Vec::new();
        for a in &self.0 {
            for b in &other.0 {
                if let Some(c) = a.intersect(b) {
                    out.push(c);
                }
            }
        }
        RegionSet::new(out)
    }

    pub fn union(&self, other: &RegionSet) -> RegionSet {
        let mut parts = self.0.clone();
        parts.extend_from_slice(&other.0);
        RegionSet::new(parts)
    }

    pub fn intersects(&self, other: &RegionSet) -> bool {
        self.0
            .iter()
            .any(|a| other.0.iter().any(|b| a.intersect(b).is_some()))
    }
}

/// Checks that `sets` are pairwise disjoint and cover the closed interval
/// `[lo, hi]` exactly. Returns a description of the first problem found.
pub fn partition_defect(sets: &[RegionSet], lo: f64, hi: f64) -> Option<PartitionDefect> {
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            if sets[i].intersects(&sets[j]) {
                return Some(PartitionDefect::Overlap(i, j));
            }
        }
    }
    let mut parts: Vec<Interval> = sets.iter().flat_map(|s| s.0.iter().copied()).collect();
    parts.sort_by(|a, b| {
        a.lo.total_cmp(&b.lo)
            .then_with(|| b.lo_closed.cmp(&a.lo_closed))
            .then_with(|| a.hi.total_cmp(&b.hi))
    });
    let Some(first) = parts.first() else {
        return Some(PartitionDefect::Gap(lo));
    };
    if (first.lo - lo).abs() > EDGE_TOL || !first.lo_closed {
        return Some(PartitionDefect::Gap(lo));
    }
    let (mut end, mut end_closed) = (first.hi, first.hi_closed);
    for p in &parts[1..] {
        if (p.lo - end).abs() > EDGE_TOL || !(end_closed || p.lo_closed) {
            return Some(PartitionDefect::Gap(end));
        }
        end = p.hi;
        end_closed = p.hi_closed;
    }
    if (end - hi).abs() > EDGE_TOL || !end_closed {
        return Some(PartitionDefect::Gap(end));
    }
    None
}

/// Dyadic intervals `[lo + j·w, lo + (j+1)·w)` with `w = (hi − lo)/2^m` for
/// every level `m = 0..=levels`; the top interval of each level is closed.
pub fn dyadic_family(lo: f64, hi: f64, levels: u32) -> Vec<Interval> {
    let mut out = Vec::new();
    for m in 0..=levels {
        let k = 1usize << m;
        let w = (hi - lo) / k as f64;
        for j in 0..k {
            let b = if j + 1 == k { hi } else { lo + (j + 1) as f64 * w };
            out.push(Interval::new(lo + j as f64 * w, b, true, j + 1 == k));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartitionDefect {
    Overlap(usize, usize),
    Gap(f64),
}

impl std::fmt::Display for PartitionDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartitionDefect::Overlap(i, j) => write!(f, "regions {i} and {j} overlap"),
            PartitionDefect::Gap(x) => write!(f, "regions leave a gap near x = {x}"),
        }
    }
}
