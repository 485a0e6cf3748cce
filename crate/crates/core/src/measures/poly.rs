use serde::{Deserialize, Serialize};

use super::sets::{Interval, RegionSet};
use crate::{Error, Result};

/// Polynomial of degree at most 3, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Poly {
    coeffs: [f64; 4],
}

impl TryFrom<Vec<f64>> for Poly {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Poly::new(&v)
    }
}

impl From<Poly> for Vec<f64> {
    fn from(p: Poly) -> Vec<f64> {
        let mut v = p.coeffs.to_vec();
        while v.len() > 1 && *v.last().unwrap() == 0.0 {
            v.pop();
        }
        v
    }
}

impl Poly {
    pub fn new(coeffs: &[f64]) -> Result<Self> {
        let mut c = [0.0; 4];
        for (i, &v) in coeffs.iter().enumerate() {
            if i >= 4 {
                if v != 0.0 {
                    return Err(Error::DegreeTooHigh { degree: i });
                }
                continue;
            }
            if !v.is_finite() {
                return Err(Error::InvalidPolynomial(format!("coefficient {i} is {v}")));
            }
            c[i] = v;
        }
        Ok(Self { coeffs: c })
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: [c, 0.0, 0.0, 0.0] }
    }

    pub fn linear(c0: f64, c1: f64) -> Self {
        Self { coeffs: [c0, c1, 0.0, 0.0] }
    }

    /// `(x - a)^2`
    pub fn squared_distance(a: f64) -> Self {
        Self { coeffs: [a * a, -2.0 * a, 1.0, 0.0] }
    }

    pub fn coeffs(&self) -> &[f64; 4] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [a, b, c, d] = self.coeffs;
        ((d * x + c) * x + b) * x + a
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let [a, b, c, d] = self.coeffs;
        (((d / 4.0 * x + c / 3.0) * x + b / 2.0) * x + a) * x
    }

    /// Exact integral over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.antiderivative(hi) - self.antiderivative(lo)
    }

    /// Maximum of `|p|` over the closed interval `[lo, hi]`.
    pub fn sup_abs(&self, lo: f64, hi: f64) -> f64 {
        let [_, b, c, d] = self.coeffs;
        // Critical points: roots of b + 2c x + 3d x^2.
        let mut candidates = vec![lo, hi];
        if d != 0.0 {
            let (qa, qb, qc) = (3.0 * d, 2.0 * c, b);
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let s = disc.sqrt();
                candidates.push((-qb + s) / (2.0 * qa));
                candidates.push((-qb - s) / (2.0 * qa));
            }
        } else if c != 0.0 {
            candidates.push(-b / (2.0 * c));
        }
        candidates
            .into_iter()
            .filter(|x| *x >= lo && *x <= hi)
            .map(|x| self.eval(x).abs())
            .fold(0.0, f64::max)
    }
}

/// A function of one real variable that is polynomial on each of finitely
/// many disjoint intervals and undefined elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    pieces: Vec<PolyPiece>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyPiece {
    pub domain: Interval,
    pub poly: Poly,
}

impl PiecewisePoly {
    pub fn new(mut pieces: Vec<PolyPiece>) -> Result<Self> {
        pieces.retain(|p| !p.domain.is_empty());
        pieces.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
        for w in pieces.windows(2) {
            if w[0].domain.intersect(&w[1].domain).is_some() {
                return Err(Error::InvalidPolynomial(format!(
                    "pieces {} and {} overlap",
                    w[0].domain, w[1].domain
                )));
            }
        }
        Ok(Self { pieces })
    }

    /// One polynomial on the whole closed interval `[lo, hi]`.
    pub fn on(lo: f64, hi: f64, poly: Poly) -> Self {
        Self {
            pieces: vec![PolyPiece {
                domain: Interval::closed(lo, hi),
                poly,
            }],
        }
    }

    /// The same polynomial on every interval of `set`.
    pub fn on_set(set: &RegionSet, poly: Poly) -> Self {
        Self {
            pieces: set
                .parts()
                .iter()
                .map(|d| PolyPiece {
                    domain: *d,
                    poly: poly.clone(),
                })
                .collect(),
        }
    }

    /// Concatenates the pieces of several functions with disjoint domains.
    pub fn join(parts: Vec<PiecewisePoly>) -> Result<Self> {
        Self::new(parts.into_iter().flat_map(|p| p.pieces).collect())
    }

    pub fn pieces(&self) -> &[PolyPiece] {
        &self.pieces
    }

    fn locate(&self, x: f64) -> Option<&PolyPiece> {
        // pieces are sorted and disjoint; the containing piece, if any, is
        // the last one starting at or before x, or a point piece right there.
        let idx = self.pieces.partition_point(|p| p.domain.lo <= x);
        self.pieces[..idx]
            .iter()
            .rev()
            .take(2)
            .find(|p| p.domain.contains(x))
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        self.locate(x).map(|p| p.poly.eval(x))
    }

    /// Sup of `|f|` over its domain.
    pub fn sup_abs(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.poly.sup_abs(p.domain.lo, p.domain.hi))
            .fold(0.0, f64::max)
    }

    /// Range `(min, max)` of `f` over its domain.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut out: Option<(f64, f64)> = None;
        for p in &self.pieces {
            let (lo, hi) = (p.domain.lo, p.domain.hi);
            let [_, b, c, d] = *p.poly.coeffs();
            let mut xs = vec![lo, hi];
            if d != 0.0 {
                let disc = 4.0 * c * c - 12.0 * d * b;
                if disc >= 0.0 {
                    xs.push((-2.0 * c + disc.sqrt()) / (6.0 * d));
                    xs.push((-2.0 * c - disc.sqrt()) / (6.0 * d));
                }
            } else if c != 0.0 {
                xs.push(-b / (2.0 * c));
            }
            for x in xs.into_iter().filter(|x| *x >= lo && *x <= hi) {
                let v = p.poly.eval(x);
                out = Some(match out {
                    None => (v, v),
                    Some((a, b)) => (a.min(v), b.max(v)),
                });
            }
        }
        out
    }

    /// Integral of `height * f` over `[a, b]`, restricted to `window`.
    /// Errors if part of `[a, b] ∩ window` is outside the domain of `f`.
    pub(crate) fn integrate_segment(&self, a: f64, b: f64, window: &Interval) -> Result<f64> {
        let lo = a.max(window.lo);
        let hi = b.min(window.hi);
        if hi <= lo {
            return Ok(0.0);
        }
        let mut covered = 0.0;
        let mut total = 0.0;
        for p in &self.pieces {
            let s = lo.max(p.domain.lo);
            let e = hi.min(p.domain.hi);
            if e > s {
                covered += e - s;
                total += p.poly.integral(s, e);
            }
        }
        if (hi - lo) - covered > 1e-12 * (1.0 + (hi - lo)) {
            return Err(Error::UndefinedIntegrand {
                at: self.first_gap(lo, hi),
            });
        }
        Ok(total)
    }

    fn first_gap(&self, lo: f64, hi: f64) -> f64 {
        let mut x = lo;
        for p in &self.pieces {
            if p.domain.hi <= x {
                continue;
            }
            if p.domain.lo > x {
                return x;
            }
            x = p.domain.hi;
            if x >= hi {
                break;
            }
        }
        x
    }
}
