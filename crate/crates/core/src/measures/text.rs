//! Line-oriented text form: `atom <loc> <mass>` and `piece <a> <b> <height>`,
//! numbers written with 17 significant digits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Atom, Measure1D, Piece};
use crate::Error;

impl fmt::Display for Measure1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.atoms {
            writeln!(f, "atom {:.16e} {:.16e}", a.loc, a.mass)?;
        }
        for p in &self.pieces {
            writeln!(f, "piece {:.16e} {:.16e} {:.16e}", p.lo, p.hi, p.height)?;
        }
        Ok(())
    }
}

impl FromStr for Measure1D {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let mut atoms = Vec::new();
        let mut pieces = Vec::new();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let mut words = line.split_whitespace();
            let kind = words.next().unwrap_or_default();
            let nums = words
                .map(|w| w.parse::<f64>().map_err(|e| bad(format!("`{w}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            match (kind, nums.as_slice()) {
                ("atom", &[loc, mass]) => atoms.push(Atom { loc, mass }),
                ("piece", &[lo, hi, height]) => pieces.push(Piece { lo, hi, height }),
                _ => return Err(bad(format!("unrecognized record `{line}`"))),
            }
        }
        Measure1D::from_parts(atoms, pieces)
    }
}

impl Serialize for Measure1D {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Measure1D {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
