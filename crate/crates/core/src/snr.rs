//! Unit-tagged signal-to-noise ratios.
//!
//! Every public interface takes [`SnrDb`]; linear values only appear
//! internally through [`SnrDb::linear`].

use serde::{Deserialize, Serialize};
use std::fmt;

/// SNR in decibels, `Es/N0` per complex (2D) symbol.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SnrDb(pub f64);

/// SNR as a linear power ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SnrLinear(pub f64);

impl SnrDb {
    pub fn new(db: f64) -> Self {
        SnrDb(db)
    }

    pub fn db(self) -> f64 {
        self.0
    }

    pub fn linear(self) -> SnrLinear {
        SnrLinear(10f64.powf(self.0 / 10.0))
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl SnrLinear {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_db(self) -> SnrDb {
        SnrDb(10.0 * self.0.log10())
    }
}

impl From<f64> for SnrDb {
    fn from(db: f64) -> Self {
        SnrDb(db)
    }
}

impl fmt::Display for SnrDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dB", self.0)
    }
}

/// Evenly spaced dB grid from `lo` to `hi` inclusive.
///
/// Points are computed as `lo + k * step` and rounded to 1e-9 dB so that
/// grids built from decimal steps (0.1 dB) land on exact decimal values.
pub fn db_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_round_trip() {
        for db in [-10.0, 0.0, 3.0, 14.5, 30.0] {
            let back = SnrDb(db).linear().to_db().db();
            assert!((back - db).abs() < 1e-12);
        }
        assert!((SnrDb(10.0).linear().value() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn grid_has_201_points() {
        let g = db_grid(5.0, 25.0, 0.1);
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 5.0);
        assert_eq!(g[95], 14.5);
        assert_eq!(g[200], 25.0);
        assert_eq!(db_grid(5.0, 30.0, 0.1).len(), 251);
        assert_eq!(db_grid(7.0, 7.0, 0.1), vec![7.0]);
    }
}
