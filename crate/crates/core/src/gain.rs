//! Sensitivity gains: the SNR that uniform QAM needs to reach the MI of a
//! shaped input, minus the SNR at which the shaped input achieves it.

use serde::{Deserialize, Serialize};

use crate::constellation::{check_order, PamConstellation};
use crate::error::{Error, Result};
use crate::infotheory::mi_2d_at_snr;
use crate::par::Execution;
use crate::search::brent;
use crate::shaping::{optimize_many, optimize_shaping};
use crate::snr::{db_grid, SnrDb};

/// Gains are only reported where uniform MI is more than this many bits
/// below `log2(M^2)`.
pub const SATURATION_MARGIN_BITS: f64 = 1e-3;

const SNR_XTOL_DB: f64 = 1e-11;
const MAX_SNR_DB: f64 = 300.0;

/// Inverse of the uniform-QAM MI curve.
#[derive(Debug, Clone)]
pub struct UniformInverse {
    uniform: PamConstellation,
    ceiling: f64,
}

impl UniformInverse {
    pub fn new(order: usize) -> Result<Self> {
        let uniform = PamConstellation::uniform(order)?;
        Ok(UniformInverse {
            ceiling: 2.0 * (order as f64).log2(),
            uniform,
        })
    }

    /// Uniform 2D MI at `snr_db`.
    pub fn mi(&self, snr_db: f64) -> f64 {
        mi_2d_at_snr(&self.uniform, SnrDb(snr_db))
    }

    /// `log2(M^2)`.
    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn is_saturated(&self, snr_db: f64) -> bool {
        self.mi(snr_db) >= self.ceiling - SATURATION_MARGIN_BITS
    }

    /// SNR in dB at which uniform QAM reaches `target` bits per 2D symbol.
    ///
    /// `hint` is a guess of the answer used to open a narrow bracket; the
    /// bracket widens until it encloses the root. The capacity inverse
    /// `10 log10(2^target - 1)` is a hard lower bound.
    pub fn required_snr(&self, target: f64, hint: Option<f64>) -> Result<f64> {
        if !(target > 0.0 && target < self.ceiling) {
            return Err(Error::InvalidArgument(format!(
                "target MI {target} outside (0, {})",
                self.ceiling
            )));
        }
        let floor = 10.0 * (target.exp2() - 1.0).log10();
        let f = |s: f64| self.mi(s) - target;
        let guess = hint.unwrap_or(floor + 1.0).max(floor);

        let mut width = 0.25;
        let mut lo = (guess - width).max(floor);
        while lo > floor && f(lo) > 0.0 {
            width *= 2.0;
            lo = (guess - width).max(floor);
        }
        let mut width = 0.25;
        let mut hi = guess + width;
        while f(hi) < 0.0 {
            width *= 2.0;
            hi = guess + width;
            if hi > MAX_SNR_DB {
                return Err(Error::Infeasible(format!(
                    "target MI {target} not reached below {MAX_SNR_DB} dB"
                )));
            }
        }
        brent(f, lo, hi, SNR_XTOL_DB)
    }

    /// Gain in dB of `shape` (any scaling; it is power-matched) at
    /// `channel_db`.
    pub fn gain(&self, shape: &PamConstellation, channel_db: f64, hint: Option<f64>) -> Result<f64> {
        if self.is_saturated(channel_db) {
            return Err(Error::Saturated { snr_db: channel_db });
        }
        let mi = mi_2d_at_snr(shape, SnrDb(channel_db));
        Ok(self.required_snr(mi, hint.or(Some(channel_db)))? - channel_db)
    }
}

/// SNR at which uniform `M^2`-QAM reaches `target_mi_2d` bits.
pub fn required_snr_uniform(order: usize, target_mi_2d: f64) -> Result<SnrDb> {
    UniformInverse::new(order)?.required_snr(target_mi_2d, None).map(SnrDb)
}

/// Gain at `channel` of the PMF optimized for `shaping`, rescaled to the
/// channel power. Returns [`Error::Saturated`] where uniform MI is within
/// [`SATURATION_MARGIN_BITS`] of the ceiling.
pub fn sensitivity_gain(order: usize, channel: SnrDb, shaping: SnrDb) -> Result<f64> {
    let inverse = UniformInverse::new(order)?;
    let sol = optimize_shaping(order, shaping)?;
    inverse.gain(&sol.constellation, channel.db(), None)
}

/// Gain versus SNR; `None` marks saturated grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCurve {
    pub snr_grid_db: Vec<f64>,
    pub gain_db: Vec<Option<f64>>,
}

impl GainCurve {
    /// Largest gain and where it occurs.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.snr_grid_db
            .iter()
            .zip(&self.gain_db)
            .filter_map(|(&s, g)| g.map(|g| (s, g)))
            .fold(None, |best, (s, g)| match best {
                Some((_, bg)) if bg >= g => best,
                _ => Some((s, g)),
            })
    }

    /// SNR of the first sign change of `self - other`, linearly
    /// interpolated. Both curves must share a grid.
    pub fn crossing(&self, other: &GainCurve) -> Option<f64> {
        if self.snr_grid_db != other.snr_grid_db {
            return None;
        }
        let diff: Vec<Option<f64>> = self
            .gain_db
            .iter()
            .zip(&other.gain_db)
            .map(|(a, b)| Some((*a)? - (*b)?))
            .collect();
        for k in 0..diff.len().saturating_sub(1) {
            if let (Some(a), Some(b)) = (diff[k], diff[k + 1]) {
                if a == 0.0 {
                    return Some(self.snr_grid_db[k]);
                }
                if a.signum() != b.signum() {
                    let (s0, s1) = (self.snr_grid_db[k], self.snr_grid_db[k + 1]);
                    return Some(s0 + (s1 - s0) * a / (a - b));
                }
            }
        }
        None
    }
}

/// Matched-shaping gain on an SNR grid.
pub fn matched_gain_curve(order: usize, lo_db: f64, hi_db: f64, step_db: f64, exec: Execution) -> Result<GainCurve> {
    check_order(order)?;
    if !(lo_db <= hi_db) || !(step_db > 0.0) {
        return Err(Error::InvalidArgument("need lo <= hi and step > 0".into()));
    }
    let grid = db_grid(lo_db, hi_db, step_db);
    let inverse = UniformInverse::new(order)?;
    let solutions = optimize_many(order, &grid, exec)?;
    let gains = exec.map_range(grid.len(), |k| {
        match inverse.gain(&solutions[k].constellation, grid[k], None) {
            Ok(g) => Ok(Some(g)),
            Err(Error::Saturated { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    Ok(GainCurve {
        gain_db: gains.into_iter().collect::<Result<_>>()?,
        snr_grid_db: grid,
    })
}
