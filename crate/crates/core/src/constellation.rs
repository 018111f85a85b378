//! One-dimensional PAM constellations with an attached PMF, and their
//! product QAM extension.
//!
//! Energies are per real dimension. With the noise normalization used
//! throughout the crate (`N0 = 1` per complex symbol, variance 1/2 per real
//! dimension), a PAM constellation carrying `snr_linear / 2` energy per
//! dimension realizes `Es/N0 = snr_linear` for the product QAM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snr::SnrDb;

const PMF_SUM_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;

/// Noise variance per real dimension under the crate-wide `N0 = 1`
/// convention.
pub const NOISE_VARIANCE_PER_DIM: f64 = 0.5;

/// Canonical odd-integer ASK grid `[-(M-1), ..., -1, 1, ..., M-1]`.
pub fn base_grid(order: usize) -> Result<Vec<f64>> {
    check_order(order)?;
    Ok((0..order).map(|i| (2 * i) as f64 - (order - 1) as f64).collect())
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if order < 2 || !order.is_power_of_two() {
        return Err(Error::InvalidOrder(order));
    }
    Ok(())
}

/// Maxwell-Boltzmann PMF `P(x_i) ∝ exp(-nu * x_i^2)` over `grid`.
///
/// Weights are evaluated relative to the smallest-energy point so the
/// largest weight is exactly one. Weights that underflow below 1e-300 are
/// flushed to `f64::MIN_POSITIVE` before normalization, so every returned
/// probability is strictly positive.
pub fn mb_pmf(grid: &[f64], nu: f64) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if !nu.is_finite() || nu < 0.0 {
        return Err(Error::InvalidArgument(format!("nu must be finite and >= 0, got {nu}")));
    }
    Ok(mb_pmf_unchecked(grid, nu))
}

pub(crate) fn mb_pmf_unchecked(grid: &[f64], nu: f64) -> Vec<f64> {
    let min_sq = grid.iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = grid
        .iter()
        .map(|x| {
            let w = (-nu * (x * x - min_sq)).exp();
            if w < 1e-300 {
                f64::MIN_POSITIVE
            } else {
                w
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Shannon entropy of a PMF in bits.
pub fn entropy_bits(pmf: &[f64]) -> f64 {
    -pmf.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// Ordered 1D amplitude levels with a symmetric PMF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPam", into = "RawPam")]
pub struct PamConstellation {
    levels: Vec<f64>,
    pmf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPam {
    levels: Vec<f64>,
    pmf: Vec<f64>,
}

impl TryFrom<RawPam> for PamConstellation {
    type Error = Error;

    fn try_from(raw: RawPam) -> Result<Self> {
        PamConstellation::new(raw.levels, raw.pmf)
    }
}

impl From<PamConstellation> for RawPam {
    fn from(c: PamConstellation) -> Self {
        RawPam {
            levels: c.levels,
            pmf: c.pmf,
        }
    }
}

impl PamConstellation {
    /// Validates and wraps `levels` / `pmf`.
    ///
    /// Requires a power-of-two order, strictly ascending levels that are
    /// antisymmetric about zero, and a symmetric PMF with entries in (0, 1]
    /// summing to one within 1e-12.
    pub fn new(levels: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        check_order(levels.len())?;
        if pmf.len() != levels.len() {
            return Err(Error::LengthMismatch {
                left: levels.len(),
                right: pmf.len(),
            });
        }
        if levels.iter().chain(pmf.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConstellation("non-finite value".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConstellation("levels must be strictly ascending".into()));
        }
        if pmf.iter().any(|&p| p <= 0.0 || p > 1.0) {
            return Err(Error::InvalidConstellation("pmf entries must lie in (0, 1]".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidConstellation(format!("pmf sums to {total}, expected 1")));
        }
        let m = levels.len();
        let scale = levels[m - 1].abs().max(levels[0].abs());
        for i in 0..m / 2 {
            let j = m - 1 - i;
            if (levels[i] + levels[j]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidConstellation(
                    "levels must be antisymmetric about zero".into(),
                ));
            }
            if (pmf[i] - pmf[j]).abs() > SYMMETRY_TOL * pmf[i].max(pmf[j]) {
                return Err(Error::InvalidConstellation("pmf must be symmetric".into()));
            }
        }
        Ok(PamConstellation { levels, pmf })
    }

    /// Normalizes arbitrary positive weights into a PMF first. Useful for
    /// rounded tables whose entries do not sum to exactly one.
    pub fn from_weights(levels: Vec<f64>, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidConstellation("weights must have positive sum".into()));
        }
        PamConstellation::new(levels, weights.iter().map(|w| w / total).collect())
    }

    /// Uniform PMF on the canonical grid.
    pub fn uniform(order: usize) -> Result<Self> {
        Self::maxwell_boltzmann(order, 0.0)
    }

    /// MB PMF with parameter `nu` on the canonical grid.
    pub fn maxwell_boltzmann(order: usize, nu: f64) -> Result<Self> {
        let grid = base_grid(order)?;
        let pmf = mb_pmf(&grid, nu)?;
        Ok(PamConstellation { levels: grid, pmf })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn order(&self) -> usize {
        self.levels.len()
    }

    /// `sum_i pmf_i * levels_i^2`.
    pub fn average_energy(&self) -> f64 {
        self.levels.iter().zip(&self.pmf).map(|(x, p)| p * x * x).sum()
    }

    pub fn entropy_bits(&self) -> f64 {
        entropy_bits(&self.pmf)
    }

    /// Multiplies every level by `delta`; the PMF is unchanged.
    pub fn scale(&self, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale must be finite and > 0, got {delta}"
            )));
        }
        Ok(PamConstellation {
            levels: self.levels.iter().map(|x| x * delta).collect(),
            pmf: self.pmf.clone(),
        })
    }

    /// Rescaled copy with unit average energy per dimension.
    pub fn unit_energy(&self) -> Self {
        let delta = self.average_energy().sqrt().recip();
        self.scale(delta).expect("valid constellation has positive energy")
    }

    /// Scaling that makes the per-dimension energy equal `snr_linear / 2`.
    pub fn power_scaling(&self, snr: SnrDb) -> f64 {
        (snr.linear().value() / 2.0 / self.average_energy()).sqrt()
    }

    /// Rescaled copy meeting the power constraint at `snr`.
    pub fn power_matched(&self, snr: SnrDb) -> Result<Self> {
        if !snr.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite SNR {snr}")));
        }
        self.scale(self.power_scaling(snr))
    }

    /// Total variation distance to another PMF of the same order.
    pub fn total_variation(&self, other: &PamConstellation) -> f64 {
        0.5 * self.pmf.iter().zip(&other.pmf).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Square QAM built as the Cartesian product of a PAM constellation with
/// itself; the 2D PMF is `P(x_I) * P(x_Q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapedQam {
    pub pam: PamConstellation,
}

impl ShapedQam {
    pub fn new(pam: PamConstellation) -> Self {
        ShapedQam { pam }
    }

    /// Number of 2D points, `M^2`.
    pub fn order(&self) -> usize {
        self.pam.order() * self.pam.order()
    }

    pub fn average_energy(&self) -> f64 {
        2.0 * self.pam.average_energy()
    }

    pub fn entropy_bits(&self) -> f64 {
        2.0 * self.pam.entropy_bits()
    }

    pub fn power_matched(&self, snr: SnrDb) -> Result<Self> {
        Ok(ShapedQam::new(self.pam.power_matched(snr)?))
    }

    /// All `M^2` points as `((i, q), probability)` in row-major order.
    pub fn points(&self) -> impl Iterator<Item = ((f64, f64), f64)> + '_ {
        let pam = &self.pam;
        pam.levels.iter().zip(&pam.pmf).flat_map(move |(&xi, &pi)| {
            pam.levels
                .iter()
                .zip(&pam.pmf)
                .map(move |(&xq, &pq)| ((xi, xq), pi * pq))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn base_grids() {
        assert_eq!(base_grid(2).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(base_grid(4).unwrap(), vec![-3.0, -1.0, 1.0, 3.0]);
        assert_eq!(base_grid(8).unwrap(), vec![-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0]);
        for bad in [0, 1, 3, 6, 12] {
            assert_eq!(base_grid(bad), Err(Error::InvalidOrder(bad)));
        }
    }

    #[test]
    fn mb_pmf_limits() {
        let g = base_grid(8).unwrap();
        assert_eq!(mb_pmf(&g, 0.0).unwrap(), vec![0.125; 8]);
        let p = mb_pmf(&[-3.0, -1.0, 1.0, 3.0], 10.0).unwrap();
        assert!(p[0] < 1e-30 && p[3] < 1e-30);
        assert_relative_eq!(p[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(p[2], 0.5, epsilon = 1e-15);
        assert!(mb_pmf(&[], 1.0).is_err());
        assert!(mb_pmf(&g, -1.0).is_err());
        assert!(mb_pmf(&g, f64::NAN).is_err());
    }

    #[test]
    fn mb_pmf_underflow_is_flushed() {
        let g = base_grid(16).unwrap();
        let p = mb_pmf(&g, 1e4).unwrap();
        assert!(p.iter().all(|&v| v > 0.0));
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(PamConstellation::new(g, p).is_ok());
    }

    #[test]
    fn energies() {
        let c = PamConstellation::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(c.average_energy(), 1.0);
        assert_eq!(PamConstellation::uniform(4).unwrap().average_energy(), 5.0);
        let c = PamConstellation::uniform(8).unwrap().unit_energy();
        assert_relative_eq!(c.scale(2.0).unwrap().average_energy(), 4.0, epsilon = 1e-12);
        assert_eq!(c.scale(1.0).unwrap(), c);
        assert!(c.scale(0.0).is_err());
        assert!(c.scale(-1.0).is_err());
    }

    #[test]
    fn published_row_a_has_unit_energy() {
        let c = PamConstellation::from_weights(
            vec![-2.02, -1.44, -0.87, -0.29, 0.29, 0.87, 1.44, 2.02],
            &[0.042, 0.093, 0.158, 0.207, 0.207, 0.158, 0.093, 0.042],
        )
        .unwrap();
        assert!((c.average_energy() - 1.0).abs() < 0.01);
    }

    #[test]
    fn power_matching_hits_half_snr_per_dimension() {
        // Solve delta^2 * E = 10^(14.5/10) / 2 directly.
        let c = PamConstellation::maxwell_boltzmann(8, 0.05).unwrap();
        let target = 10f64.powf(1.45) / 2.0;
        let delta = (target / c.average_energy()).sqrt();
        let matched = c.power_matched(SnrDb(14.5)).unwrap();
        assert_relative_eq!(matched.average_energy(), target, max_relative = 1e-12);
        assert_relative_eq!(matched.levels()[7], 7.0 * delta, max_relative = 1e-12);
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(PamConstellation::new(vec![1.0, -1.0], vec![0.5, 0.5]).is_err());
        assert!(PamConstellation::new(vec![-1.0, 1.0], vec![0.4, 0.4]).is_err());
        assert!(PamConstellation::new(vec![-1.0, 1.0], vec![0.3, 0.7]).is_err());
        assert!(PamConstellation::new(vec![-1.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(PamConstellation::new(vec![-1.0, 0.0, 1.0], vec![0.3, 0.4, 0.3]).is_err());
        assert!(PamConstellation::new(vec![-1.0, 1.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn json_schema() {
        let c = PamConstellation::maxwell_boltzmann(4, 0.1).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.starts_with("{\"levels\":[-3.0,-1.0,1.0,3.0],\"pmf\":["));
        let back: PamConstellation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"levels":[1.0,-1.0],"pmf":[0.5,0.5]}"#;
        assert!(serde_json::from_str::<PamConstellation>(bad).is_err());
    }

    #[test]
    fn product_qam_doubles_entropy_and_energy() {
        let pam = PamConstellation::maxwell_boltzmann(8, 0.03).unwrap();
        let qam = ShapedQam::new(pam.clone());
        assert_eq!(qam.order(), 64);
        assert_relative_eq!(qam.entropy_bits(), 2.0 * pam.entropy_bits(), epsilon = 1e-12);
        assert_relative_eq!(qam.average_energy(), 2.0 * pam.average_energy(), epsilon = 1e-12);
        let pts: Vec<_> = qam.points().collect();
        assert_eq!(pts.len(), 64);
        let total: f64 = pts.iter().map(|(_, p)| p).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        let e2: f64 = pts.iter().map(|((i, q), p)| p * (i * i + q * q)).sum();
        assert_relative_eq!(e2, qam.average_energy(), max_relative = 1e-12);
        let h2: f64 = -pts.iter().map(|(_, p)| p * p.log2()).sum::<f64>();
        assert_relative_eq!(h2, qam.entropy_bits(), max_relative = 1e-12);
    }

    #[test]
    fn entropy_decreases_in_nu() {
        let g = base_grid(8).unwrap();
        let hs: Vec<f64> = (0..60)
            .map(|k| entropy_bits(&mb_pmf(&g, k as f64 * 0.01).unwrap()))
            .collect();
        assert_relative_eq!(hs[0], 3.0, epsilon = 1e-12);
        assert!(hs.windows(2).all(|w| w[1] <= w[0]));
    }

    proptest! {
        #[test]
        fn mb_pmf_normalized_symmetric_monotone(log_m in 1u32..6, nu in 0.0f64..2.0) {
            let m = 1usize << log_m;
            let g = base_grid(m).unwrap();
            let p = mb_pmf(&g, nu).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..m {
                prop_assert_eq!(p[i], p[m - 1 - i]);
            }
            // Upper half is ordered by increasing x^2.
            for i in m / 2..m - 1 {
                if nu > 0.0 && p[i + 1] > f64::MIN_POSITIVE {
                    prop_assert!(p[i + 1] < p[i]);
                } else {
                    prop_assert!(p[i + 1] <= p[i]);
                }
            }
        }

        #[test]
        fn energy_scales_quadratically(nu in 0.0f64..0.5, delta in 0.01f64..50.0) {
            let c = PamConstellation::maxwell_boltzmann(8, nu).unwrap();
            let scaled = c.scale(delta).unwrap();
            let want = delta * delta * c.average_energy();
            prop_assert!((scaled.average_energy() - want).abs() <= 1e-12 * want);
        }
    }
}
