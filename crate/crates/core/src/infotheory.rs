//! Mutual information of discrete inputs on the real AWGN channel,
//! Shannon capacity and `Eb/N0` bookkeeping.
//!
//! For `Y = x + N`, `N ~ N(0, s^2)`, the conditional-output integral is
//!
//! ```text
//! I(X;Y) = -sum_i p_i E_Z[ ln sum_j p_j exp(-d_ij^2 / (2 s^2) - d_ij Z / s) ]
//! ```
//!
//! with `d_ij = x_i - x_j` and `Z` standard normal, evaluated by
//! Gauss-Hermite quadrature and a log-sum-exp over `j`. Work is in nats
//! and converted to bits once at the end.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::constellation::{PamConstellation, ShapedQam, NOISE_VARIANCE_PER_DIM};
use crate::error::{Error, Result};
use crate::quadrature::GaussHermite;
use crate::snr::SnrDb;

/// Relative tolerance on the power constraint accepted by [`mi_awgn_2d`].
const POWER_MATCH_TOL: f64 = 1e-9;

/// MI of a product QAM input, per real dimension and per 2D symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiResult {
    pub mi_bits_per_1d: f64,
    pub mi_bits_per_2d: f64,
}

impl MiResult {
    pub fn from_1d(bits: f64) -> Self {
        MiResult {
            mi_bits_per_1d: bits,
            mi_bits_per_2d: 2.0 * bits,
        }
    }

    /// Bits per dual-polarization symbol (two independent 2D symbols).
    pub fn per_dp_symbol(&self) -> f64 {
        2.0 * self.mi_bits_per_2d
    }
}

/// Unit in which a rate is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateUnit {
    /// Bits per dual-polarization symbol.
    Dp,
    /// Bits per 2D (complex) symbol.
    #[serde(rename = "2d")]
    TwoD,
    /// Bits per real dimension.
    #[serde(rename = "1d")]
    OneD,
}

impl RateUnit {
    /// Converts a rate in bits per 2D symbol into this unit.
    pub fn from_2d(self, bits_per_2d: f64) -> f64 {
        match self {
            RateUnit::Dp => 2.0 * bits_per_2d,
            RateUnit::TwoD => bits_per_2d,
            RateUnit::OneD => 0.5 * bits_per_2d,
        }
    }
}

/// `I(X;Y)` in bits for `Y = X + N`, `N ~ N(0, noise_variance)`, using the
/// default quadrature rule.
pub fn mi_awgn_1d(c: &PamConstellation, noise_variance: f64) -> Result<f64> {
    mi_awgn_1d_with(c, noise_variance, GaussHermite::default_rule())
}

/// As [`mi_awgn_1d`] with an explicit quadrature rule.
pub fn mi_awgn_1d_with(c: &PamConstellation, noise_variance: f64, rule: &GaussHermite) -> Result<f64> {
    if !(noise_variance > 0.0) || !noise_variance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be finite and > 0, got {noise_variance}"
        )));
    }
    Ok(mi_nats(c.levels(), c.pmf(), noise_variance.sqrt(), rule) / LN_2)
}

// The constellation is symmetric (enforced by `PamConstellation`), so the
// term for level i equals the term for its mirror; only the upper half is
// evaluated.
fn mi_nats(levels: &[f64], pmf: &[f64], sigma: f64, rule: &GaussHermite) -> f64 {
    let m = levels.len();
    let log_p: Vec<f64> = pmf.iter().map(|p| p.ln()).collect();
    let mut offsets = vec![0.0; m];
    let mut slopes = vec![0.0; m];
    let mut acc = 0.0;
    for i in m / 2..m {
        for j in 0..m {
            let d = (levels[i] - levels[j]) / sigma;
            offsets[j] = log_p[j] - 0.5 * d * d;
            slopes[j] = d;
        }
        let e = rule.expect(|z| {
            let mut hi = f64::NEG_INFINITY;
            for j in 0..m {
                hi = hi.max(offsets[j] - slopes[j] * z);
            }
            let mut s = 0.0;
            for j in 0..m {
                s += (offsets[j] - slopes[j] * z - hi).exp();
            }
            hi + s.ln()
        });
        acc += 2.0 * pmf[i] * e;
    }
    (-acc).max(0.0)
}

/// 2D MI of a product QAM that already meets the power constraint at `snr`.
pub fn mi_awgn_2d(q: &ShapedQam, snr: SnrDb) -> Result<MiResult> {
    if !snr.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite SNR {snr}")));
    }
    let want = snr.linear().value() / 2.0;
    let have = q.pam.average_energy();
    if (have - want).abs() > POWER_MATCH_TOL * want {
        return Err(Error::InvalidArgument(format!(
            "constellation energy {have} per dimension does not match {want} required at {snr}"
        )));
    }
    Ok(MiResult::from_1d(mi_awgn_1d(&q.pam, NOISE_VARIANCE_PER_DIM)?))
}

/// 2D MI in bits of the PMF of `pam` after rescaling to meet the power
/// constraint at `snr`. The scaling of `pam` itself is irrelevant.
pub fn mi_2d_at_snr(pam: &PamConstellation, snr: SnrDb) -> f64 {
    mi_2d_at_snr_with(pam, snr, GaussHermite::default_rule())
}

pub fn mi_2d_at_snr_with(pam: &PamConstellation, snr: SnrDb, rule: &GaussHermite) -> f64 {
    // MI depends only on levels / sigma, so scale sigma instead of the levels.
    let delta = pam.power_scaling(snr);
    let sigma = NOISE_VARIANCE_PER_DIM.sqrt() / delta;
    2.0 * mi_nats(pam.levels(), pam.pmf(), sigma, rule) / LN_2
}

/// `log2(1 + snr)` bits per 2D symbol.
pub fn awgn_capacity(snr: SnrDb) -> f64 {
    snr.linear().value().ln_1p() / LN_2
}

/// `Eb/N0 = SNR / AIR` in dB, with the AIR in bits per 2D symbol.
pub fn eb_n0_db(snr: SnrDb, air_bits_per_2d: f64) -> Result<f64> {
    if !(air_bits_per_2d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "AIR must be > 0, got {air_bits_per_2d}"
        )));
    }
    Ok(snr.db() - 10.0 * air_bits_per_2d.log10())
}
