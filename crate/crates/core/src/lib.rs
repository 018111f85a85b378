//! Maxwell-Boltzmann probabilistic shaping of square QAM on the AWGN
//! channel.
//!
//! The crate optimizes MB input PMFs for a target SNR, evaluates mutual
//! information by Gauss-Hermite quadrature and by Monte-Carlo simulation,
//! converts rate curves into sensitivity gains, and quantizes the
//! shaping-SNR axis into a small lookup table of PMFs that stays within a
//! penalty threshold of perfectly matched shaping.
//!
//! Noise is normalized to `N0 = 1` per complex symbol; the SNR is carried
//! entirely by the constellation scaling.

// Negated comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constellation;
pub mod error;
pub mod gain;
pub mod infotheory;
pub mod mcsim;
pub mod mismatch;
pub mod par;
pub mod quadrature;
pub mod search;
pub mod shaping;
pub mod snr;

pub use constellation::{base_grid, entropy_bits, mb_pmf, PamConstellation, ShapedQam};
pub use error::{Error, Result};
pub use gain::{matched_gain_curve, required_snr_uniform, sensitivity_gain, GainCurve, UniformInverse};
pub use infotheory::{awgn_capacity, eb_n0_db, mi_awgn_1d, mi_awgn_2d, MiResult, RateUnit};
pub use mcsim::{air_gaussian_metric, estimate_snr, sample_symbols, simulate, SimConfig, SimReport, VarianceMode};
pub use mismatch::{
    build_gain_map, quantize_pmfs, quantize_pmfs_with, GainMap, LookupEntry, PmfLookupTable, QuantizeOptions,
};
pub use num_complex::Complex64;
pub use par::Execution;
pub use shaping::{nu_for_power, optimize_shaping, shaped_vs_uniform_mi, ShapingSolution};
pub use snr::{SnrDb, SnrLinear};
