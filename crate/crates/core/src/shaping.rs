//! Maxwell-Boltzmann shaping optimization.
//!
//! For a shaping SNR and a candidate amplitude scaling `delta`, the MB
//! parameter `nu` is fixed by the power constraint
//! `sum_i P_nu(x_i) (delta x_i)^2 = snr / 2`. The MI of the resulting input
//! is unimodal in `delta`, which is searched by golden section.
//!
//! Larger `delta` needs a more concentrated PMF to hold the power, so the
//! feasible scalings run from `delta_uniform` (`nu = 0`) up to
//! `sqrt(snr / 2) / min|x|`, where all mass would sit on the innermost
//! levels.

use serde::{Deserialize, Serialize};

use crate::constellation::{base_grid, check_order, mb_pmf_unchecked, PamConstellation, NOISE_VARIANCE_PER_DIM};
use crate::error::{Error, Result};
use crate::infotheory::{mi_2d_at_snr, mi_awgn_1d};
use crate::par::Execution;
use crate::search::{bisect, golden_section_max};
use crate::snr::SnrDb;

/// Relative gap kept from the unattainable end of the scaling interval.
const DELTA_EDGE_EPS: f64 = 1e-6;
/// Golden-section stopping width relative to `delta_uniform`.
const DELTA_REL_TOL: f64 = 1e-7;
/// MI difference under which two scalings count as tied.
const MI_TIE_BITS: f64 = 1e-12;
const ENERGY_REL_TOL: f64 = 1e-12;

/// Optimized MB input for one shaping SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingSolution {
    pub order: usize,
    pub shaping_snr_db: SnrDb,
    pub nu: f64,
    pub delta: f64,
    /// Delta-scaled constellation meeting the power constraint.
    pub constellation: PamConstellation,
    /// Same PMF, levels renormalized to unit energy per dimension.
    pub unit_energy: PamConstellation,
    pub mi_bits_per_2d: f64,
}

impl ShapingSolution {
    pub fn pmf(&self) -> &[f64] {
        self.constellation.pmf()
    }
}

fn energy(grid: &[f64], pmf: &[f64]) -> f64 {
    grid.iter().zip(pmf).map(|(x, p)| p * x * x).sum()
}

fn check_antisymmetric(grid: &[f64]) -> Result<()> {
    let m = grid.len();
    if m < 2 {
        return Err(Error::InvalidArgument("grid needs at least two levels".into()));
    }
    let scale = grid.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for i in 0..m / 2 {
        if (grid[i] + grid[m - 1 - i]).abs() > 1e-12 * scale {
            return Err(Error::InvalidArgument("grid must be antisymmetric".into()));
        }
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("grid must be strictly ascending".into()));
    }
    Ok(())
}

/// The `nu >= 0` for which the `delta`-scaled MB input on `grid` has
/// per-dimension energy `target_energy`.
///
/// Energy is strictly decreasing in `nu`, from `delta^2 * E_uniform` at
/// `nu = 0` towards `delta^2 * min x^2`. Targets above the uniform energy
/// (delta too small) or at/below the innermost-level energy are rejected.
/// When every level has the same modulus (M = 2) the energy does not depend
/// on `nu`; the target must then equal it and `nu = 0` is returned.
pub fn nu_for_power(grid: &[f64], delta: f64, target_energy: f64) -> Result<f64> {
    check_antisymmetric(grid)?;
    if !(delta > 0.0) || !(target_energy > 0.0) {
        return Err(Error::InvalidArgument(
            "delta and target energy must be positive".into(),
        ));
    }
    let d2 = delta * delta;
    let uniform = d2 * energy(grid, &vec![1.0 / grid.len() as f64; grid.len()]);
    let floor = d2 * grid.iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
    if (target_energy - uniform).abs() <= ENERGY_REL_TOL * uniform {
        return Ok(0.0);
    }
    if target_energy > uniform {
        return Err(Error::Infeasible(format!(
            "target energy {target_energy} exceeds uniform-input energy {uniform}; scaling too small"
        )));
    }
    if target_energy <= floor {
        return Err(Error::Infeasible(format!(
            "target energy {target_energy} not above innermost-level energy {floor}"
        )));
    }
    let excess = |nu: f64| d2 * energy(grid, &mb_pmf_unchecked(grid, nu)) - target_energy;
    // Bracket: grow nu until the energy drops below target.
    let spread = grid.iter().map(|x| x * x).fold(0.0, f64::max) - floor / d2;
    let mut hi = 1.0 / spread;
    while excess(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Infeasible("nu bracket diverged".into()));
        }
    }
    bisect(excess, 0.0, hi, 0.0)
}

/// Scaling interval `[delta_uniform, delta_max)` for a grid and per-dimension
/// target energy.
fn delta_bracket(grid: &[f64], target_energy: f64) -> (f64, f64) {
    let m = grid.len() as f64;
    let e_uniform = grid.iter().map(|x| x * x).sum::<f64>() / m;
    let min_sq = grid.iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
    ((target_energy / e_uniform).sqrt(), (target_energy / min_sq).sqrt())
}

/// Optimizes the MB input for `M`-PAM (`M^2`-QAM) at the given shaping SNR.
pub fn optimize_shaping(order: usize, shaping_snr: SnrDb) -> Result<ShapingSolution> {
    optimize_shaping_on_grid(&base_grid(order)?, shaping_snr)
}

/// As [`optimize_shaping`] over an arbitrary antisymmetric base grid.
pub fn optimize_shaping_on_grid(grid: &[f64], shaping_snr: SnrDb) -> Result<ShapingSolution> {
    check_order(grid.len())?;
    check_antisymmetric(grid)?;
    if !shaping_snr.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite shaping SNR {shaping_snr}")));
    }
    let target = shaping_snr.linear().value() / 2.0;
    let (delta_lo, delta_max) = delta_bracket(grid, target);
    let single_modulus = grid
        .iter()
        .all(|x| (x.abs() - grid[0].abs()).abs() <= 1e-12 * grid[0].abs());

    let mi_for_delta = |delta: f64| -> Result<(f64, f64)> {
        let nu = nu_for_power(grid, delta, target)?;
        let pam = PamConstellation::new(grid.iter().map(|x| x * delta).collect(), mb_pmf_unchecked(grid, nu))?;
        Ok((nu, 2.0 * mi_awgn_1d(&pam, NOISE_VARIANCE_PER_DIM)?))
    };

    let delta = if single_modulus {
        delta_lo
    } else {
        let delta_hi = delta_max * (1.0 - DELTA_EDGE_EPS);
        let objective = |d: f64| mi_for_delta(d).map(|(_, mi)| mi).unwrap_or(f64::NEG_INFINITY);
        let (best, best_mi) = golden_section_max(&objective, delta_lo, delta_hi, DELTA_REL_TOL * delta_lo);
        // Ties go to the smaller nu, i.e. towards the uniform end.
        if objective(delta_lo) >= best_mi - MI_TIE_BITS {
            delta_lo
        } else {
            best
        }
    };

    let nu = if single_modulus {
        0.0
    } else {
        nu_for_power(grid, delta, target)?
    };
    let shape = PamConstellation::new(grid.to_vec(), mb_pmf_unchecked(grid, nu))?;
    // Re-derive the scaling from the final PMF so the constraint holds to
    // rounding error.
    let constellation = shape.power_matched(shaping_snr)?;
    let delta = shape.power_scaling(shaping_snr);
    let mi_bits_per_2d = 2.0 * mi_awgn_1d(&constellation, NOISE_VARIANCE_PER_DIM)?;
    Ok(ShapingSolution {
        order: grid.len(),
        shaping_snr_db: shaping_snr,
        nu,
        delta,
        unit_energy: constellation.unit_energy(),
        constellation,
        mi_bits_per_2d,
    })
}

/// Optimizes independently for every SNR in `snrs_db`.
pub fn optimize_many(order: usize, snrs_db: &[f64], exec: Execution) -> Result<Vec<ShapingSolution>> {
    check_order(order)?;
    exec.map(snrs_db, |&s| optimize_shaping(order, SnrDb(s)))
        .into_iter()
        .collect()
}

/// Matched-shaped and uniform 2D MI at the same SNR.
pub fn shaped_vs_uniform_mi(order: usize, snr: SnrDb) -> Result<(f64, f64)> {
    let shaped = optimize_shaping(order, snr)?.mi_bits_per_2d;
    let uniform = mi_2d_at_snr(&PamConstellation::uniform(order)?, snr);
    Ok((shaped, uniform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::ShapedQam;
    use crate::infotheory::mi_awgn_2d;
    use approx::assert_relative_eq;

    const ROW_B: [f64; 8] = [0.079, 0.113, 0.145, 0.163, 0.163, 0.145, 0.113, 0.079];

    #[test]
    fn nu_boundary_and_degenerate_cases() {
        let g = base_grid(8).unwrap();
        let delta = 0.7;
        let uniform = delta * delta * 21.0;
        assert_eq!(nu_for_power(&g, delta, uniform).unwrap(), 0.0);
        assert!(matches!(
            nu_for_power(&g, delta, uniform * 1.01),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            nu_for_power(&g, delta, delta * delta),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            nu_for_power(&g, delta, 0.5 * delta * delta),
            Err(Error::Infeasible(_))
        ));
        assert!(nu_for_power(&g, -1.0, 1.0).is_err());
        assert!(nu_for_power(&[1.0, 2.0], 1.0, 1.0).is_err());

        let two = base_grid(2).unwrap();
        assert_eq!(nu_for_power(&two, 2.0, 4.0).unwrap(), 0.0);
        assert!(nu_for_power(&two, 2.0, 3.0).is_err());
    }

    #[test]
    fn nu_meets_power_constraint() {
        let g = base_grid(8).unwrap();
        for (delta, target) in [(0.5, 4.0), (1.2, 3.0), (0.3, 0.2), (2.0, 4.5)] {
            let nu = nu_for_power(&g, delta, target).unwrap();
            let e = delta * delta * energy(&g, &mb_pmf_unchecked(&g, nu));
            assert_relative_eq!(e, target, max_relative = 1e-10);
        }
    }

    #[test]
    fn energy_strictly_decreasing_in_nu() {
        let g = base_grid(16).unwrap();
        let es: Vec<f64> = (0..200)
            .map(|k| energy(&g, &mb_pmf_unchecked(&g, k as f64 * 0.002)))
            .collect();
        assert!(es.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn row_b_pmf_from_direct_bisection() {
        let sol = optimize_shaping(8, SnrDb(18.0)).unwrap();
        let g = base_grid(8).unwrap();
        let target = 10f64.powf(1.8) / 2.0;
        let nu = nu_for_power(&g, sol.delta, target).unwrap();
        // Oracle: plain bisection on the energy equation, written out here.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let w: Vec<f64> = g.iter().map(|x| (-mid * x * x).exp()).collect();
            let z: f64 = w.iter().sum();
            let e: f64 = g.iter().zip(&w).map(|(x, w)| w / z * x * x).sum::<f64>() * sol.delta * sol.delta;
            if e > target {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert_relative_eq!(nu, 0.5 * (lo + hi), max_relative = 1e-9);
        let pmf = mb_pmf_unchecked(&g, nu);
        for (p, want) in pmf.iter().zip(ROW_B) {
            assert!((p - want).abs() <= 0.002, "{pmf:?}");
        }
    }

    #[test]
    fn solution_invariants() {
        for snr in [5.0, 14.5, 21.0, 27.0] {
            let sol = optimize_shaping(8, SnrDb(snr)).unwrap();
            let target = SnrDb(snr).linear().value() / 2.0;
            assert_relative_eq!(sol.constellation.average_energy(), target, max_relative = 1e-9);
            assert_relative_eq!(sol.unit_energy.average_energy(), 1.0, max_relative = 1e-12);
            let q = ShapedQam::new(sol.constellation.clone());
            let mi = mi_awgn_2d(&q, SnrDb(snr)).unwrap().mi_bits_per_2d;
            assert!((mi - sol.mi_bits_per_2d).abs() < 1e-9);
        }
    }

    #[test]
    fn high_snr_is_near_uniform() {
        let sol = optimize_shaping(8, SnrDb(40.0)).unwrap();
        let u = PamConstellation::uniform(8).unwrap();
        assert!(sol.constellation.total_variation(&u) < 1e-3);
    }

    #[test]
    fn two_level_case_is_uniform() {
        let sol = optimize_shaping(2, SnrDb(10.0)).unwrap();
        assert_eq!(sol.nu, 0.0);
        assert_eq!(sol.pmf(), &[0.5, 0.5]);
        assert!(optimize_shaping(3, SnrDb(10.0)).is_err());
        assert!(optimize_shaping(8, SnrDb(f64::NAN)).is_err());
    }

    #[test]
    fn golden_section_matches_dense_grid() {
        let g = base_grid(8).unwrap();
        let snr = SnrDb(12.0);
        let target = snr.linear().value() / 2.0;
        let sol = optimize_shaping(8, snr).unwrap();
        let (lo, hi) = delta_bracket(&g, target);
        let hi = hi * (1.0 - 1e-6);
        let n = 2000;
        let mis: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let d = lo + (hi - lo) * k as f64 / n as f64;
                let nu = nu_for_power(&g, d, target).unwrap();
                let pam = PamConstellation::new(g.clone(), mb_pmf_unchecked(&g, nu)).unwrap();
                (d, mi_2d_at_snr(&pam, snr))
            })
            .collect();
        // Single local maximum up to 1e-9 bits.
        let peaks = mis
            .windows(3)
            .filter(|w| w[1].1 > w[0].1 + 1e-9 && w[1].1 > w[2].1 + 1e-9)
            .count();
        assert!(peaks <= 1);
        let (best_d, best_mi) = mis
            .iter()
            .cloned()
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert!((sol.delta - best_d).abs() <= 2.0 * (hi - lo) / n as f64);
        assert!(sol.mi_bits_per_2d >= best_mi - 1e-12);
    }

    #[test]
    fn rescaled_grid_gives_same_pmf() {
        let g: Vec<f64> = base_grid(8).unwrap().iter().map(|x| x * 0.37).collect();
        let a = optimize_shaping(8, SnrDb(16.0)).unwrap();
        let b = optimize_shaping_on_grid(&g, SnrDb(16.0)).unwrap();
        assert!(a.constellation.total_variation(&b.constellation) < 1e-9);
    }

    #[test]
    fn shaped_dominates_uniform() {
        for k in 0..=20 {
            let snr = 5.0 + k as f64;
            let (s, u) = shaped_vs_uniform_mi(8, SnrDb(snr)).unwrap();
            assert!(s >= u, "{snr} dB: {s} < {u}");
        }
        let (s, u) = shaped_vs_uniform_mi(8, SnrDb(60.0)).unwrap();
        assert!((s - 6.0).abs() < 1e-9 && (u - 6.0).abs() < 1e-9);
    }
}
