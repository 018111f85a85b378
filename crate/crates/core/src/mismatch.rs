//! Robustness of shaping to SNR mismatch: the (channel SNR x shaping SNR)
//! penalty map and its quantization into a small PMF lookup table.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::constellation::check_order;
use crate::error::{Error, Result};
use crate::gain::UniformInverse;
use crate::par::Execution;
use crate::shaping::{optimize_many, ShapingSolution};
use crate::snr::db_grid;

/// Grid values closer than this are treated as equal.
const GRID_EPS: f64 = 1e-6;
/// Slack on threshold comparisons.
const PENALTY_EPS: f64 = 1e-9;

/// Default resolution of the shaping SNRs a lookup table may use.
pub const DEFAULT_CANDIDATE_STEP_DB: f64 = 0.5;

/// Dense penalty map. `penalty_db[i][j]` is the matched gain at channel
/// SNR `i` minus the gain of the PMF optimized for shaping SNR `j`.
/// Rows where uniform QAM is saturated are flagged and hold zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMap {
    pub order: usize,
    pub channel_grid_db: Vec<f64>,
    pub shaping_grid_db: Vec<f64>,
    pub penalty_db: Vec<Vec<f64>>,
    pub saturated: Vec<bool>,
    /// Matched gain per channel SNR (`None` where saturated).
    pub matched_gain_db: Vec<Option<f64>>,
    /// Optimized input for each shaping SNR.
    pub solutions: Vec<ShapingSolution>,
}

/// Builds the map over `lo..=hi` in steps of `step` for both axes.
///
/// Each shaping SNR is optimized once. Rows are independent and run
/// through `exec`; every cell is a pure function of its coordinates, so
/// the result does not depend on scheduling.
pub fn build_gain_map(order: usize, lo_db: f64, hi_db: f64, step_db: f64, exec: Execution) -> Result<GainMap> {
    check_order(order)?;
    if !(lo_db <= hi_db) || !(step_db > 0.0) || !lo_db.is_finite() || !hi_db.is_finite() {
        return Err(Error::InvalidArgument("need finite lo <= hi and step > 0".into()));
    }
    let grid = db_grid(lo_db, hi_db, step_db);
    let solutions = optimize_many(order, &grid, exec)?;
    let inverse = UniformInverse::new(order)?;

    let rows = exec.map_range(grid.len(), |i| -> Result<(Vec<f64>, bool, Option<f64>)> {
        let channel = grid[i];
        if inverse.is_saturated(channel) {
            return Ok((vec![0.0; grid.len()], true, None));
        }
        let matched = inverse.gain(&solutions[i].constellation, channel, None)?;
        let mut hint = channel + matched;
        let mut row = Vec::with_capacity(grid.len());
        for (j, sol) in solutions.iter().enumerate() {
            let g = if j == i {
                matched
            } else {
                inverse.gain(&sol.constellation, channel, Some(hint))?
            };
            hint = channel + g;
            row.push(matched - g);
        }
        Ok((row, false, Some(matched)))
    });

    let mut penalty_db = Vec::with_capacity(grid.len());
    let mut saturated = Vec::with_capacity(grid.len());
    let mut matched_gain_db = Vec::with_capacity(grid.len());
    for r in rows {
        let (row, sat, matched) = r?;
        penalty_db.push(row);
        saturated.push(sat);
        matched_gain_db.push(matched);
    }
    Ok(GainMap {
        order,
        channel_grid_db: grid.clone(),
        shaping_grid_db: grid,
        penalty_db,
        saturated,
        matched_gain_db,
        solutions,
    })
}

impl GainMap {
    pub fn len(&self) -> usize {
        self.channel_grid_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channel_grid_db.is_empty()
    }

    /// Index of a shaping SNR on the grid.
    pub fn shaping_index(&self, snr_db: f64) -> Result<usize> {
        self.shaping_grid_db
            .iter()
            .position(|&s| (s - snr_db).abs() < GRID_EPS)
            .ok_or_else(|| Error::InvalidArgument(format!("{snr_db} dB is not on the shaping grid")))
    }

    pub fn penalty(&self, channel_idx: usize, shaping_idx: usize) -> f64 {
        self.penalty_db[channel_idx][shaping_idx]
    }

    /// Grid indices `(lo, hi)` of the maximal contiguous channel range
    /// around the diagonal where column `j` stays within `threshold`.
    pub fn coverage_indices(&self, j: usize, threshold_db: f64) -> (usize, usize) {
        let ok = |i: usize| self.penalty_db[i][j] <= threshold_db + PENALTY_EPS;
        let (mut lo, mut hi) = (j, j);
        while lo > 0 && ok(lo - 1) {
            lo -= 1;
        }
        while hi + 1 < self.len() && ok(hi + 1) {
            hi += 1;
        }
        (lo, hi)
    }

    /// Largest penalty of column `j` over channel indices `lo..=hi`.
    pub fn worst_penalty(&self, j: usize, lo: usize, hi: usize) -> f64 {
        (lo..=hi)
            .map(|i| self.penalty_db[i][j])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Matrix CSV: header `channel_snr_db` then one column per shaping
    /// SNR; one row per channel SNR.
    pub fn write_matrix_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["channel_snr_db".to_string()];
        header.extend(self.shaping_grid_db.iter().map(|s| s.to_string()));
        w.write_record(&header).map_err(io_err)?;
        for (c, row) in self.channel_grid_db.iter().zip(&self.penalty_db) {
            let mut rec = vec![c.to_string()];
            rec.extend(row.iter().map(|p| p.to_string()));
            w.write_record(&rec).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Long-format CSV with columns `channel,shaping,penalty`.
    pub fn write_long_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["channel", "shaping", "penalty"]).map_err(io_err)?;
        for (c, row) in self.channel_grid_db.iter().zip(&self.penalty_db) {
            for (s, p) in self.shaping_grid_db.iter().zip(row) {
                w.write_record([c.to_string(), s.to_string(), p.to_string()])
                    .map_err(io_err)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Channel-SNR interval (dB) around the diagonal that shaping SNR
/// `shaping_snr_db` covers within `threshold_db`.
pub fn coverage_interval(map: &GainMap, shaping_snr_db: f64, threshold_db: f64) -> Result<(f64, f64)> {
    if !(threshold_db > 0.0) {
        return Err(Error::InvalidArgument("threshold must be > 0".into()));
    }
    let j = map.shaping_index(shaping_snr_db)?;
    let (lo, hi) = map.coverage_indices(j, threshold_db);
    Ok((map.channel_grid_db[lo], map.channel_grid_db[hi]))
}

/// One lookup-table row. Serializes with `levels` / `pmf` keys so every
/// entry also parses as a constellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupEntry {
    pub channel_snr_lo_db: f64,
    pub channel_snr_hi_db: f64,
    pub shaping_snr_db: f64,
    pub pmf: Vec<f64>,
    #[serde(rename = "levels")]
    pub unit_energy_levels: Vec<f64>,
    pub max_penalty_db: f64,
}

/// Lookup table whose intervals tile the channel grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PmfLookupTable {
    pub entries: Vec<LookupEntry>,
}

impl PmfLookupTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Options for [`quantize_pmfs_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizeOptions {
    /// Preferred spacing of table shaping SNRs. Used whenever it achieves
    /// the same entry count as the full grid; `None` uses every grid point.
    pub candidate_step_db: Option<f64>,
}

impl Default for QuantizeOptions {
    fn default() -> Self {
        QuantizeOptions {
            candidate_step_db: Some(DEFAULT_CANDIDATE_STEP_DB),
        }
    }
}

/// Minimum-size lookup table with the default options.
pub fn quantize_pmfs(map: &GainMap, threshold_db: f64) -> Result<PmfLookupTable> {
    quantize_pmfs_with(map, threshold_db, QuantizeOptions::default())
}

/// Greedy interval cover of the channel grid from the low end.
///
/// At each uncovered channel SNR the candidate whose coverage interval
/// contains it and reaches furthest up is taken; ties on reach go to the
/// candidate with the smallest worst-case penalty over the new interval.
/// Greedy is optimal for interval covering, so the entry count is minimal
/// over the candidate set. Restricted candidates are only used when they
/// match the full-grid count.
pub fn quantize_pmfs_with(map: &GainMap, threshold_db: f64, opts: QuantizeOptions) -> Result<PmfLookupTable> {
    if !(threshold_db > 0.0) {
        return Err(Error::InvalidArgument("threshold must be > 0".into()));
    }
    if map.is_empty() {
        return Err(Error::InvalidArgument("empty map".into()));
    }
    let all: Vec<usize> = (0..map.len()).collect();
    let full = greedy_cover(map, threshold_db, &all)?;
    let picks = match opts.candidate_step_db {
        Some(step) if step > 0.0 => {
            let coarse: Vec<usize> = all
                .iter()
                .copied()
                .filter(|&j| {
                    let q = map.shaping_grid_db[j] / step;
                    (q - q.round()).abs() * step < GRID_EPS
                })
                .collect();
            match greedy_cover(map, threshold_db, &coarse) {
                Ok(c) if c.len() == full.len() => c,
                _ => full,
            }
        }
        _ => full,
    };
    let entries = picks
        .into_iter()
        .map(|(lo, hi, j)| {
            let sol = &map.solutions[j];
            LookupEntry {
                channel_snr_lo_db: map.channel_grid_db[lo],
                channel_snr_hi_db: map.channel_grid_db[hi],
                shaping_snr_db: map.shaping_grid_db[j],
                pmf: sol.unit_energy.pmf().to_vec(),
                unit_energy_levels: sol.unit_energy.levels().to_vec(),
                max_penalty_db: map.worst_penalty(j, lo, hi),
            }
        })
        .collect();
    Ok(PmfLookupTable { entries })
}

// Returns (interval lo, interval hi, column) triples.
fn greedy_cover(map: &GainMap, threshold_db: f64, candidates: &[usize]) -> Result<Vec<(usize, usize, usize)>> {
    let cover: Vec<(usize, (usize, usize))> = candidates
        .iter()
        .map(|&j| (j, map.coverage_indices(j, threshold_db)))
        .collect();
    let mut out = Vec::new();
    let mut next = 0;
    while next < map.len() {
        let reach = cover
            .iter()
            .filter(|(_, (lo, hi))| *lo <= next && next <= *hi)
            .map(|(_, (_, hi))| *hi)
            .max()
            .ok_or_else(|| Error::Infeasible(format!("no candidate covers {} dB", map.channel_grid_db[next])))?;
        let best = cover
            .iter()
            .filter(|(_, (lo, hi))| *lo <= next && *hi == reach)
            .map(|(j, _)| *j)
            .min_by(|&a, &b| {
                map.worst_penalty(a, next, reach)
                    .total_cmp(&map.worst_penalty(b, next, reach))
            })
            .expect("reach came from a covering candidate");
        out.push((next, reach, best));
        next = reach + 1;
    }
    Ok(out)
}
