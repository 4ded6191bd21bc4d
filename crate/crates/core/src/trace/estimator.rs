//! Critical-velocity estimate: the most populated speed bin of the pooled probes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sampling::SampleTable;
use crate::error::{Error, Result};

/// Bins per `p90 − p10` spread.
pub const BINS_PER_SPREAD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    /// Centre of the most populated bin [m/s].
    pub speed: f64,
    pub bin_width: f64,
    /// Non-empty bins in ascending order.
    pub histogram: Vec<Bin>,
    pub samples: usize,
    /// Every pooled speed was identical; `speed` is that value.
    pub degenerate: bool,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let t = pos - lo as f64;
    sorted[lo] + t * (sorted[hi] - sorted[lo])
}

/// Histogram mode of speeds. Ties go to the lower bin.
pub fn histogram_mode(speeds: &[f64]) -> Result<CriticalEstimate> {
    if speeds.is_empty() {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    let mut sorted = speeds.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    if min == max {
        return Ok(CriticalEstimate {
            speed: min,
            bin_width: 0.0,
            histogram: vec![Bin {
                lower: min,
                upper: max,
                count: sorted.len(),
            }],
            samples: sorted.len(),
            degenerate: true,
        });
    }
    let mut width = (quantile(&sorted, 0.9) - quantile(&sorted, 0.1)) / BINS_PER_SPREAD;
    if !(width > 0.0) {
        // most samples coincide; fall back to the full range
        width = (max - min) / BINS_PER_SPREAD;
    }
    let last = ((max - min) / width).floor() as u64;
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for &s in &sorted {
        let k = (((s - min) / width).floor() as u64).min(last);
        *counts.entry(k).or_default() += 1;
    }
    let (&mode, _) = counts
        .iter()
        .fold(None::<(&u64, &usize)>, |best, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
        .expect("at least one bin");
    let histogram = counts
        .iter()
        .map(|(&k, &count)| Bin {
            lower: min + k as f64 * width,
            upper: min + (k + 1) as f64 * width,
            count,
        })
        .collect();
    Ok(CriticalEstimate {
        speed: min + (mode as f64 + 0.5) * width,
        bin_width: width,
        histogram,
        samples: sorted.len(),
        degenerate: false,
    })
}

/// Pools the speeds of every probe outside solids across `tables` and
/// returns their histogram mode.
pub fn estimate_critical_velocity(tables: &[SampleTable]) -> Result<CriticalEstimate> {
    let speeds: Vec<f64> = tables
        .iter()
        .flat_map(|t| t.probes())
        .filter(|p| !p.in_solid)
        .map(|p| p.speed)
        .collect();
    histogram_mode(&speeds)
}
