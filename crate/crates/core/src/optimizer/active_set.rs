use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Percentile interval `(lo, hi]`. Rank percentiles are always positive, so
/// a band starting at 0 also covers the closed interval `[0, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Band { lo, hi }
    }

    pub const fn full() -> Self {
        Band::new(0.0, 100.0)
    }

    /// The bottom 30% and the 60% to 90% ranks.
    pub fn default_bands() -> Vec<Band> {
        vec![Band::new(0.0, 30.0), Band::new(60.0, 90.0)]
    }

    /// Whether rank `j` (0-based) of `g` has its percentile `(j+1)/g * 100`
    /// inside the band. Compared as `(j+1) * 100` against `bound * g` so that
    /// exact boundaries such as 30% of 10 are not lost to rounding.
    pub fn contains_rank(&self, j: usize, g: usize) -> bool {
        let p = ((j + 1) * 100) as f64;
        let g = g as f64;
        p > self.lo * g && p <= self.hi * g
    }

    pub fn validate_all(bands: &[Band]) -> Result<()> {
        let bad = |m: String| Err(Error::OptimizerConfig(m));
        if bands.is_empty() {
            return bad("length_bands must not be empty".into());
        }
        for b in bands {
            if !(b.lo.is_finite() && b.hi.is_finite() && 0.0 <= b.lo && b.lo < b.hi && b.hi <= 100.0) {
                return bad(format!("band ({}, {}] must satisfy 0 <= lo < hi <= 100", b.lo, b.hi));
            }
        }
        let mut sorted = bands.to_vec();
        sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in sorted.windows(2) {
            if w[1].lo < w[0].hi {
                return bad(format!(
                    "bands ({}, {}] and ({}, {}] overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    /// Retained indices in ascending order.
    pub indices: Vec<usize>,
    /// Set when no rank fell in any band and the full group was used.
    pub fallback: bool,
}

/// Rank trajectories by length (stable on the original index) and keep those
/// whose rank percentile lies in a band. An empty selection falls back to
/// the whole group and is flagged.
pub fn select_active_set(token_lens: &[usize], bands: &[Band]) -> Result<ActiveSet> {
    let g = token_lens.len();
    if g == 0 {
        return Err(Error::Group("empty group".into()));
    }
    if token_lens.contains(&0) {
        return Err(Error::Group("trajectory lengths must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by_key(|&i| token_lens[i]);
    let mut indices: Vec<usize> = order
        .iter()
        .enumerate()
        .filter(|&(j, _)| bands.iter().any(|b| b.contains_rank(j, g)))
        .map(|(_, &i)| i)
        .collect();
    indices.sort_unstable();
    if indices.is_empty() {
        return Ok(ActiveSet {
            indices: (0..g).collect(),
            fallback: true,
        });
    }
    Ok(ActiveSet {
        indices,
        fallback: false,
    })
}
