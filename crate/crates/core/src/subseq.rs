//! Multi-scale subsequences of a video and the containment relation between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A contiguous frame interval `[start, start + length)` of a video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubseqSpec {
    pub start: usize,
    pub length: usize,
}

impl SubseqSpec {
    pub fn new(start: usize, length: usize) -> Self {
        SubseqSpec { start, length }
    }

    /// One past the last frame.
    pub fn end(&self) -> usize {
        self.start + self.length
    }

    /// True when `child` lies inside `self` and is strictly shorter.
    pub fn strictly_contains(&self, child: &SubseqSpec) -> bool {
        self.start <= child.start && child.end() <= self.end() && child.length < self.length
    }
}

/// Window lengths and start stride used to cut a video into subsequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingScheme {
    scales: Vec<usize>,
    stride: usize,
}

pub const DEFAULT_STRIDE: usize = 2;
pub const DEFAULT_NUM_SCALES: usize = 10;

impl SamplingScheme {
    /// Scales must be strictly ascending and positive; stride positive.
    pub fn new(scales: Vec<usize>, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if scales.is_empty() || scales[0] == 0 {
            return Err(Error::Config("scales must be non-empty and positive".into()));
        }
        if scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("scales must be strictly ascending".into()));
        }
        Ok(SamplingScheme { scales, stride })
    }

    /// Ten scales `round(n * k / 10)`, `k = 1..=10`, deduplicated, stride 2.
    ///
    /// For a 100-frame video this is 10, 20, ..., 100.
    pub fn proportional(n_frames: usize) -> Self {
        let mut scales: Vec<usize> = (1..=DEFAULT_NUM_SCALES)
            .map(|k| (n_frames * k + DEFAULT_NUM_SCALES / 2) / DEFAULT_NUM_SCALES)
            .filter(|&s| s >= 1)
            .collect();
        scales.dedup();
        if scales.is_empty() {
            scales.push(1);
        }
        SamplingScheme {
            scales,
            stride: DEFAULT_STRIDE,
        }
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn stride(&self) -> usize {
        self.stride
    }
}

/// All windows of every scale that fits, ordered by (scale, start).
pub fn enumerate_subsequences(n_frames: usize, scheme: &SamplingScheme) -> Result<Vec<SubseqSpec>> {
    let mut out = Vec::new();
    for &s in scheme.scales.iter().filter(|&&s| s <= n_frames) {
        out.extend(
            (0..=n_frames - s)
                .step_by(scheme.stride)
                .map(|start| SubseqSpec::new(start, s)),
        );
    }
    if out.is_empty() {
        return Err(Error::Domain(format!(
            "no scale in {:?} fits a {}-frame video",
            scheme.scales, n_frames
        )));
    }
    Ok(out)
}

/// Every `(parent, child)` index pair with the child strictly inside the parent.
pub fn contained_pairs(pool: &[SubseqSpec]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (t, parent) in pool.iter().enumerate() {
        for (j, child) in pool.iter().enumerate() {
            if parent.strictly_contains(child) {
                pairs.push((t, j));
            }
        }
    }
    pairs
}

/// `children[t]` lists the pool indices strictly contained in `pool[t]`, in pool order.
pub fn children_by_parent(pool: &[SubseqSpec]) -> Vec<Vec<usize>> {
    pool.iter()
        .map(|parent| {
            pool.iter()
                .enumerate()
                .filter(|(_, c)| parent.strictly_contains(c))
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// `1 - child_len / parent_len`, defined for `0 < child_len < parent_len`.
pub fn adaptive_margin(parent_len: usize, child_len: usize) -> Result<f64> {
    if child_len == 0 || child_len >= parent_len {
        return Err(Error::Domain(format!(
            "adaptive margin needs 0 < child ({child_len}) < parent ({parent_len})"
        )));
    }
    Ok(1.0 - child_len as f64 / parent_len as f64)
}
