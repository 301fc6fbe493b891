//! Frame sampling, latent frame-selection masks, pooling and the class-blocked
//! joint feature map.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqdata::FrameSequence;
use crate::subseq::SubseqSpec;

pub const DEFAULT_SAMPLED_FRAMES: usize = 10;
pub const DEFAULT_SELECTED_FRAMES: usize = 5;

/// A sorted choice of `k` distinct positions among the `l` sampled frames.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SelectionMask {
    selected: Vec<usize>,
}

impl SelectionMask {
    pub fn new(mut selected: Vec<usize>, l: usize) -> Result<Self> {
        selected.sort_unstable();
        if selected.is_empty() {
            return Err(Error::Domain("a selection mask must select at least one frame".into()));
        }
        if selected.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("selection mask has repeated indices".into()));
        }
        if let Some(&last) = selected.last() {
            if last >= l {
                return Err(Error::Domain(format!("mask index {last} outside [0, {l})")));
            }
        }
        Ok(SelectionMask { selected })
    }

    /// Selects all `l` positions.
    pub fn full(l: usize) -> Self {
        SelectionMask {
            selected: (0..l).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

impl fmt::Display for SelectionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.selected.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingKind {
    #[default]
    Max,
    Mean,
}

impl FromStr for PoolingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(PoolingKind::Max),
            "mean" => Ok(PoolingKind::Mean),
            other => Err(Error::Config(format!("unknown pooling {other:?}, expected max|mean"))),
        }
    }
}

impl fmt::Display for PoolingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolingKind::Max => "max",
            PoolingKind::Mean => "mean",
        })
    }
}

/// `l` frame indices spread evenly over `spec`, both endpoints included:
/// `start + floor(j * (length - 1) / (l - 1))`.
pub fn sample_frames_uniform(spec: SubseqSpec, l: usize) -> Result<Vec<usize>> {
    if l < 2 {
        return Err(Error::Domain(format!("need at least 2 sampled frames, got {l}")));
    }
    if spec.length == 0 {
        return Err(Error::Domain("empty subsequence".into()));
    }
    let span = spec.length - 1;
    Ok((0..l).map(|j| spec.start + j * span / (l - 1)).collect())
}

/// The `l` sampled frames of `spec`, copied into one row-major `l x d` buffer.
pub fn gather_sampled(seq: &FrameSequence, spec: SubseqSpec, l: usize) -> Result<Vec<f64>> {
    if spec.end() > seq.len() {
        return Err(Error::Domain(format!(
            "subsequence [{}, {}) exceeds a {}-frame video",
            spec.start,
            spec.end(),
            seq.len()
        )));
    }
    let idx = sample_frames_uniform(spec, l)?;
    let mut out = Vec::with_capacity(l * seq.dim());
    for i in idx {
        out.extend_from_slice(seq.frame(i));
    }
    Ok(out)
}

/// All `C(l, k)` masks in lexicographic order.
pub fn enumerate_masks(l: usize, k: usize) -> Result<Vec<SelectionMask>> {
    Ok(MaskTable::new(l, k)?
        .iter()
        .map(|s| SelectionMask { selected: s.to_vec() })
        .collect())
}

/// The same enumeration as [`enumerate_masks`], stored flat for inner loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskTable {
    l: usize,
    k: usize,
    flat: Vec<usize>,
}

impl MaskTable {
    pub fn new(l: usize, k: usize) -> Result<Self> {
        if k == 0 || k > l {
            return Err(Error::Domain(format!("selection size {k} outside 1..={l}")));
        }
        let mut flat = Vec::new();
        let mut cur: Vec<usize> = (0..k).collect();
        loop {
            flat.extend_from_slice(&cur);
            // advance to the next combination in lexicographic order
            let mut i = k;
            while i > 0 && cur[i - 1] == l - k + (i - 1) {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            cur[i - 1] += 1;
            for j in i..k {
                cur[j] = cur[j - 1] + 1;
            }
        }
        Ok(MaskTable { l, k, flat })
    }

    /// The single all-frames mask.
    pub fn full(l: usize) -> Self {
        MaskTable {
            l,
            k: l,
            flat: (0..l).collect(),
        }
    }

    pub fn sampled(&self) -> usize {
        self.l
    }

    pub fn selected(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn get(&self, m: usize) -> &[usize] {
        &self.flat[m * self.k..(m + 1) * self.k]
    }

    pub fn mask(&self, m: usize) -> SelectionMask {
        SelectionMask {
            selected: self.get(m).to_vec(),
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.flat.chunks_exact(self.k)
    }
}

/// Pools the selected rows of a row-major `rows x d` buffer into `out`.
pub(crate) fn pool_rows(rows: &[f64], d: usize, selected: &[usize], kind: PoolingKind, out: &mut [f64]) {
    debug_assert_eq!(out.len(), d);
    let first = selected[0];
    out.copy_from_slice(&rows[first * d..(first + 1) * d]);
    match kind {
        PoolingKind::Max => {
            for &s in &selected[1..] {
                for (o, x) in out.iter_mut().zip(&rows[s * d..(s + 1) * d]) {
                    if *x > *o {
                        *o = *x;
                    }
                }
            }
        }
        PoolingKind::Mean => {
            for &s in &selected[1..] {
                for (o, x) in out.iter_mut().zip(&rows[s * d..(s + 1) * d]) {
                    *o += *x;
                }
            }
            let inv = 1.0 / selected.len() as f64;
            out.iter_mut().for_each(|o| *o *= inv);
        }
    }
}

/// Elementwise max or mean over the frames picked by `mask`.
pub fn pool<F: AsRef<[f64]>>(frames: &[F], mask: &SelectionMask, kind: PoolingKind) -> Result<Vec<f64>> {
    if mask.is_empty() {
        return Err(Error::Domain("cannot pool an empty selection".into()));
    }
    let d = frames
        .first()
        .map(|f| f.as_ref().len())
        .ok_or_else(|| Error::Domain("no frames to pool".into()))?;
    let mut rows = Vec::with_capacity(frames.len() * d);
    for f in frames {
        let f = f.as_ref();
        if f.len() != d {
            return Err(Error::Dimension {
                expected: d,
                found: f.len(),
            });
        }
        rows.extend_from_slice(f);
    }
    if let Some(&bad) = mask.indices().iter().find(|&&i| i >= frames.len()) {
        return Err(Error::Domain(format!(
            "mask index {bad} outside {} frames",
            frames.len()
        )));
    }
    let mut out = vec![0.0; d];
    pool_rows(&rows, d, mask.indices(), kind, &mut out);
    Ok(out)
}

/// `K * d` vector that is zero except for block `y`, which holds `pooled`.
pub fn joint_feature(pooled: &[f64], y: usize, num_classes: usize) -> Result<Vec<f64>> {
    if y >= num_classes {
        return Err(Error::Domain(format!("label {y} outside [0, {num_classes})")));
    }
    let d = pooled.len();
    let mut psi = vec![0.0; num_classes * d];
    psi[y * d..(y + 1) * d].copy_from_slice(pooled);
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_sampling() {
        assert_eq!(
            sample_frames_uniform(SubseqSpec::new(0, 20), 10).unwrap(),
            vec![0, 2, 4, 6, 8, 10, 12, 14, 16, 19]
        );
        assert_eq!(
            sample_frames_uniform(SubseqSpec::new(5, 10), 10).unwrap(),
            (5..15).collect::<Vec<_>>()
        );
        // floor(j / 3) for j = 0..4
        assert_eq!(
            sample_frames_uniform(SubseqSpec::new(0, 2), 4).unwrap(),
            vec![0, 0, 0, 1]
        );
        assert!(sample_frames_uniform(SubseqSpec::new(0, 2), 1).is_err());
    }

    #[test]
    fn mask_enumeration() {
        let m = enumerate_masks(10, 5).unwrap();
        assert_eq!(m.len(), 252);
        assert_eq!(m[0].indices(), &[0, 1, 2, 3, 4]);
        assert_eq!(m[251].indices(), &[5, 6, 7, 8, 9]);
        assert!(m.windows(2).all(|w| w[0] < w[1]));

        let two = enumerate_masks(2, 1).unwrap();
        assert_eq!(two[0].indices(), &[0]);
        assert_eq!(two[1].indices(), &[1]);

        let full = enumerate_masks(3, 3).unwrap();
        assert_eq!(full, vec![SelectionMask::full(3)]);

        assert!(enumerate_masks(3, 0).is_err());
        assert!(enumerate_masks(3, 4).is_err());
    }

    #[test]
    fn pooling_examples() {
        let frames = [vec![1.0, 0.0], vec![0.0, 2.0]];
        let all = SelectionMask::full(2);
        assert_eq!(pool(&frames, &all, PoolingKind::Max).unwrap(), vec![1.0, 2.0]);
        assert_eq!(pool(&frames, &all, PoolingKind::Mean).unwrap(), vec![0.5, 1.0]);
        let one = SelectionMask::new(vec![1], 2).unwrap();
        for kind in [PoolingKind::Max, PoolingKind::Mean] {
            assert_eq!(pool(&frames, &one, kind).unwrap(), frames[1]);
        }
        assert!(SelectionMask::new(vec![], 2).is_err());
        assert!(SelectionMask::new(vec![2], 2).is_err());
    }

    #[test]
    fn joint_feature_blocks() {
        assert_eq!(
            joint_feature(&[1.0, 2.0], 1, 3).unwrap(),
            vec![0.0, 0.0, 1.0, 2.0, 0.0, 0.0]
        );
        assert_eq!(joint_feature(&[1.0, 2.0], 0, 3).unwrap()[..2], [1.0, 2.0]);
        assert!(joint_feature(&[1.0], 3, 3).is_err());
        let a = joint_feature(&[1.0, 2.0], 0, 2).unwrap();
        let b = joint_feature(&[3.0, 4.0], 1, 2).unwrap();
        assert_eq!(a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>(), 0.0);
    }

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn mask_counts_match_binomial_by_brute_force() {
        for l in 1..=12 {
            for k in 1..=l {
                // brute force: subsets of {0..l} with popcount k
                let brute = (0u32..(1 << l)).filter(|b| b.count_ones() as usize == k).count();
                let masks = enumerate_masks(l, k).unwrap();
                assert_eq!(masks.len(), brute);
                assert_eq!(masks.len(), binomial(l, k));
            }
        }
    }

    proptest! {
        #[test]
        fn max_pool_is_monotone_in_selection(
            frames in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 2..8),
            extra in 0usize..8,
        ) {
            let l = frames.len();
            let small = SelectionMask::new(vec![0], l).unwrap();
            let mut bigger = vec![0];
            if extra % l != 0 { bigger.push(extra % l); }
            let big = SelectionMask::new(bigger, l).unwrap();
            let a = pool(&frames, &small, PoolingKind::Max).unwrap();
            let b = pool(&frames, &big, PoolingKind::Max).unwrap();
            prop_assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
        }

        #[test]
        fn joint_feature_is_linear(x in proptest::collection::vec(-5.0f64..5.0, 1..6), alpha in -3.0f64..3.0, y in 0usize..4) {
            let scaled: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let lhs = joint_feature(&scaled, y, 4).unwrap();
            let rhs: Vec<f64> = joint_feature(&x, y, 4).unwrap().into_iter().map(|v| alpha * v).collect();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
