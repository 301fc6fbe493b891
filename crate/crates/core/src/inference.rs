//! Latent-maximised scoring and the argmax problems used in training and prediction.
//!
//! Every maximisation is an exhaustive scan. Ties go to the smallest label, then to
//! the lexicographically smallest mask, then to the earliest candidate subsequence.

use crate::error::{Error, Result};
use crate::featmap::{gather_sampled, pool_rows, MaskTable, PoolingKind, SelectionMask};
use crate::model::{ModelParams, TrainedModel};
use crate::seqdata::FrameSequence;
use crate::subseq::{adaptive_margin, SubseqSpec};

/// The mask domain `h` ranges over, plus how selected frames are pooled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentSpace {
    masks: MaskTable,
    pooling: PoolingKind,
}

impl LatentSpace {
    /// All `C(l, k)` selections of the `l` sampled frames.
    pub fn new(l: usize, k: usize, pooling: PoolingKind) -> Result<Self> {
        if l < 2 {
            return Err(Error::Domain(format!("need at least 2 sampled frames, got {l}")));
        }
        Ok(LatentSpace {
            masks: MaskTable::new(l, k)?,
            pooling,
        })
    }

    /// The single all-frames selection, for learners without latent selection.
    pub fn full(l: usize, pooling: PoolingKind) -> Result<Self> {
        Self::new(l, l, pooling)
    }

    pub fn for_model(model: &TrainedModel) -> Result<Self> {
        Self::new(model.sampled, model.selected, model.pooling)
    }

    pub fn masks(&self) -> &MaskTable {
        &self.masks
    }

    pub fn pooling(&self) -> PoolingKind {
        self.pooling
    }

    pub fn sampled(&self) -> usize {
        self.masks.sampled()
    }

    pub fn selected(&self) -> usize {
        self.masks.selected()
    }

    /// Gathers the `l` sampled frames of `spec`.
    pub fn sample(&self, video: &FrameSequence, spec: SubseqSpec) -> Result<Vec<f64>> {
        gather_sampled(video, spec, self.sampled())
    }

    /// Pooled feature of mask number `m` over a sampled buffer.
    pub fn pooled(&self, sampled: &[f64], d: usize, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        pool_rows(sampled, d, self.masks.get(m), self.pooling, &mut out);
        out
    }
}

/// Best score of one class and the index of the mask attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassBest {
    pub score: f64,
    pub mask: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrediction {
    pub label: usize,
    pub mask: SelectionMask,
    pub score: f64,
}

/// Best contained child of a parent subsequence under the score-plus-margin criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainedBest {
    pub child: SubseqSpec,
    /// Position of `child` in the candidate pool.
    pub index: usize,
    pub mask: SelectionMask,
    /// Child score plus adaptive margin.
    pub value: f64,
}

fn check_sampled(model: &ModelParams, space: &LatentSpace, sampled: &[f64]) -> Result<()> {
    let expect = space.sampled() * model.dim();
    if sampled.len() != expect {
        return Err(Error::Dimension {
            expected: expect,
            found: sampled.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fills `out[y]` with `max_h w_y . pool(sampled, h)` for every class.
pub(crate) fn best_per_class_into(
    model: &ModelParams,
    space: &LatentSpace,
    sampled: &[f64],
    buf: &mut [f64],
    out: &mut [ClassBest],
) {
    let d = model.dim();
    for (m, sel) in space.masks.iter().enumerate() {
        pool_rows(sampled, d, sel, space.pooling, buf);
        for (y, best) in out.iter_mut().enumerate() {
            let s = dot(model.block(y), buf);
            if m == 0 || s > best.score {
                *best = ClassBest { score: s, mask: m };
            }
        }
    }
}

/// Latent-maximised score of every class over one sampled subsequence.
pub fn best_per_class(model: &ModelParams, space: &LatentSpace, sampled: &[f64]) -> Result<Vec<ClassBest>> {
    check_sampled(model, space, sampled)?;
    let mut buf = vec![0.0; model.dim()];
    let mut out = vec![ClassBest { score: 0.0, mask: 0 }; model.num_classes()];
    best_per_class_into(model, space, sampled, &mut buf, &mut out);
    Ok(out)
}

/// Score of a single class `y` restricted to `f_w(x, y) = max_h w . psi(x, y, h)`.
pub(crate) fn best_for_class(model: &ModelParams, space: &LatentSpace, sampled: &[f64], y: usize, buf: &mut [f64]) -> ClassBest {
    let d = model.dim();
    let w = model.block(y);
    let mut best = ClassBest {
        score: f64::NEG_INFINITY,
        mask: 0,
    };
    for (m, sel) in space.masks.iter().enumerate() {
        pool_rows(sampled, d, sel, space.pooling, buf);
        let s = dot(w, buf);
        if m == 0 || s > best.score {
            best = ClassBest { score: s, mask: m };
        }
    }
    best
}

fn check_label(model: &ModelParams, y: usize) -> Result<()> {
    if y >= model.num_classes() {
        return Err(Error::Domain(format!(
            "label {y} outside [0, {})",
            model.num_classes()
        )));
    }
    Ok(())
}

/// `f_w(x, y) = max_h w . psi(x, y, h)` with its maximising mask.
pub fn score(model: &ModelParams, space: &LatentSpace, sampled: &[f64], y: usize) -> Result<(f64, SelectionMask)> {
    check_sampled(model, space, sampled)?;
    check_label(model, y)?;
    let mut buf = vec![0.0; model.dim()];
    let b = best_for_class(model, space, sampled, y, &mut buf);
    Ok((b.score, space.masks.mask(b.mask)))
}

/// Joint argmax over `(y, h)` on the `l` frames sampled from the whole video.
pub fn predict(model: &ModelParams, space: &LatentSpace, video: &FrameSequence) -> Result<ScoredPrediction> {
    model.check_dim(video.dim())?;
    let sampled = space.sample(video, SubseqSpec::new(0, video.len()))?;
    let per_class = best_per_class(model, space, &sampled)?;
    let (label, best) = argmax_class(&per_class, None).expect("at least one class");
    Ok(ScoredPrediction {
        label,
        mask: space.masks.mask(best.mask),
        score: best.score,
    })
}

/// Highest-scoring class, skipping `exclude`; first index wins ties.
pub(crate) fn argmax_class(per_class: &[ClassBest], exclude: Option<usize>) -> Option<(usize, ClassBest)> {
    let mut best: Option<(usize, ClassBest)> = None;
    for (y, b) in per_class.iter().enumerate() {
        if Some(y) == exclude {
            continue;
        }
        match best {
            Some((_, cur)) if b.score <= cur.score => {}
            _ => best = Some((y, *b)),
        }
    }
    best
}

/// Most-violating wrong label: `argmax_{y != y_true, h} w . psi(x, y, h)`.
pub fn best_wrong_label(
    model: &ModelParams,
    space: &LatentSpace,
    sampled: &[f64],
    y_true: usize,
) -> Result<(usize, SelectionMask, f64)> {
    if model.num_classes() < 2 {
        return Err(Error::Domain("a wrong label needs at least 2 classes".into()));
    }
    check_label(model, y_true)?;
    let per_class = best_per_class(model, space, sampled)?;
    let (y, b) = argmax_class(&per_class, Some(y_true)).expect("K >= 2");
    Ok((y, space.masks.mask(b.mask), b.score))
}

/// Best-scoring mask for the true label, `argmax_h w . psi(x, y_true, h)`.
pub fn best_mask_true(
    model: &ModelParams,
    space: &LatentSpace,
    sampled: &[f64],
    y_true: usize,
) -> Result<(SelectionMask, f64)> {
    let (s, m) = score(model, space, sampled, y_true)?;
    Ok((m, s))
}

/// `argmax_{j: pool[j] inside parent, h} [w . psi(x^j, y_true, h) + margin(parent, j)]`.
///
/// Returns `None` when no pool member is strictly contained in `parent`.
pub fn best_contained_subseq(
    model: &ModelParams,
    space: &LatentSpace,
    video: &FrameSequence,
    parent: SubseqSpec,
    pool: &[SubseqSpec],
    y_true: usize,
) -> Result<Option<ContainedBest>> {
    model.check_dim(video.dim())?;
    check_label(model, y_true)?;
    let mut buf = vec![0.0; model.dim()];
    let mut best: Option<(usize, ClassBest, f64)> = None;
    for (j, child) in pool.iter().enumerate() {
        if !parent.strictly_contains(child) {
            continue;
        }
        let sampled = space.sample(video, *child)?;
        let b = best_for_class(model, space, &sampled, y_true, &mut buf);
        let value = b.score + adaptive_margin(parent.length, child.length)?;
        if best.as_ref().is_none_or(|(_, _, v)| value > *v) {
            best = Some((j, b, value));
        }
    }
    Ok(best.map(|(j, b, value)| ContainedBest {
        child: pool[j],
        index: j,
        mask: space.masks.mask(b.mask),
        value,
    }))
}
