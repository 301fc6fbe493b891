//! The regularised bi-constraint risk, its subgradient, and the ablation flags.
//!
//! For training video `i` and subsequence `t`:
//!
//! ```text
//! R1_it = max_{y != y_i} f(x_it, y) + 1 - f(x_it, y_i)
//! R2_it = max_{j inside t} [f(x_ij, y_i) + margin(t, j)] - f(x_it, y_i)
//! R(w)  = sum_it C1 max(0, R1_it) + C2 max(0, R2_it)
//! J(w)  = 0.5 |w|^2 + R(w)
//! ```
//!
//! with `f(x, y) = max_h w . psi(x, y, h)`. All inner maximisations are redone at
//! every call; nothing is cached across weight vectors.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featmap::{PoolingKind, DEFAULT_SAMPLED_FRAMES, DEFAULT_SELECTED_FRAMES};
use crate::inference::{argmax_class, best_per_class_into, ClassBest, LatentSpace};
use crate::model::ModelParams;
use crate::seqdata::Dataset;
use crate::subseq::{adaptive_margin, children_by_parent, enumerate_subsequences, SamplingScheme, SubseqSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantFlags {
    pub monotonicity_on: bool,
    pub latent_on: bool,
}

impl VariantFlags {
    pub const LBSVM: VariantFlags = VariantFlags {
        monotonicity_on: true,
        latent_on: true,
    };
    pub const BSVM: VariantFlags = VariantFlags {
        monotonicity_on: true,
        latent_on: false,
    };
    pub const SCSVM: VariantFlags = VariantFlags {
        monotonicity_on: false,
        latent_on: false,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub c1: f64,
    pub c2: f64,
    /// Stop once the bundle gap drops below this.
    pub epsilon: f64,
    /// Frames sampled per subsequence.
    pub sampled: usize,
    /// Frames kept by the latent selection.
    pub selected: usize,
    pub max_iter: usize,
    pub pooling: PoolingKind,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            c1: 0.5e-4,
            c2: 0.5e-4,
            epsilon: 0.01,
            sampled: DEFAULT_SAMPLED_FRAMES,
            selected: DEFAULT_SELECTED_FRAMES,
            max_iter: 300,
            pooling: PoolingKind::Max,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 >= 0.0 && self.c2 >= 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::Config("C1 and C2 must be finite and >= 0".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        if self.sampled < 2 {
            return Err(Error::Config("at least 2 frames must be sampled".into()));
        }
        if self.selected == 0 || self.selected > self.sampled {
            return Err(Error::Config(format!(
                "selected frames {} outside 1..={}",
                self.selected, self.sampled
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        Ok(())
    }

    /// The latent domain these settings induce under `flags`.
    pub fn latent_space(&self, flags: VariantFlags) -> Result<LatentSpace> {
        if flags.latent_on {
            LatentSpace::new(self.sampled, self.selected, self.pooling)
        } else {
            LatentSpace::full(self.sampled, self.pooling)
        }
    }
}

/// How each training video is cut into subsequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsampling {
    /// Ten proportional scales per video length, stride 2.
    Proportional,
    /// One scheme for every video.
    Fixed(SamplingScheme),
    /// Every frame on its own (length-1 windows), for frame-level learners.
    Frames,
}

impl Subsampling {
    pub fn pool(&self, n_frames: usize) -> Result<Vec<SubseqSpec>> {
        match self {
            Subsampling::Proportional => {
                enumerate_subsequences(n_frames, &SamplingScheme::proportional(n_frames))
            }
            Subsampling::Fixed(s) => enumerate_subsequences(n_frames, s),
            Subsampling::Frames => Ok((0..n_frames).map(|i| SubseqSpec::new(i, 1)).collect()),
        }
    }
}

/// Precomputed subsequences of one training video.
#[derive(Debug, Clone)]
pub struct VideoTerms {
    pub label: usize,
    pub specs: Vec<SubseqSpec>,
    /// `specs.len()` consecutive `l x d` sampled-frame blocks.
    sampled: Vec<f64>,
    /// Strictly contained children of each subsequence, with their margins.
    children: Vec<Vec<(usize, f64)>>,
}

impl VideoTerms {
    fn sampled_of(&self, t: usize, block: usize) -> &[f64] {
        &self.sampled[t * block..(t + 1) * block]
    }
}

/// Training videos expanded into subsequence terms, ready for risk evaluation.
#[derive(Debug, Clone)]
pub struct RiskProblem {
    num_classes: usize,
    dim: usize,
    flags: VariantFlags,
    space: LatentSpace,
    videos: Vec<VideoTerms>,
}

impl RiskProblem {
    /// Expands every video of `train` (split tags ignored) into its subsequence pool.
    pub fn new(train: &Dataset, subsampling: &Subsampling, flags: VariantFlags, hp: &Hyperparams) -> Result<Self> {
        hp.validate()?;
        train.validate()?;
        let space = hp.latent_space(flags)?;
        let mut videos = Vec::with_capacity(train.videos.len());
        for v in &train.videos {
            let specs = subsampling.pool(v.sequence.len())?;
            let mut sampled = Vec::with_capacity(specs.len() * space.sampled() * train.dim);
            for s in &specs {
                sampled.extend(space.sample(&v.sequence, *s)?);
            }
            let children = if flags.monotonicity_on {
                children_by_parent(&specs)
                    .into_iter()
                    .enumerate()
                    .map(|(t, kids)| {
                        kids.into_iter()
                            .map(|j| adaptive_margin(specs[t].length, specs[j].length).map(|m| (j, m)))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                vec![Vec::new(); specs.len()]
            };
            videos.push(VideoTerms {
                label: v.label,
                specs,
                sampled,
                children,
            });
        }
        Ok(RiskProblem {
            num_classes: train.num_classes,
            dim: train.dim,
            flags,
            space,
            videos,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flags(&self) -> VariantFlags {
        self.flags
    }

    pub fn space(&self) -> &LatentSpace {
        &self.space
    }

    pub fn videos(&self) -> &[VideoTerms] {
        &self.videos
    }

    pub fn num_terms(&self) -> usize {
        self.videos.iter().map(|v| v.specs.len()).sum()
    }

    fn block(&self) -> usize {
        self.space.sampled() * self.dim
    }

    /// Sampled frames of subsequence `t` of video `i`.
    pub fn sampled(&self, i: usize, t: usize) -> &[f64] {
        self.videos[i].sampled_of(t, self.block())
    }
}

/// Latent argmaxes and hinge values of one `(video, subsequence)` term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermRecord {
    pub video: usize,
    pub subseq: usize,
    pub true_score: f64,
    /// Mask index maximising the true-label score.
    pub true_mask: usize,
    pub wrong_label: usize,
    pub wrong_mask: usize,
    pub r1: f64,
    /// `(child index, child mask index, R2)`; absent when the term has no contained child
    /// or monotonicity is off.
    pub r2: Option<(usize, usize, f64)>,
}

impl TermRecord {
    pub fn r1_active(&self) -> bool {
        self.r1 >= 0.0
    }

    pub fn r2_active(&self) -> bool {
        matches!(self.r2, Some((_, _, r)) if r >= 0.0)
    }

    /// Slack of the classification constraints, `max(0, R1)`.
    pub fn alpha(&self) -> f64 {
        self.r1.max(0.0)
    }

    /// Slack of the monotonicity constraints, `max(0, R2)` (0 without children).
    pub fn beta(&self) -> f64 {
        self.r2.map_or(0.0, |(_, _, r)| r.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskTerms {
    pub r1_sum: f64,
    pub r2_sum: f64,
    pub terms: Vec<TermRecord>,
}

impl RiskTerms {
    /// `C1 * r1_sum + C2 * r2_sum`.
    pub fn weighted(&self, hp: &Hyperparams) -> f64 {
        hp.c1 * self.r1_sum + hp.c2 * self.r2_sum
    }

    pub fn active_r1(&self) -> usize {
        self.terms.iter().filter(|t| t.r1_active()).count()
    }

    pub fn active_r2(&self) -> usize {
        self.terms.iter().filter(|t| t.r2_active()).count()
    }

    /// Terms whose monotonicity domain was empty or disabled.
    pub fn skipped_r2(&self) -> usize {
        self.terms.iter().filter(|t| t.r2.is_none()).count()
    }
}

fn check_model(model: &ModelParams, problem: &RiskProblem) -> Result<()> {
    if model.num_classes() != problem.num_classes {
        return Err(Error::Dimension {
            expected: problem.num_classes,
            found: model.num_classes(),
        });
    }
    model.check_dim(problem.dim)?;
    if problem.num_classes < 2 {
        return Err(Error::Domain("the risk needs at least 2 classes".into()));
    }
    Ok(())
}

fn infer_video(model: &ModelParams, problem: &RiskProblem, i: usize) -> Vec<TermRecord> {
    let video = &problem.videos[i];
    let y = video.label;
    let mut buf = vec![0.0; problem.dim];
    let mut per_class = vec![ClassBest { score: 0.0, mask: 0 }; problem.num_classes];
    let mut records: Vec<TermRecord> = Vec::with_capacity(video.specs.len());
    for t in 0..video.specs.len() {
        best_per_class_into(model, &problem.space, problem.sampled(i, t), &mut buf, &mut per_class);
        let truth = per_class[y];
        let (wrong_label, wrong) = argmax_class(&per_class, Some(y)).expect("K >= 2");
        records.push(TermRecord {
            video: i,
            subseq: t,
            true_score: truth.score,
            true_mask: truth.mask,
            wrong_label,
            wrong_mask: wrong.mask,
            r1: wrong.score + 1.0 - truth.score,
            r2: None,
        });
    }
    if problem.flags.monotonicity_on {
        for t in 0..records.len() {
            let mut best: Option<(usize, f64)> = None;
            for &(j, margin) in &video.children[t] {
                let value = records[j].true_score + margin;
                if best.is_none_or(|(_, v)| value > v) {
                    best = Some((j, value));
                }
            }
            if let Some((j, value)) = best {
                let child_mask = records[j].true_mask;
                records[t].r2 = Some((j, child_mask, value - records[t].true_score));
            }
        }
    }
    records
}

/// Runs `f` over every video on up to `threads` workers; results come back in video order.
fn map_videos<T: Send>(problem: &RiskProblem, threads: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let n = problem.videos.len();
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    let f = &f;
    thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|c| {
                let lo = (c * chunk).min(n);
                let hi = ((c + 1) * chunk).min(n);
                scope.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Infers all latent argmaxes at `model` and collects hinge values.
pub fn risk_terms(model: &ModelParams, problem: &RiskProblem) -> Result<RiskTerms> {
    risk_terms_threaded(model, problem, 1)
}

pub fn risk_terms_threaded(model: &ModelParams, problem: &RiskProblem, threads: usize) -> Result<RiskTerms> {
    check_model(model, problem)?;
    let per_video = map_videos(problem, threads, |i| infer_video(model, problem, i));
    let mut out = RiskTerms {
        r1_sum: 0.0,
        r2_sum: 0.0,
        terms: Vec::with_capacity(problem.num_terms()),
    };
    for records in per_video {
        let (mut s1, mut s2) = (0.0, 0.0);
        for r in &records {
            s1 += r.alpha();
            s2 += r.beta();
        }
        out.r1_sum += s1;
        out.r2_sum += s2;
        out.terms.extend(records);
    }
    Ok(out)
}

/// `0.5 |w|^2 + C1 * r1_sum + C2 * r2_sum`.
pub fn objective_value(model: &ModelParams, terms: &RiskTerms, hp: &Hyperparams) -> f64 {
    0.5 * model.weights().iter().map(|v| v * v).sum::<f64>() + terms.weighted(hp)
}

/// Subgradient of the C-weighted risk at the weights `terms` were inferred at.
///
/// Each active hinge (Heaviside gate `R >= 0`) adds the difference of joint features
/// between its most-violating and its true configuration.
pub fn subgradient_from_terms(problem: &RiskProblem, terms: &RiskTerms, hp: &Hyperparams) -> Vec<f64> {
    let d = problem.dim;
    let space = &problem.space;
    let mut g = vec![0.0; problem.num_classes * d];
    let add = |g: &mut [f64], y: usize, coef: f64, pooled: &[f64]| {
        for (gi, p) in g[y * d..(y + 1) * d].iter_mut().zip(pooled) {
            *gi += coef * p;
        }
    };
    for r in &terms.terms {
        let y = problem.videos[r.video].label;
        let r1_on = r.r1_active() && hp.c1 != 0.0;
        let r2_on = r.r2_active() && hp.c2 != 0.0;
        if !r1_on && !r2_on {
            continue;
        }
        let sampled = problem.sampled(r.video, r.subseq);
        let truth = space.pooled(sampled, d, r.true_mask);
        if r1_on {
            let wrong = space.pooled(sampled, d, r.wrong_mask);
            add(&mut g, r.wrong_label, hp.c1, &wrong);
            add(&mut g, y, -hp.c1, &truth);
        }
        if r2_on {
            let (j, child_mask, _) = r.r2.expect("active R2 has a child");
            let child = space.pooled(problem.sampled(r.video, j), d, child_mask);
            add(&mut g, y, hp.c2, &child);
            add(&mut g, y, -hp.c2, &truth);
        }
    }
    g
}

/// Re-infers the latent argmaxes at `model` and returns the risk subgradient.
pub fn subgradient(model: &ModelParams, problem: &RiskProblem, hp: &Hyperparams) -> Result<Vec<f64>> {
    let terms = risk_terms(model, problem)?;
    Ok(subgradient_from_terms(problem, &terms, hp))
}

/// Risk value, subgradient and term records at one weight vector.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub terms: RiskTerms,
    /// C-weighted risk `R(w)`.
    pub risk: f64,
    /// Regularised objective `J(w)`.
    pub objective: f64,
    pub subgradient: Vec<f64>,
}

pub fn evaluate(model: &ModelParams, problem: &RiskProblem, hp: &Hyperparams, threads: usize) -> Result<Evaluation> {
    let terms = risk_terms_threaded(model, problem, threads)?;
    let subgradient = subgradient_from_terms(problem, &terms, hp);
    Ok(Evaluation {
        risk: terms.weighted(hp),
        objective: objective_value(model, &terms, hp),
        subgradient,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featmap::joint_feature;
    use crate::inference::{best_contained_subseq, best_mask_true, best_wrong_label};
    use crate::seqdata::{FrameSequence, LabeledVideo, Split};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn video(label: usize, frames: Vec<f64>, d: usize) -> LabeledVideo {
        LabeledVideo {
            id: format!("v{label}"),
            sequence: FrameSequence::from_flat(frames, d).unwrap(),
            label,
            split: Split::Train,
        }
    }

    fn random_dataset(rng: &mut ChaCha8Rng, k: usize, d: usize, n: usize, videos: usize) -> Dataset {
        let vs = (0..videos)
            .map(|i| video(i % k, (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect(), d))
            .collect();
        Dataset::new(k, d, vs).unwrap()
    }

    fn small_hp(latent: bool) -> Hyperparams {
        Hyperparams {
            c1: 0.7,
            c2: 0.3,
            sampled: 4,
            selected: if latent { 2 } else { 4 },
            ..Hyperparams::default()
        }
    }

    fn scheme() -> Subsampling {
        Subsampling::Fixed(SamplingScheme::new(vec![3, 5, 8], 2).unwrap())
    }

    #[test]
    fn zero_model_hand_sum() {
        // Two 8-frame videos, scales {4, 8}, stride 4: pool = (0,4), (4,4), (0,8).
        // Zero model: every R1 = 1; only (0,8) has children, both of length 4,
        // so its R2 = margin(8, 4) = 0.5.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = random_dataset(&mut rng, 2, 3, 8, 2);
        let hp = Hyperparams { c1: 2.0, c2: 3.0, ..small_hp(true) };
        let sub = Subsampling::Fixed(SamplingScheme::new(vec![4, 8], 4).unwrap());
        let p = RiskProblem::new(&ds, &sub, VariantFlags::LBSVM, &hp).unwrap();
        let terms = risk_terms(&ModelParams::zeros(2, 3), &p).unwrap();
        assert_eq!(terms.terms.len(), 6);
        assert_eq!(terms.r1_sum, 6.0);
        assert_eq!(terms.r2_sum, 1.0);
        assert_eq!(terms.skipped_r2(), 4);
        let j = objective_value(&ModelParams::zeros(2, 3), &terms, &hp);
        assert_eq!(j, 2.0 * 6.0 + 3.0 * 1.0);

        let doubled = Hyperparams { c1: 4.0, ..hp.clone() };
        assert_eq!(
            objective_value(&ModelParams::zeros(2, 3), &terms, &doubled) - j,
            2.0 * 6.0
        );
    }

    #[test]
    fn hinge_arithmetic() {
        let mk = |r1: f64, r2: Option<f64>| TermRecord {
            video: 0,
            subseq: 0,
            true_score: 0.0,
            true_mask: 0,
            wrong_label: 1,
            wrong_mask: 0,
            r1,
            r2: r2.map(|r| (1, 0, r)),
        };
        // true 2.0, wrong 1.5 -> R1 = 0.5
        let a = mk(1.5 + 1.0 - 2.0, None);
        assert!(a.r1_active() && a.alpha() == 0.5);
        // true 3.0, wrong 1.5 -> R1 = -0.5
        let b = mk(1.5 + 1.0 - 3.0, None);
        assert!(!b.r1_active() && b.alpha() == 0.0);
        // parent 1.0, best child value 1.3
        let c = mk(-1.0, Some(1.3 - 1.0));
        assert!(c.r2_active() && (c.beta() - 0.3).abs() < 1e-15);
        // Heaviside at zero
        assert!(mk(0.0, Some(0.0)).r1_active() && mk(0.0, Some(0.0)).r2_active());
    }

    #[test]
    fn records_agree_with_direct_inference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ds = random_dataset(&mut rng, 3, 2, 10, 3);
        let hp = small_hp(true);
        let p = RiskProblem::new(&ds, &scheme(), VariantFlags::LBSVM, &hp).unwrap();
        let w: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = ModelParams::from_vec(3, 2, w).unwrap();
        let terms = risk_terms(&model, &p).unwrap();
        let masks = p.space().masks();
        for r in &terms.terms {
            let v = &ds.videos[r.video];
            let specs = &p.videos()[r.video].specs;
            let sampled = p.sampled(r.video, r.subseq);
            let (m, s) = best_mask_true(&model, p.space(), sampled, v.label).unwrap();
            assert_eq!((masks.mask(r.true_mask), r.true_score), (m, s));
            let (y1, m1, s1) = best_wrong_label(&model, p.space(), sampled, v.label).unwrap();
            assert_eq!((r.wrong_label, masks.mask(r.wrong_mask)), (y1, m1));
            assert!((r.r1 - (s1 + 1.0 - s)).abs() < 1e-12);
            let c = best_contained_subseq(&model, p.space(), &v.sequence, specs[r.subseq], specs, v.label).unwrap();
            match (c, r.r2) {
                (None, None) => {}
                (Some(c), Some((j, cm, r2))) => {
                    assert_eq!(c.index, j);
                    assert_eq!(c.mask, masks.mask(cm));
                    assert!((r2 - (c.value - s)).abs() < 1e-12);
                }
                other => panic!("mismatch {other:?}"),
            }
        }
    }

    #[test]
    fn slacks_are_minimal_feasible() {
        // Direct constraint scan: alpha = max(0, max_y 1 - (f_t - f_y)),
        // beta = max(0, max_j margin - (f_t - f_j)).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ds = random_dataset(&mut rng, 3, 2, 10, 2);
        let hp = small_hp(true);
        let p = RiskProblem::new(&ds, &scheme(), VariantFlags::LBSVM, &hp).unwrap();
        let model = ModelParams::from_vec(3, 2, (0..6).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let terms = risk_terms(&model, &p).unwrap();
        let f = |i: usize, t: usize, y: usize| {
            crate::inference::score(&model, p.space(), p.sampled(i, t), y).unwrap().0
        };
        for r in &terms.terms {
            let y = ds.videos[r.video].label;
            let ft = f(r.video, r.subseq, y);
            let mut alpha: f64 = 0.0;
            for yy in (0..3).filter(|&yy| yy != y) {
                alpha = alpha.max(1.0 - (ft - f(r.video, r.subseq, yy)));
            }
            let specs = &p.videos()[r.video].specs;
            let mut beta: f64 = 0.0;
            for (j, c) in specs.iter().enumerate() {
                if specs[r.subseq].strictly_contains(c) {
                    let m = adaptive_margin(specs[r.subseq].length, c.length).unwrap();
                    beta = beta.max(m - (ft - f(r.video, j, y)));
                }
            }
            assert!((r.alpha() - alpha).abs() < 1e-12);
            assert!((r.beta() - beta).abs() < 1e-12);
        }
    }

    #[test]
    fn scsvm_has_no_monotonicity_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ds = random_dataset(&mut rng, 2, 2, 10, 2);
        let hp = small_hp(false);
        let p = RiskProblem::new(&ds, &scheme(), VariantFlags::SCSVM, &hp).unwrap();
        let model = ModelParams::from_vec(2, 2, vec![0.1, -0.3, 0.2, 0.5]).unwrap();
        let terms = risk_terms(&model, &p).unwrap();
        assert_eq!(terms.r2_sum, 0.0);
        assert!(terms.terms.iter().all(|t| t.r2.is_none()));
        assert_eq!(p.space().masks().len(), 1);
    }

    #[test]
    fn inactive_terms_give_zero_subgradient() {
        // Huge margins: w separates the two constant videos by far more than 1.
        let ds = Dataset::new(
            2,
            2,
            vec![video(0, [1.0, 0.0].repeat(10), 2), video(1, [0.0, 1.0].repeat(10), 2)],
        )
        .unwrap();
        let hp = small_hp(false);
        let p = RiskProblem::new(&ds, &scheme(), VariantFlags::SCSVM, &hp).unwrap();
        let model = ModelParams::from_vec(2, 2, vec![10.0, 0.0, 0.0, 10.0]).unwrap();
        assert!(subgradient(&model, &p, &hp).unwrap().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn single_active_term_block_algebra() {
        let ds = Dataset::new(2, 2, vec![video(0, vec![2.0, 3.0], 2)]).unwrap();
        let hp = Hyperparams { c1: 1.0, c2: 1.0, ..small_hp(false) };
        let p = RiskProblem::new(&ds, &Subsampling::Frames, VariantFlags::SCSVM, &hp).unwrap();
        let g = subgradient(&ModelParams::zeros(2, 2), &p, &hp).unwrap();
        let expect: Vec<f64> = joint_feature(&[2.0, 3.0], 1, 2)
            .unwrap()
            .iter()
            .zip(joint_feature(&[2.0, 3.0], 0, 2).unwrap())
            .map(|(a, b)| a - b)
            .collect();
        assert_eq!(g, expect);
    }

    #[test]
    fn threaded_evaluation_is_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = random_dataset(&mut rng, 3, 3, 12, 5);
        let hp = small_hp(true);
        let p = RiskProblem::new(&ds, &scheme(), VariantFlags::LBSVM, &hp).unwrap();
        let model = ModelParams::from_vec(3, 3, (0..9).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let a = evaluate(&model, &p, &hp, 1).unwrap();
        let b = evaluate(&model, &p, &hp, 3).unwrap();
        assert_eq!(a.terms, b.terms);
        assert_eq!(a.subgradient, b.subgradient);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn frozen_latent_objective_is_midpoint_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ds = random_dataset(&mut rng, 3, 2, 10, 3);
        let hp = small_hp(false);
        let p = RiskProblem::new(&ds, &scheme(), VariantFlags::BSVM, &hp).unwrap();
        let j = |w: &[f64]| {
            let m = ModelParams::from_vec(3, 2, w.to_vec()).unwrap();
            objective_value(&m, &risk_terms(&m, &p).unwrap(), &hp)
        };
        for _ in 0..50 {
            let a: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            assert!(j(&mid) <= 0.5 * (j(&a) + j(&b)) + 1e-9);
        }
    }
}
