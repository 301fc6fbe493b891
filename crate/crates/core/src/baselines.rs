//! Frame-level linear SVM and video-level frame voting.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inference::dot;
use crate::model::ModelParams;
use crate::nrbm::{train, TrainOptions, TrainOutcome};
use crate::objective::{Hyperparams, Subsampling, VariantFlags};
use crate::seqdata::{Dataset, FrameSequence};

/// Frames ranked by KNN voting.
pub const KNN_FRAMES: usize = 20;

/// Linear weights scoring single frames, same block layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrameModel {
    pub params: ModelParams,
}

impl FrameModel {
    pub fn new(params: ModelParams) -> Self {
        FrameModel { params }
    }

    /// `w_y . frame` for every class.
    pub fn frame_scores(&self, frame: &[f64]) -> Vec<f64> {
        (0..self.params.num_classes())
            .map(|y| dot(self.params.block(y), frame))
            .collect()
    }

    pub fn frame_label(&self, frame: &[f64]) -> usize {
        argmax(&self.frame_scores(frame))
    }
}

/// First index of the maximum.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Multiclass hinge on individual frames: every frame is a length-1 subsequence,
/// with neither monotonicity constraints nor latent selection.
pub fn train_frame_svm(train_set: &Dataset, hp: &Hyperparams, opts: TrainOptions) -> Result<(FrameModel, TrainOutcome)> {
    let out = train(train_set, &Subsampling::Frames, VariantFlags::SCSVM, hp, opts)?;
    Ok((FrameModel::new(out.model.clone()), out))
}

/// Fraction of all frames of all videos whose argmax class equals the video label.
pub fn avg_frame_accuracy(model: &FrameModel, test: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for v in &test.videos {
        model.params.check_dim(v.sequence.dim())?;
        for f in v.sequence.frames() {
            correct += usize::from(model.frame_label(f) == v.label);
            total += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Voting {
    /// Majority of per-frame labels.
    Hard,
    /// Argmax of the mean per-frame softmax.
    #[default]
    Soft,
    /// Majority over the `n` frames with the highest top-class score.
    Knn(usize),
}

impl FromStr for Voting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Voting::Hard),
            "soft" => Ok(Voting::Soft),
            "knn" => Ok(Voting::Knn(KNN_FRAMES)),
            other => Err(Error::Config(format!(
                "unknown voting {other:?}, expected hard|soft|knn"
            ))),
        }
    }
}

impl fmt::Display for Voting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Voting::Hard => f.write_str("hard"),
            Voting::Soft => f.write_str("soft"),
            Voting::Knn(n) if *n == KNN_FRAMES => f.write_str("knn"),
            Voting::Knn(n) => write!(f, "knn{n}"),
        }
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Hard vote over labels; ties go to the smallest label.
pub fn hard_vote(labels: impl IntoIterator<Item = usize>, num_classes: usize) -> usize {
    let mut counts = vec![0usize; num_classes];
    for l in labels {
        counts[l] += 1;
    }
    let mut best = 0;
    for (y, c) in counts.iter().enumerate() {
        if *c > counts[best] {
            best = y;
        }
    }
    best
}

/// Soft vote over per-frame score vectors.
pub fn soft_vote(frame_scores: &[Vec<f64>], num_classes: usize) -> usize {
    let mut acc = vec![0.0; num_classes];
    for s in frame_scores {
        for (a, p) in acc.iter_mut().zip(softmax(s)) {
            *a += p;
        }
    }
    let n = frame_scores.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    argmax(&acc)
}

/// Video label from the frame classifier under `voting`.
pub fn vote_video(model: &FrameModel, video: &FrameSequence, voting: Voting) -> Result<usize> {
    model.params.check_dim(video.dim())?;
    let k = model.params.num_classes();
    let scores: Vec<Vec<f64>> = video.frames().map(|f| model.frame_scores(f)).collect();
    Ok(match voting {
        Voting::Hard => hard_vote(scores.iter().map(|s| argmax(s)), k),
        Voting::Soft => soft_vote(&scores, k),
        Voting::Knn(n) => {
            let mut order: Vec<usize> = (0..scores.len()).collect();
            let top = |i: usize| scores[i][argmax(&scores[i])];
            // stable sort keeps earlier frames first among equal scores
            order.sort_by(|&a, &b| top(b).total_cmp(&top(a)));
            order.truncate(n);
            hard_vote(order.into_iter().map(|i| argmax(&scores[i])), k)
        }
    })
}
