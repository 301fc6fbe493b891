//! Test-set accuracy, confusion matrices, prefix-length curves and
//! monotonicity-violation rates.

use std::fmt::Write as _;

use crate::baselines::{vote_video, FrameModel, Voting};
use crate::error::{Error, Result};
use crate::inference::{best_for_class, predict, LatentSpace};
use crate::model::ModelParams;
use crate::objective::Subsampling;
use crate::seqdata::{Dataset, FrameSequence};
use crate::subseq::contained_pairs;

/// Anything that labels a whole video.
pub trait VideoClassifier {
    fn num_classes(&self) -> usize;
    fn classify(&self, video: &FrameSequence) -> Result<usize>;
}

/// Joint label and view selection with a latent linear model.
#[derive(Debug, Clone)]
pub struct LatentClassifier<'a> {
    pub params: &'a ModelParams,
    pub space: &'a LatentSpace,
}

impl VideoClassifier for LatentClassifier<'_> {
    fn num_classes(&self) -> usize {
        self.params.num_classes()
    }

    fn classify(&self, video: &FrameSequence) -> Result<usize> {
        Ok(predict(self.params, self.space, video)?.label)
    }
}

/// Frame classifier accumulated over the video by voting.
#[derive(Debug, Clone)]
pub struct VotingClassifier<'a> {
    pub model: &'a FrameModel,
    pub voting: Voting,
}

impl VideoClassifier for VotingClassifier<'_> {
    fn num_classes(&self) -> usize {
        self.model.params.num_classes()
    }

    fn classify(&self, video: &FrameSequence) -> Result<usize> {
        vote_video(self.model, video, self.voting)
    }
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let hits: usize = (0..self.counts.len()).map(|i| self.counts[i][i]).sum();
        hits as f64 / total as f64
    }

    /// Row-normalised rates; empty rows stay zero.
    pub fn rates(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: usize = row.iter().sum();
                row.iter()
                    .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    pub fn to_table(&self) -> String {
        let k = self.counts.len();
        let mut out = String::from("true\\pred");
        for j in 0..k {
            let _ = write!(out, " {j:>5}");
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            let _ = write!(out, "{i:>9}");
            for c in row {
                let _ = write!(out, " {c:>5}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Classifies every video of `test` (split tags ignored).
pub fn evaluate_with(classifier: &dyn VideoClassifier, test: &Dataset) -> Result<EvalResult> {
    if classifier.num_classes() != test.num_classes {
        return Err(Error::Dimension {
            expected: classifier.num_classes(),
            found: test.num_classes,
        });
    }
    let mut confusion = ConfusionMatrix::new(test.num_classes);
    for v in &test.videos {
        confusion.record(v.label, classifier.classify(&v.sequence)?);
    }
    Ok(EvalResult {
        accuracy: confusion.accuracy(),
        confusion,
    })
}

/// Whole-video accuracy of a latent model.
pub fn evaluate(params: &ModelParams, space: &LatentSpace, test: &Dataset) -> Result<EvalResult> {
    evaluate_with(&LatentClassifier { params, space }, test)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefixCurve {
    pub fractions: Vec<f64>,
    pub accuracies: Vec<f64>,
}

/// 0.1, 0.2, ..., 1.0.
pub fn default_fractions() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

impl PrefixCurve {
    /// Number of adjacent fractions where accuracy drops.
    pub fn decreases(&self) -> usize {
        self.accuracies.windows(2).filter(|w| w[1] < w[0]).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,accuracy\n");
        for (f, a) in self.fractions.iter().zip(&self.accuracies) {
            let _ = writeln!(out, "{f},{a}");
        }
        out
    }
}

/// Frames kept by a prefix of fraction `f`: `ceil(f * n)`, at least one.
pub fn prefix_len(n: usize, f: f64) -> usize {
    ((f * n as f64).ceil() as usize).clamp(1, n)
}

/// Accuracy on the leading `ceil(f * n)` frames of every test video, per fraction.
pub fn prefix_curve_with(classifier: &dyn VideoClassifier, test: &Dataset, fractions: &[f64]) -> Result<PrefixCurve> {
    if fractions.is_empty()
        || fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0))
        || fractions.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::Config(
            "prefix fractions must be ascending within (0, 1]".into(),
        ));
    }
    let mut accuracies = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let mut hits = 0usize;
        for v in &test.videos {
            let prefix = v.sequence.prefix(prefix_len(v.sequence.len(), f))?;
            hits += usize::from(classifier.classify(&prefix)? == v.label);
        }
        accuracies.push(if test.videos.is_empty() {
            0.0
        } else {
            hits as f64 / test.videos.len() as f64
        });
    }
    Ok(PrefixCurve {
        fractions: fractions.to_vec(),
        accuracies,
    })
}

pub fn prefix_curve(params: &ModelParams, space: &LatentSpace, test: &Dataset, fractions: &[f64]) -> Result<PrefixCurve> {
    prefix_curve_with(&LatentClassifier { params, space }, test, fractions)
}

/// Labels at which monotonicity is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MonotonicityLabels {
    /// The video's predicted label.
    #[default]
    Predicted,
    /// Every class.
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub pairs: usize,
    pub violations: usize,
}

impl MonotonicityReport {
    pub fn rate(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.violations as f64 / self.pairs as f64
        }
    }
}

pub const DEFAULT_MONOTONICITY_TOL: f64 = 1e-6;

/// Share of contained `(parent, child)` pairs whose child outscores its parent by
/// more than `tol`.
pub fn monotonicity_report(
    params: &ModelParams,
    space: &LatentSpace,
    test: &Dataset,
    subsampling: &Subsampling,
    tol: f64,
    labels: MonotonicityLabels,
) -> Result<MonotonicityReport> {
    let mut report = MonotonicityReport {
        pairs: 0,
        violations: 0,
    };
    let mut buf = vec![0.0; params.dim()];
    for v in &test.videos {
        let pool = subsampling.pool(v.sequence.len())?;
        let pairs = contained_pairs(&pool);
        let sampled: Vec<Vec<f64>> = pool
            .iter()
            .map(|s| space.sample(&v.sequence, *s))
            .collect::<Result<_>>()?;
        let check: Vec<usize> = match labels {
            MonotonicityLabels::Predicted => vec![predict(params, space, &v.sequence)?.label],
            MonotonicityLabels::All => (0..params.num_classes()).collect(),
        };
        for y in check {
            let scores: Vec<f64> = sampled
                .iter()
                .map(|s| best_for_class(params, space, s, y, &mut buf).score)
                .collect();
            report.pairs += pairs.len();
            report.violations += pairs
                .iter()
                .filter(|(t, j)| scores[*j] > scores[*t] + tol)
                .count();
        }
    }
    Ok(report)
}
