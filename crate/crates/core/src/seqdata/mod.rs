//! Video datasets: frame sequences, labels, on-disk layout and a synthetic
//! generator.
//!
//! A video is an ordered list of fixed-dimension frame feature vectors. Frame
//! vectors are taken as given; any real-valued per-frame descriptor works.

mod generate;
mod io;

pub use generate::{generate_annotated, generate_synthetic, GeneratorConfig, Synthetic, World};
pub use io::{load_dataset, load_sequence, save_dataset, write_sequence, MANIFEST_FILE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered, non-empty list of frames sharing one dimension.
///
/// Frames are stored row-major in a single buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    data: Vec<f64>,
    dim: usize,
}

impl FrameSequence {
    /// Builds a sequence from a flat row-major buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("frame dimension must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::Domain("a sequence needs at least one frame".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Domain(format!(
                "buffer of {} values is not a whole number of {}-dim frames",
                data.len(),
                dim
            )));
        }
        Ok(FrameSequence { data, dim })
    }

    pub fn from_frames<F: AsRef<[f64]>>(frames: &[F]) -> Result<Self> {
        let dim = frames
            .first()
            .map(|f| f.as_ref().len())
            .ok_or_else(|| Error::Domain("a sequence needs at least one frame".into()))?;
        let mut data = Vec::with_capacity(dim * frames.len());
        for f in frames {
            let f = f.as_ref();
            if f.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: f.len(),
                });
            }
            data.extend_from_slice(f);
        }
        Self::from_flat(data, dim)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// The first `n` frames as a new sequence.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::Domain(format!(
                "prefix length {} outside 1..={}",
                n,
                self.len()
            )));
        }
        Ok(FrameSequence {
            data: self.data[..n * self.dim].to_vec(),
            dim: self.dim,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVideo {
    pub id: String,
    pub sequence: FrameSequence,
    pub label: usize,
    pub split: Split,
}

/// A labelled collection of videos with a shared class count and frame dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub num_classes: usize,
    pub dim: usize,
    pub videos: Vec<LabeledVideo>,
}

impl Dataset {
    pub fn new(num_classes: usize, dim: usize, videos: Vec<LabeledVideo>) -> Result<Self> {
        let ds = Dataset {
            num_classes,
            dim,
            videos,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::Config("class count must be positive".into()));
        }
        for v in &self.videos {
            if v.label >= self.num_classes {
                return Err(Error::Domain(format!(
                    "video {} has label {} but the dataset has {} classes",
                    v.id, v.label, self.num_classes
                )));
            }
            if v.sequence.dim() != self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    found: v.sequence.dim(),
                });
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &LabeledVideo> + '_ {
        self.videos.iter().filter(move |v| v.split == split)
    }

    pub fn train(&self) -> impl Iterator<Item = &LabeledVideo> + '_ {
        self.split(Split::Train)
    }

    pub fn test(&self) -> impl Iterator<Item = &LabeledVideo> + '_ {
        self.split(Split::Test)
    }

    /// A dataset holding only the videos of one split.
    pub fn subset(&self, split: Split) -> Dataset {
        Dataset {
            num_classes: self.num_classes,
            dim: self.dim,
            videos: self.split(split).cloned().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_rejects_ragged_frames() {
        let err = FrameSequence::from_frames(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 2, found: 1 }));
        assert!(FrameSequence::from_frames::<Vec<f64>>(&[]).is_err());
    }

    #[test]
    fn prefix_keeps_leading_frames() {
        let s = FrameSequence::from_frames(&[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]).unwrap();
        let p = s.prefix(2).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.frame(1), &[2.0, 0.0]);
        assert!(s.prefix(0).is_err());
        assert!(s.prefix(4).is_err());
    }

    #[test]
    fn dataset_validates_labels() {
        let seq = FrameSequence::from_frames(&[[0.0, 0.0]]).unwrap();
        let v = LabeledVideo {
            id: "a".into(),
            sequence: seq,
            label: 3,
            split: Split::Train,
        };
        assert!(Dataset::new(3, 2, vec![v.clone()]).is_err());
        assert!(Dataset::new(4, 2, vec![v.clone()]).is_ok());
        assert!(Dataset::new(4, 3, vec![v]).is_err());
    }
}
