//! Latent bi-constraint SVM for recognising objects from sequences of frame
//! feature vectors.
//!
//! Training expands each video into multi-scale subsequences, asks every
//! subsequence to be classified with margin (classification constraints) and
//! every subsequence to outscore the shorter subsequences it contains
//! (monotonicity constraints), while a latent mask picks which sampled frames are
//! pooled. The resulting non-convex risk is minimised with a bundle method.
//!
//! Module map:
//!
//! - [`seqdata`]: datasets, their directory format, synthetic generator
//! - [`subseq`]: subsequence enumeration, containment, adaptive margin
//! - [`featmap`]: frame sampling, selection masks, pooling, joint features
//! - [`inference`]: latent scoring and the training argmaxes
//! - [`objective`]: risk terms, subgradient, ablation flags
//! - [`nrbm`]: bundle optimiser and the training loop
//! - [`baselines`]: frame SVM and frame voting
//! - [`evalreport`]: accuracy, confusion, prefix curves, monotonicity
//! - [`cli`]: the `lbsvm` command
//!
//! ```no_run
//! use lbsvm::evalreport::evaluate;
//! use lbsvm::nrbm::{train, TrainOptions};
//! use lbsvm::objective::{Hyperparams, Subsampling};
//! use lbsvm::seqdata::{generate_synthetic, GeneratorConfig, Split};
//! use lbsvm::Variant;
//!
//! # fn main() -> lbsvm::Result<()> {
//! let ds = generate_synthetic(&GeneratorConfig::default())?;
//! let hp = Hyperparams::default();
//! let flags = Variant::Lbsvm.flags();
//! let out = train(&ds.subset(Split::Train), &Subsampling::Proportional, flags, &hp, TrainOptions::default())?;
//! let acc = evaluate(&out.model, &hp.latent_space(flags)?, &ds.subset(Split::Test))?.accuracy;
//! # let _ = acc;
//! # Ok(())
//! # }
//! ```

pub mod baselines;
pub mod cli;

pub mod error;
pub mod evalreport;
pub mod featmap;
pub mod inference;
pub mod model;
pub mod nrbm;
pub mod objective;
pub mod seqdata;
pub mod subseq;

pub use error::{Error, Result};
pub use model::{ModelParams, TrainedModel, Variant};
