//! Class-blocked linear weights and the model file.
//!
//! ```text
//! K d variant l k [pool]
//! w_0
//! ...
//! w_{K*d-1}
//! ```
//!
//! The pooling token is only written for mean pooling; a five-token header means max.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featmap::PoolingKind;
use crate::objective::VariantFlags;

/// Weight vector `w` of length `K * d`; block `y` scores class `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    w: Vec<f64>,
    num_classes: usize,
    dim: usize,
}

impl ModelParams {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        ModelParams {
            w: vec![0.0; num_classes * dim],
            num_classes,
            dim,
        }
    }

    pub fn from_vec(num_classes: usize, dim: usize, w: Vec<f64>) -> Result<Self> {
        if num_classes == 0 || dim == 0 {
            return Err(Error::Domain("model needs K >= 1 and d >= 1".into()));
        }
        if w.len() != num_classes * dim {
            return Err(Error::Dimension {
                expected: num_classes * dim,
                found: w.len(),
            });
        }
        Ok(ModelParams { w, num_classes, dim })
    }

    /// Stacks per-class blocks.
    pub fn from_blocks<B: AsRef<[f64]>>(blocks: &[B]) -> Result<Self> {
        let dim = blocks.first().map(|b| b.as_ref().len()).unwrap_or(0);
        let mut w = Vec::with_capacity(blocks.len() * dim);
        for b in blocks {
            w.extend_from_slice(b.as_ref());
        }
        Self::from_vec(blocks.len(), dim, w)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.w
    }

    pub fn block(&self, y: usize) -> &[f64] {
        &self.w[y * self.dim..(y + 1) * self.dim]
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        ModelParams {
            w: self.w.iter().map(|v| alpha * v).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: d,
            });
        }
        Ok(())
    }
}

/// Which learner produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Subsequence constraints only.
    Scsvm,
    /// Subsequence and monotonicity constraints.
    Bsvm,
    /// Both constraint families plus latent frame selection.
    Lbsvm,
    /// Frame-level multiclass SVM.
    AvgFrame,
}

impl Variant {
    pub fn flags(self) -> VariantFlags {
        match self {
            Variant::Lbsvm => VariantFlags::LBSVM,
            Variant::Bsvm => VariantFlags::BSVM,
            Variant::Scsvm | Variant::AvgFrame => VariantFlags::SCSVM,
        }
    }

    pub fn is_frame_level(self) -> bool {
        self == Variant::AvgFrame
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scsvm" => Ok(Variant::Scsvm),
            "bsvm" => Ok(Variant::Bsvm),
            "lbsvm" => Ok(Variant::Lbsvm),
            "avg-frame" => Ok(Variant::AvgFrame),
            other => Err(Error::Config(format!(
                "unknown variant {other:?}, expected scsvm|bsvm|lbsvm|avg-frame"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Scsvm => "scsvm",
            Variant::Bsvm => "bsvm",
            Variant::Lbsvm => "lbsvm",
            Variant::AvgFrame => "avg-frame",
        })
    }
}

/// Weights plus everything needed to run inference with them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub variant: Variant,
    /// Frames sampled per subsequence.
    pub sampled: usize,
    /// Frames selected by the latent mask.
    pub selected: usize,
    pub pooling: PoolingKind,
}

impl TrainedModel {
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = String::with_capacity(p.w.len() * 24 + 32);
        let _ = write!(
            out,
            "{} {} {} {} {}",
            p.num_classes, p.dim, self.variant, self.sampled, self.selected
        );
        if self.pooling != PoolingKind::Max {
            let _ = write!(out, " {}", self.pooling);
        }
        out.push('\n');
        for v in &p.w {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty model file"))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 5 && toks.len() != 6 {
            return Err(Error::parse(
                path,
                1,
                format!("header {header:?} should be \"K d variant l k [pool]\""),
            ));
        }
        let num = |i: usize, name: &str| -> Result<usize> {
            toks[i]
                .parse()
                .map_err(|_| Error::parse(path, 1, format!("invalid {name} {:?}", toks[i])))
        };
        let num_classes = num(0, "K")?;
        let dim = num(1, "d")?;
        let variant: Variant = toks[2]
            .parse()
            .map_err(|e: Error| Error::parse(path, 1, e.to_string()))?;
        let sampled = num(3, "l")?;
        let selected = num(4, "k")?;
        let pooling = match toks.get(5) {
            Some(t) => t.parse().map_err(|e: Error| Error::parse(path, 1, e.to_string()))?,
            None => PoolingKind::Max,
        };
        if selected == 0 || selected > sampled {
            return Err(Error::parse(path, 1, format!("k = {selected} outside 1..={sampled}")));
        }

        let mut w = Vec::with_capacity(num_classes * dim);
        for (idx, line) in lines {
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("invalid weight {line:?}")))?;
            w.push(v);
        }
        let params = ModelParams::from_vec(num_classes, dim, w)
            .map_err(|e| Error::parse(path, 1, e.to_string()))?;
        Ok(TrainedModel {
            params,
            variant,
            sampled,
            selected,
            pooling,
        })
    }
}
