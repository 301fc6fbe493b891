//! Dataset directory layout.
//!
//! ```text
//! DIR/manifest.json        {"K": .., "d": .., "videos": [{id, label, split, path, num_frames}]}
//! DIR/videos/00000_ID.txt  "num_frames d" header, then one space-separated row per frame
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a saved
//! dataset loads back bit-for-bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, FrameSequence, LabeledVideo, Split};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    #[serde(rename = "K")]
    num_classes: usize,
    d: usize,
    videos: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    id: String,
    label: usize,
    split: Split,
    path: String,
    num_frames: usize,
}

pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    let video_dir = dir.join("videos");
    fs::create_dir_all(&video_dir).map_err(|e| Error::io(&video_dir, e))?;

    let mut entries = Vec::with_capacity(ds.videos.len());
    for (i, v) in ds.videos.iter().enumerate() {
        let rel = format!("videos/{:05}_{}.txt", i, sanitize(&v.id));
        write_sequence(&v.sequence, &dir.join(&rel))?;
        entries.push(ManifestEntry {
            id: v.id.clone(),
            label: v.label,
            split: v.split,
            path: rel,
            num_frames: v.sequence.len(),
        });
    }
    let manifest = Manifest {
        num_classes: ds.num_classes,
        d: ds.dim,
        videos: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::parse(&path, 0, e.to_string()))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;

    let mut videos = Vec::with_capacity(manifest.videos.len());
    for entry in manifest.videos {
        let vpath = dir.join(&entry.path);
        let seq = load_sequence(&vpath)?;
        if seq.len() != entry.num_frames {
            return Err(Error::parse(
                &vpath,
                1,
                format!(
                    "manifest declares {} frames, file holds {}",
                    entry.num_frames,
                    seq.len()
                ),
            ));
        }
        if seq.dim() != manifest.d {
            return Err(Error::parse(
                &vpath,
                1,
                format!("frame dimension {} differs from manifest d = {}", seq.dim(), manifest.d),
            ));
        }
        if entry.label >= manifest.num_classes {
            return Err(Error::parse(
                &path,
                0,
                format!(
                    "video {} has label {} outside [0, {})",
                    entry.id, entry.label, manifest.num_classes
                ),
            ));
        }
        videos.push(LabeledVideo {
            id: entry.id,
            sequence: seq,
            label: entry.label,
            split: entry.split,
        });
    }
    Dataset::new(manifest.num_classes, manifest.d, videos)
}

/// Writes one video file.
pub fn write_sequence(seq: &FrameSequence, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(seq.as_flat().len() * 20);
    let _ = writeln!(out, "{} {}", seq.len(), seq.dim());
    for frame in seq.frames() {
        for (j, x) in frame.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x}");
        }
        out.push('\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads one video file.
pub fn load_sequence(path: &Path) -> Result<FrameSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (n, d) = match lines.next() {
        Some((_, header)) => parse_header(path, header)?,
        None => return Err(Error::parse(path, 1, "empty file, expected \"num_frames d\"")),
    };

    let mut data = Vec::with_capacity(n * d);
    let mut rows = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if rows == n {
            return Err(Error::parse(path, lineno, format!("more than {n} frame rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let x: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("invalid number {tok:?}")))?;
            data.push(x);
        }
        let cols = data.len() - before;
        if cols != d {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {d} columns, found {cols}"),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(
            path,
            text.lines().count(),
            format!("header declares {n} frames, found {rows}"),
        ));
    }
    FrameSequence::from_flat(data, d).map_err(|e| Error::parse(path, 1, e.to_string()))
}

fn parse_header(path: &Path, header: &str) -> Result<(usize, usize)> {
    let mut it = header.split_whitespace();
    let bad = || Error::parse(path, 1, format!("malformed header {header:?}, expected \"num_frames d\""));
    let n: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    let d: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    if it.next().is_some() || n == 0 || d == 0 {
        return Err(bad());
    }
    Ok((n, d))
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
