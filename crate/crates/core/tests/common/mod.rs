//! Reference implementations written from the definitions, sharing no code with
//! the library beyond its data types.
#![allow(dead_code)]

use lbsvm::seqdata::{Dataset, FrameSequence};
use lbsvm::subseq::{enumerate_subsequences, SamplingScheme, SubseqSpec};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// All `k`-subsets of `0..l` from bit patterns, sorted lexicographically.
pub fn subsets(l: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..(1 << l))
        .filter(|b| b.count_ones() as usize == k)
        .map(|b| (0..l).filter(|i| b >> i & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

/// `(start, length)` windows counted straight from the definition.
pub fn brute_windows(n: usize, scales: &[usize], stride: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &s in scales {
        for start in (0..n).filter(|st| st % stride == 0) {
            if start + s <= n {
                out.push((start, s));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

pub fn contains(parent: SubseqSpec, child: SubseqSpec) -> bool {
    parent.start <= child.start
        && child.start + child.length <= parent.start + parent.length
        && child.length != parent.length
}

/// Frame indices picked from a window: evenly spaced, rounded down.
pub fn sample_indices(spec: SubseqSpec, l: usize) -> Vec<usize> {
    (0..l)
        .map(|j| spec.start + ((j * (spec.length - 1)) as f64 / (l - 1) as f64).floor() as usize)
        .collect()
}

pub fn sampled_rows(video: &FrameSequence, spec: SubseqSpec, l: usize) -> Vec<Vec<f64>> {
    sample_indices(spec, l)
        .into_iter()
        .map(|i| video.frame(i).to_vec())
        .collect()
}

pub fn pool_ref(rows: &[Vec<f64>], subset: &[usize], mean: bool) -> Vec<f64> {
    let d = rows[0].len();
    (0..d)
        .map(|c| {
            let vals = subset.iter().map(|&i| rows[i][c]);
            if mean {
                vals.sum::<f64>() / subset.len() as f64
            } else {
                vals.fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect()
}

pub fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn gaussian(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

/// Best `(score, subset index)` of one class block over all subsets; first subset wins ties.
pub fn best_subset(w_y: &[f64], rows: &[Vec<f64>], subs: &[Vec<usize>], mean: bool) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (m, s) in subs.iter().enumerate() {
        let v = dotp(w_y, &pool_ref(rows, s, mean));
        if v > best.0 {
            best = (v, m);
        }
    }
    best
}

/// One subsequence term with latent selection frozen to the full mask.
pub struct FrozenTerm {
    pub label: usize,
    pub psi: Vec<f64>,
    /// Max-pooled children features with their margins.
    pub children: Vec<(Vec<f64>, f64)>,
}

/// Expands a dataset into full-mask max-pooled terms over proportional windows.
pub fn frozen_terms(ds: &Dataset, l: usize, monotonic: bool) -> Vec<FrozenTerm> {
    let all: Vec<usize> = (0..l).collect();
    let mut out = Vec::new();
    for v in &ds.videos {
        let n = v.sequence.len();
        let specs = enumerate_subsequences(n, &SamplingScheme::proportional(n)).unwrap();
        let psis: Vec<Vec<f64>> = specs
            .iter()
            .map(|s| pool_ref(&sampled_rows(&v.sequence, *s, l), &all, false))
            .collect();
        for (t, p) in specs.iter().enumerate() {
            let children = if monotonic {
                specs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| contains(*p, **c))
                    .map(|(j, c)| (psis[j].clone(), 1.0 - c.length as f64 / p.length as f64))
                    .collect()
            } else {
                Vec::new()
            };
            out.push(FrozenTerm {
                label: v.label,
                psi: psis[t].clone(),
                children,
            });
        }
    }
    out
}

/// Objective and one subgradient of the frozen-latent problem.
pub fn frozen_objective(terms: &[FrozenTerm], w: &[f64], k: usize, c1: f64, c2: f64) -> (f64, Vec<f64>) {
    let d = w.len() / k;
    let block = |y: usize| &w[y * d..(y + 1) * d];
    let mut j = 0.5 * dotp(w, w);
    let mut g = w.to_vec();
    for t in terms {
        let truth = dotp(block(t.label), &t.psi);
        let (mut wy, mut wv) = (usize::MAX, f64::NEG_INFINITY);
        for y in (0..k).filter(|y| *y != t.label) {
            let v = dotp(block(y), &t.psi);
            if v > wv {
                (wy, wv) = (y, v);
            }
        }
        let r1 = wv + 1.0 - truth;
        if r1 >= 0.0 {
            j += c1 * r1;
            for i in 0..d {
                g[wy * d + i] += c1 * t.psi[i];
                g[t.label * d + i] -= c1 * t.psi[i];
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for (ci, (phi, margin)) in t.children.iter().enumerate() {
            let v = dotp(block(t.label), phi) + margin;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((ci, v));
            }
        }
        if let Some((ci, v)) = best {
            let r2 = v - truth;
            if r2 >= 0.0 {
                j += c2 * r2;
                for i in 0..d {
                    g[t.label * d + i] += c2 * (t.children[ci].0[i] - t.psi[i]);
                }
            }
        }
    }
    (j, g)
}
