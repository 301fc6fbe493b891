//! Deterministic synthetic videos.
//!
//! Every class owns a circular trajectory `center + amplitude * (cos θ · u + sin θ · v)`
//! through feature space, with `u`, `v` a class-specific orthonormal pair. A video
//! walks an arc of that circle, one frame per step, with isotropic Gaussian noise.
//! Training videos cover the whole turn; test videos cover a random partial arc and
//! have a random length. Each frame is independently replaced, with probability
//! `bad_frame_rate`, by a draw from a single class-independent occluder cluster.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, FrameSequence, LabeledVideo, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub num_classes: usize,
    pub dim: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub frames_train: usize,
    /// Inclusive range of test video lengths.
    pub frames_test_range: (usize, usize),
    pub noise_sigma: f64,
    pub bad_frame_rate: f64,
    /// Std of the per-coordinate class centre draw.
    pub center_scale: f64,
    /// Radius of each class trajectory.
    pub amplitude: f64,
    /// Std of the per-coordinate occluder centre draw.
    pub occluder_scale: f64,
    /// Spread of occluder frames around their centre.
    pub occluder_sigma: f64,
    /// Inclusive range of the arc covered by a test video, as a fraction of a full turn.
    pub test_arc_range: (f64, f64),
    pub seed: u64,
}

// Magnitudes are large on purpose: with the default slack weights, unit-scale
// features leave almost every hinge active.
impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            num_classes: 10,
            dim: 16,
            train_per_class: 1,
            test_per_class: 20,
            frames_train: 100,
            frames_test_range: (60, 100),
            noise_sigma: 7.0,
            bad_frame_rate: 0.3,
            center_scale: 10.0,
            amplitude: 60.0,
            occluder_scale: 30.0,
            occluder_sigma: 9.0,
            test_arc_range: (0.25, 0.75),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.num_classes == 0 {
            return fail("num_classes must be at least 1");
        }
        if self.dim < 2 {
            return fail("dim must be at least 2");
        }
        if self.frames_train == 0 {
            return fail("frames_train must be at least 1");
        }
        let (lo, hi) = self.frames_test_range;
        if lo == 0 || lo > hi {
            return fail("frames_test_range must satisfy 1 <= lo <= hi");
        }
        if !(0.0..=1.0).contains(&self.bad_frame_rate) {
            return fail("bad_frame_rate must lie in [0, 1]");
        }
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("center_scale", self.center_scale),
            ("amplitude", self.amplitude),
            ("occluder_scale", self.occluder_scale),
            ("occluder_sigma", self.occluder_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        let (a, b) = self.test_arc_range;
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b && b <= 1.0) {
            return fail("test_arc_range must satisfy 0 <= lo <= hi <= 1");
        }
        Ok(())
    }
}

/// The latent geometry a synthetic dataset was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub centers: Vec<Vec<f64>>,
    pub dir_u: Vec<Vec<f64>>,
    pub dir_v: Vec<Vec<f64>>,
    pub amplitude: f64,
    pub occluder_center: Vec<f64>,
}

impl World {
    /// Noise-free trajectory point of class `c` at angle `theta`.
    pub fn prototype(&self, c: usize, theta: f64) -> Vec<f64> {
        let (s, co) = theta.sin_cos();
        self.centers[c]
            .iter()
            .zip(&self.dir_u[c])
            .zip(&self.dir_v[c])
            .map(|((b, u), v)| b + self.amplitude * (co * u + s * v))
            .collect()
    }
}

/// A generated dataset together with its ground truth.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Per video, which frames were replaced by occluder draws.
    pub bad_frames: Vec<Vec<bool>>,
    pub world: World,
}

pub fn generate_synthetic(config: &GeneratorConfig) -> Result<Dataset> {
    Ok(generate_annotated(config)?.dataset)
}

pub fn generate_annotated(config: &GeneratorConfig) -> Result<Synthetic> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = config.dim;

    let mut centers = Vec::with_capacity(config.num_classes);
    let mut dir_u = Vec::with_capacity(config.num_classes);
    let mut dir_v = Vec::with_capacity(config.num_classes);
    for _ in 0..config.num_classes {
        centers.push(gaussian_vec(&mut rng, d, config.center_scale));
        let (u, v) = orthonormal_pair(&mut rng, d);
        dir_u.push(u);
        dir_v.push(v);
    }
    let occluder_center = gaussian_vec(&mut rng, d, config.occluder_scale);
    let world = World {
        centers,
        dir_u,
        dir_v,
        amplitude: config.amplitude,
        occluder_center,
    };

    let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let occ_noise =
        Normal::new(0.0, config.occluder_sigma).map_err(|e| Error::Config(e.to_string()))?;

    let mut videos = Vec::new();
    let mut bad_frames = Vec::new();
    for (split, per_class) in [
        (Split::Train, config.train_per_class),
        (Split::Test, config.test_per_class),
    ] {
        for c in 0..config.num_classes {
            for v in 0..per_class {
                let (n, arc) = match split {
                    Split::Train => (config.frames_train, TAU),
                    Split::Test => {
                        let (lo, hi) = config.frames_test_range;
                        let (alo, ahi) = config.test_arc_range;
                        let n = rng.random_range(lo..=hi);
                        let frac = alo + (ahi - alo) * rng.random::<f64>();
                        (n, frac * TAU)
                    }
                };
                let start = TAU * rng.random::<f64>();
                let mut data = Vec::with_capacity(n * d);
                let mut bad = Vec::with_capacity(n);
                for t in 0..n {
                    let is_bad = rng.random::<f64>() < config.bad_frame_rate;
                    if is_bad {
                        data.extend(
                            world
                                .occluder_center
                                .iter()
                                .map(|o| o + occ_noise.sample(&mut rng)),
                        );
                    } else {
                        let step = if n > 1 { t as f64 / (n - 1) as f64 } else { 0.0 };
                        let proto = world.prototype(c, start + arc * step);
                        data.extend(proto.iter().map(|p| p + noise.sample(&mut rng)));
                    }
                    bad.push(is_bad);
                }
                let tag = match split {
                    Split::Train => "train",
                    Split::Test => "test",
                };
                videos.push(LabeledVideo {
                    id: format!("{tag}_c{c:03}_{v:03}"),
                    sequence: FrameSequence::from_flat(data, d)?,
                    label: c,
                    split,
                });
                bad_frames.push(bad);
            }
        }
    }

    Ok(Synthetic {
        dataset: Dataset::new(config.num_classes, d, videos)?,
        bad_frames,
        world,
    })
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

fn orthonormal_pair(rng: &mut ChaCha8Rng, d: usize) -> (Vec<f64>, Vec<f64>) {
    loop {
        let mut u = gaussian_vec(rng, d, 1.0);
        let mut v = gaussian_vec(rng, d, 1.0);
        let nu = norm(&u);
        if nu < 1e-8 {
            continue;
        }
        u.iter_mut().for_each(|x| *x /= nu);
        let proj: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&u).for_each(|(x, a)| *x -= proj * a);
        let nv = norm(&v);
        if nv < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        return (u, v);
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
