//! Bundle method for `min_w 0.5 |w|^2 + R(w)` with a possibly non-convex risk.
//!
//! Each iterate contributes a cutting plane `a . w + b` anchored at the risk value
//! and subgradient there. The master problem
//!
//! ```text
//! J_hat(w) = 0.5 |w|^2 + max(0, max_k a_k . w + b_k)
//! ```
//!
//! is solved through its dual, a concave quadratic over the simplex
//! `{lambda >= 0, sum lambda <= 1}` (the slack weight belongs to the implicit zero
//! plane), by pairwise coordinate ascent. The gap `best J - min J_hat` certifies
//! convergence. When the risk is non-convex a plane can overshoot the risk at the
//! best point seen so far; such planes have their offset lowered until they pass
//! through it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::dot;
use crate::model::ModelParams;
use crate::objective::{evaluate, Hyperparams, RiskProblem, Subsampling, VariantFlags};
use crate::seqdata::Dataset;

/// Stationarity tolerance of the master dual.
pub const MASTER_TOL: f64 = 1e-10;
const MASTER_MAX_SWEEPS: usize = 2_000_000;
const ADJUST_SLACK: f64 = 1e-12;
const GAP_CLAMP: f64 = 1e-9;
/// Half-width of the uniform initial weights.
pub const INIT_RANGE: f64 = 0.01;

/// Linear under-estimator `a . w + b` of the risk.
#[derive(Debug, Clone, PartialEq)]
pub struct CuttingPlane {
    pub a: Vec<f64>,
    pub b: f64,
}

impl CuttingPlane {
    /// The plane through `(w, risk)` with slope `subgrad`.
    pub fn anchored(w: &[f64], risk: f64, subgrad: Vec<f64>) -> Self {
        let b = risk - dot(&subgrad, w);
        CuttingPlane { a: subgrad, b }
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        dot(&self.a, w) + self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub w: Vec<f64>,
    /// `J_hat(w)` at the returned minimiser.
    pub lower_bound: f64,
    /// Dual weights of the stored planes (the zero plane takes `1 - sum`).
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BundleState {
    dim: usize,
    planes: Vec<CuttingPlane>,
    /// Row-major Gram matrix of plane slopes.
    gram: Vec<Vec<f64>>,
    /// Warm start for the dual, one weight per plane.
    lambda: Vec<f64>,
    history: Vec<(Vec<f64>, f64)>,
    best_w: Vec<f64>,
    best_j: f64,
    best_risk: f64,
    lower_bound: f64,
    gap: f64,
    adjustments: usize,
}

impl BundleState {
    pub fn new(dim: usize) -> Self {
        BundleState {
            dim,
            planes: Vec::new(),
            gram: Vec::new(),
            lambda: Vec::new(),
            history: Vec::new(),
            best_w: vec![0.0; dim],
            best_j: f64::INFINITY,
            best_risk: f64::INFINITY,
            lower_bound: 0.0,
            gap: f64::INFINITY,
            adjustments: 0,
        }
    }

    pub fn planes(&self) -> &[CuttingPlane] {
        &self.planes
    }

    pub fn history(&self) -> &[(Vec<f64>, f64)] {
        &self.history
    }

    pub fn best_w(&self) -> &[f64] {
        &self.best_w
    }

    pub fn best_objective(&self) -> f64 {
        self.best_j
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// Number of plane offsets lowered so far.
    pub fn adjustments(&self) -> usize {
        self.adjustments
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: w.len(),
            });
        }
        Ok(())
    }

    /// Records `J(w)` and `R(w)` at an iterate and updates the incumbent.
    pub fn record_iterate(&mut self, w: &[f64], objective: f64, risk: f64) -> Result<()> {
        self.check(w)?;
        self.history.push((w.to_vec(), objective));
        if objective < self.best_j {
            self.best_j = objective;
            self.best_risk = risk;
            self.best_w = w.to_vec();
            for k in 0..self.planes.len() {
                self.lower_through_best(k);
            }
        }
        Ok(())
    }

    fn lower_through_best(&mut self, k: usize) {
        if !self.best_risk.is_finite() {
            return;
        }
        let at_best = self.planes[k].value(&self.best_w);
        if at_best > self.best_risk + ADJUST_SLACK {
            self.planes[k].b -= at_best - self.best_risk;
            self.adjustments += 1;
        }
    }

    /// Adds the plane anchored at `(w, risk)`, then lowers it if it overshoots the
    /// risk at the incumbent.
    pub fn add_plane(&mut self, w: &[f64], risk: f64, subgrad: Vec<f64>) -> Result<()> {
        self.check(w)?;
        self.check(&subgrad)?;
        let plane = CuttingPlane::anchored(w, risk, subgrad);
        let row: Vec<f64> = self.planes.iter().map(|p| dot(&p.a, &plane.a)).collect();
        for (r, g) in self.gram.iter_mut().zip(&row) {
            r.push(*g);
        }
        let mut row = row;
        row.push(dot(&plane.a, &plane.a));
        self.gram.push(row);
        self.planes.push(plane);
        self.lambda.push(0.0);
        let k = self.planes.len() - 1;
        self.lower_through_best(k);
        Ok(())
    }

    /// Cutting-plane model `J_hat(w)`.
    pub fn model_value(&self, w: &[f64]) -> f64 {
        let cut = self
            .planes
            .iter()
            .map(|p| p.value(w))
            .fold(0.0_f64, f64::max);
        0.5 * dot(w, w) + cut
    }

    /// Minimises the cutting-plane model.
    pub fn solve_master(&mut self) -> MasterSolution {
        let n = self.planes.len();
        if n == 0 {
            self.lower_bound = 0.0;
            return MasterSolution {
                w: vec![0.0; self.dim],
                lower_bound: 0.0,
                lambda: Vec::new(),
            };
        }
        // Index n is the zero plane: a = 0, b = 0.
        let mut lam = self.lambda.clone();
        let used: f64 = lam.iter().sum();
        lam.push((1.0 - used).max(0.0));
        let gram = |i: usize, j: usize| if i == n || j == n { 0.0 } else { self.gram[i][j] };
        let offset = |i: usize| if i == n { 0.0 } else { self.planes[i].b };

        // g_k = b_k - (G lambda)_k, the value of plane k at w = -sum lambda a.
        let full_grad = |lam: &[f64]| -> Vec<f64> {
            (0..=n)
                .map(|k| offset(k) - (0..n).map(|j| gram(k, j) * lam[j]).sum::<f64>())
                .collect()
        };
        let mut g = full_grad(&lam);
        let mut fresh = true;
        for sweep in 0..MASTER_MAX_SWEEPS {
            let mut up = 0;
            let mut down = usize::MAX;
            for k in 0..=n {
                if g[k] > g[up] {
                    up = k;
                }
                if lam[k] > 0.0 && (down == usize::MAX || g[k] < g[down]) {
                    down = k;
                }
            }
            if down == usize::MAX || g[up] - g[down] <= MASTER_TOL {
                if fresh {
                    break;
                }
                // incremental updates drift; confirm on a recomputed gradient
                g = full_grad(&lam);
                fresh = true;
                continue;
            }
            let curvature = gram(up, up) + gram(down, down) - 2.0 * gram(up, down);
            let step = if curvature > 0.0 {
                ((g[up] - g[down]) / curvature).min(lam[down])
            } else {
                lam[down]
            };
            lam[up] += step;
            lam[down] -= step;
            for (k, gk) in g.iter_mut().enumerate() {
                *gk -= step * (gram(k, up) - gram(k, down));
            }
            fresh = false;
            if sweep % 1000 == 999 {
                g = full_grad(&lam);
                fresh = true;
            }
        }

        let mut w = vec![0.0; self.dim];
        for (p, &l) in self.planes.iter().zip(&lam) {
            if l != 0.0 {
                for (wi, ai) in w.iter_mut().zip(&p.a) {
                    *wi -= l * ai;
                }
            }
        }
        lam.pop();
        self.lambda = lam.clone();
        let lower_bound = self.model_value(&w);
        self.lower_bound = lower_bound;
        MasterSolution {
            w,
            lower_bound,
            lambda: lam,
        }
    }

    /// `best J - min J_hat`, using the bound from the last master solve.
    pub fn compute_gap(&mut self) -> f64 {
        let mut gap = self.best_j - self.lower_bound;
        if gap < 0.0 && gap > -GAP_CLAMP {
            gap = 0.0;
        }
        self.gap = gap;
        gap
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub objective: f64,
    pub risk: f64,
    pub best_objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub active_r1: usize,
    pub active_r2: usize,
    pub skipped_r2: usize,
    pub adjustments: usize,
}

impl IterationLog {
    pub const HEADER: &'static str =
        "iteration objective risk best_objective lower_bound gap active_r1 active_r2 skipped_r2 adjustments";

    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {} {} {}",
            self.iteration,
            self.objective,
            self.risk,
            self.best_objective,
            self.lower_bound,
            self.gap,
            self.active_r1,
            self.active_r2,
            self.skipped_r2,
            self.adjustments
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights of the best iterate.
    pub model: ModelParams,
    pub log: Vec<IterationLog>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainOptions {
    pub seed: u64,
    /// Worker threads for risk evaluation; results do not depend on it.
    pub threads: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { seed: 0, threads: 1 }
    }
}

/// Uniform weights in `[-INIT_RANGE, INIT_RANGE]`.
pub fn initial_weights(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE)).collect()
}

/// Alternates latent inference and bundle steps until the gap drops below epsilon.
pub fn train(
    train: &Dataset,
    subsampling: &Subsampling,
    flags: VariantFlags,
    hp: &Hyperparams,
    opts: TrainOptions,
) -> Result<TrainOutcome> {
    if train.num_classes < 2 {
        return Err(Error::Domain("training needs at least 2 classes".into()));
    }
    let problem = RiskProblem::new(train, subsampling, flags, hp)?;
    train_problem(&problem, hp, opts)
}

/// [`train`] on an already expanded problem.
pub fn train_problem(problem: &RiskProblem, hp: &Hyperparams, opts: TrainOptions) -> Result<TrainOutcome> {
    train_problem_observed(problem, hp, opts, |_, _| {})
}

/// [`train_problem`], calling `observe` after every master solve.
pub fn train_problem_observed(
    problem: &RiskProblem,
    hp: &Hyperparams,
    opts: TrainOptions,
    mut observe: impl FnMut(&BundleState, &IterationLog),
) -> Result<TrainOutcome> {
    let (k, d) = (problem.num_classes(), problem.dim());
    let mut w = initial_weights(k * d, opts.seed);
    let mut state = BundleState::new(k * d);
    let mut log = Vec::new();
    let mut converged = false;

    for iteration in 1..=hp.max_iter {
        let model = ModelParams::from_vec(k, d, w)?;
        let eval = evaluate(&model, problem, hp, opts.threads)?;
        if !eval.objective.is_finite() || eval.subgradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical {
                iteration,
                msg: format!(
                    "objective {} at w = {:?}",
                    eval.objective,
                    model.weights()
                ),
            });
        }
        let w_cur = model.into_weights();
        state.record_iterate(&w_cur, eval.objective, eval.risk)?;
        state.add_plane(&w_cur, eval.risk, eval.subgradient)?;
        let sol = state.solve_master();
        let gap = state.compute_gap();
        log.push(IterationLog {
            iteration,
            objective: eval.objective,
            risk: eval.risk,
            best_objective: state.best_objective(),
            lower_bound: sol.lower_bound,
            gap,
            active_r1: eval.terms.active_r1(),
            active_r2: eval.terms.active_r2(),
            skipped_r2: eval.terms.skipped_r2(),
            adjustments: state.adjustments(),
        });
        observe(&state, &log[log.len() - 1]);
        if gap < hp.epsilon {
            converged = true;
            break;
        }
        w = sol.w;
    }

    Ok(TrainOutcome {
        model: ModelParams::from_vec(k, d, state.best_w().to_vec())?,
        log,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_plane_master_closed_form() {
        // theta = min(1, b / |a|^2), w = -theta a
        for (b, theta) in [(1.0, 1.0), (0.5, 0.5)] {
            let mut s = BundleState::new(2);
            s.planes.push(CuttingPlane { a: vec![1.0, 0.0], b });
            s.gram.push(vec![1.0]);
            s.lambda.push(0.0);
            let sol = s.solve_master();
            assert!((sol.w[0] + theta).abs() < 1e-10 && sol.w[1] == 0.0);
            let expect = 0.5 * theta * theta + (b - theta).max(0.0);
            assert!((sol.lower_bound - expect).abs() < 1e-10, "{sol:?}");
        }
    }

    #[test]
    fn nonpositive_offsets_keep_zero() {
        let mut s = BundleState::new(2);
        s.add_plane(&[0.0, 0.0], -0.5, vec![1.0, 2.0]).unwrap();
        s.add_plane(&[0.0, 0.0], 0.0, vec![-3.0, 1.0]).unwrap();
        let sol = s.solve_master();
        assert_eq!(sol.w, vec![0.0, 0.0]);
        assert_eq!(sol.lower_bound, 0.0);
        assert!(s.solve_master().lambda.iter().all(|l| *l == 0.0));
    }

    #[test]
    fn empty_bundle() {
        let mut s = BundleState::new(3);
        let sol = s.solve_master();
        assert_eq!(sol.w, vec![0.0; 3]);
        assert_eq!(sol.lower_bound, 0.0);
    }

    #[test]
    fn plane_is_exact_at_anchor() {
        let w = [0.3, -1.2, 2.0];
        let p = CuttingPlane::anchored(&w, 4.5, vec![1.0, 0.5, -0.25]);
        assert!((p.value(&w) - 4.5).abs() < 1e-15);
    }

    #[test]
    fn exact_linear_model_has_zero_gap() {
        // R(w) = max(0, a . w + b) is exactly one plane; after evaluating at its
        // master minimiser the gap closes.
        let a = vec![1.0, -2.0];
        let b = 3.0;
        let risk = |w: &[f64]| (dot(&a, w) + b).max(0.0);
        let mut s = BundleState::new(2);
        let w0 = vec![0.0, 0.0];
        s.record_iterate(&w0, 0.5 * dot(&w0, &w0) + risk(&w0), risk(&w0)).unwrap();
        s.add_plane(&w0, risk(&w0), a.clone()).unwrap();
        let sol = s.solve_master();
        s.record_iterate(&sol.w, 0.5 * dot(&sol.w, &sol.w) + risk(&sol.w), risk(&sol.w))
            .unwrap();
        assert_eq!(s.compute_gap(), 0.0);
    }

    #[test]
    fn overshooting_plane_is_lowered_through_incumbent() {
        // A concave-ish risk: planes taken away from the incumbent overshoot it.
        let risk = |w: &[f64]| 1.0 - 0.5 * w[0] * w[0];
        let grad = |w: &[f64]| vec![-w[0]];
        let mut s = BundleState::new(1);
        for x in [0.0, 1.0, -2.0] {
            let w = vec![x];
            s.record_iterate(&w, 0.5 * x * x + risk(&w), risk(&w)).unwrap();
            s.add_plane(&w, risk(&w), grad(&w)).unwrap();
        }
        let best = s.best_w().to_vec();
        let best_risk = risk(&best);
        for p in s.planes() {
            assert!(p.value(&best) <= best_risk + 1e-12);
        }
        assert!(s.adjustments() > 0);
        s.solve_master();
        assert!(s.compute_gap() >= -1e-9);
    }

    #[test]
    fn convex_risk_needs_no_adjustment() {
        let risk = |w: &[f64]| (w[0] - 1.0).abs() + (w[1] + 2.0).abs();
        let grad = |w: &[f64]| vec![(w[0] - 1.0).signum(), (w[1] + 2.0).signum()];
        let mut s = BundleState::new(2);
        let mut w = vec![0.3, 0.1];
        for _ in 0..20 {
            let r = risk(&w);
            s.record_iterate(&w, 0.5 * dot(&w, &w) + r, r).unwrap();
            s.add_plane(&w, r, grad(&w)).unwrap();
            w = s.solve_master().w;
        }
        assert_eq!(s.adjustments(), 0);
        // minimiser of 0.5|w|^2 + |w0 - 1| + |w1 + 2| is (1, -1), value 2
        assert!((s.best_objective() - (0.5 * (1.0 + 1.0) + 0.0 + 1.0)).abs() < 1e-6);
    }

    #[test]
    fn master_kkt_holds() {
        let mut s = BundleState::new(3);
        let pts = [[0.0, 0.0, 0.0], [1.0, -1.0, 0.5], [-0.5, 2.0, 1.0], [0.2, 0.2, -3.0]];
        let slopes = [[1.0, 2.0, -1.0], [-2.0, 0.5, 1.0], [0.3, -1.5, 2.0], [1.0, 1.0, 1.0]];
        for (p, a) in pts.iter().zip(slopes) {
            s.add_plane(p, 3.0, a.to_vec()).unwrap();
        }
        let sol = s.solve_master();
        let vals: Vec<f64> = s.planes().iter().map(|p| p.value(&sol.w)).collect();
        let top = vals.iter().copied().fold(0.0_f64, f64::max);
        for (l, v) in sol.lambda.iter().zip(&vals) {
            if *l > 0.0 {
                assert!((top - v).abs() < 1e-8, "{l} {v} {top}");
            }
        }
        let zero_weight = 1.0 - sol.lambda.iter().sum::<f64>();
        if zero_weight > 0.0 {
            assert!(top.abs() < 1e-8);
        }
    }

    #[test]
    fn initial_weights_are_small_and_seeded() {
        let a = initial_weights(50, 4);
        assert_eq!(a, initial_weights(50, 4));
        assert_ne!(a, initial_weights(50, 5));
        assert!(a.iter().all(|v| v.abs() <= INIT_RANGE));
    }
}
