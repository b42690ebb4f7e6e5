//! Hinge objective, its subgradients, and stochastic gradient descent over
//! sampled pairs for the three model families.
//!
//! Every family minimizes
//!
//! ```text
//! F = Σ max(0, m − y·(b − d²(x_i, x_j)))
//! ```
//!
//! one uniformly sampled pair at a time. A pair is *active* when it violates
//! the margin, `y·(b − d²) < m`; only active pairs move the parameters.

mod gradcheck;
mod sgd;

pub use gradcheck::{grad_check, GradCheckReport};

use log::warn;

use crate::data::{FeatureMatrix, PairSet};
use crate::error::{Error, Result};
use crate::kernel::KernelId;
use crate::matrix::{check_dim, dot, Matrix};
use crate::model::{Embedding, KernelizedModel, LinearModel, NonlinearModel};

/// Largest anchor set for which [`train_kml`] will build the kernel matrix.
pub const MAX_KML_ANCHORS: usize = 20_000;

/// Upper bound on the pairs used for checkpoint objective evaluation.
pub const MAX_MONITOR_PAIRS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: u64,
    pub learning_rate: f64,
    pub margin: f64,
    pub bias: f64,
    pub update_bias: bool,
    pub seed: u64,
    pub init_low: f64,
    pub init_high: f64,
    /// Checkpoint interval for the objective trace; 0 disables it.
    pub eval_every: u64,
}

impl TrainConfig {
    /// Defaults for the landmark model: `b = 0.1`, `m = 0.02`.
    pub fn nml() -> Self {
        Self {
            iterations: 1_000_000,
            learning_rate: 0.01,
            margin: 0.02,
            bias: 0.1,
            update_bias: false,
            seed: 0,
            init_low: -0.5,
            init_high: 0.5,
            eval_every: 0,
        }
    }

    /// Defaults for the linear model: `b = 1`, `m = 0.2`.
    pub fn linear() -> Self {
        Self {
            margin: 0.2,
            bias: 1.0,
            ..Self::nml()
        }
    }

    /// The kernelized model shares the landmark model's kernel-scaled defaults.
    pub fn kml() -> Self {
        Self::nml()
    }

    pub fn with_iterations(mut self, iterations: u64) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.learning_rate = learning_rate;
        self
    }

    pub fn with_hinge(mut self, bias: f64, margin: f64) -> Self {
        self.bias = bias;
        self.margin = margin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad(format!("margin must be positive, got {}", self.margin));
        }
        if !self.bias.is_finite() {
            return bad(format!("bias must be finite, got {}", self.bias));
        }
        if !(self.init_low < self.init_high && self.init_low.is_finite() && self.init_high.is_finite()) {
            return bad(format!(
                "initialization range [{}, {}) is empty",
                self.init_low, self.init_high
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub iterations: u64,
    /// Mean hinge loss over every sampled pair.
    pub final_objective_estimate: f64,
    /// `(iteration, mean hinge loss over the monitor pairs)` per checkpoint.
    pub objective_trace: Vec<(u64, f64)>,
    /// Fraction of sampled pairs that violated the margin.
    pub active_fraction: f64,
}

/// Pairs (and the features they index) on which checkpoint objectives are
/// measured.
#[derive(Debug, Clone, Copy)]
pub struct Holdout<'a> {
    pub features: &'a FeatureMatrix,
    pub pairs: &'a PairSet,
}

#[inline]
pub fn hinge_loss(y: f64, bias: f64, margin: f64, dist2: f64) -> f64 {
    (margin - y * (bias - dist2)).max(0.0)
}

#[inline]
pub(crate) fn is_active(y: f64, bias: f64, margin: f64, dist2: f64) -> bool {
    y * (bias - dist2) < margin
}

/// Subgradient of one pair's hinge loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    /// Same shape as the model's parameter matrix.
    pub params: Matrix,
    pub bias: f64,
}

/// Subgradient of `max(0, m − y·(b − d²))` with respect to the landmarks and
/// the bias; row `t` is `2·y·(k_i^t − k_j^t)·(∇k_i^t − ∇k_j^t)`.
pub fn nml_pair_subgradient(model: &NonlinearModel, xi: &[f64], xj: &[f64], y: f64) -> Result<PairGradient> {
    let dims = model.input_dim();
    check_dim(dims, xi.len())?;
    check_dim(dims, xj.len())?;
    let (d, kernel) = (model.output_dim(), model.kernel);
    let mut grad = Matrix::zeros(d, dims);
    let ki: Vec<f64> = model
        .landmarks
        .iter_rows()
        .map(|l| kernel.value_unchecked(l, xi))
        .collect();
    let kj: Vec<f64> = model
        .landmarks
        .iter_rows()
        .map(|l| kernel.value_unchecked(l, xj))
        .collect();
    let dist2: f64 = ki.iter().zip(&kj).map(|(a, b)| (a - b) * (a - b)).sum();
    if !is_active(y, model.bias, model.margin, dist2) {
        return Ok(PairGradient {
            params: grad,
            bias: 0.0,
        });
    }
    let (mut gi, mut gj) = (vec![0.0; dims], vec![0.0; dims]);
    for t in 0..d {
        let l = model.landmarks.row(t);
        kernel.gradient_into(l, xi, &mut gi);
        kernel.gradient_into(l, xj, &mut gj);
        let coef = 2.0 * y * (ki[t] - kj[t]);
        for ((g, a), b) in grad.row_mut(t).iter_mut().zip(&gi).zip(&gj) {
            *g = coef * (a - b);
        }
    }
    Ok(PairGradient { params: grad, bias: -y })
}

/// Subgradient for the linear model: `2·y·(L̃δ)·δᵀ` with `δ = x_i − x_j`.
pub fn linear_pair_subgradient(model: &LinearModel, xi: &[f64], xj: &[f64], y: f64) -> Result<PairGradient> {
    let dims = model.input_dim();
    check_dim(dims, xi.len())?;
    check_dim(dims, xj.len())?;
    let delta: Vec<f64> = xi.iter().zip(xj).map(|(a, b)| a - b).collect();
    let proj: Vec<f64> = model.projection.iter_rows().map(|r| dot(r, &delta)).collect();
    let mut grad = Matrix::zeros(model.output_dim(), dims);
    if !is_active(y, model.bias, model.margin, dot(&proj, &proj)) {
        return Ok(PairGradient {
            params: grad,
            bias: 0.0,
        });
    }
    for (t, p) in proj.iter().enumerate() {
        for (g, dc) in grad.row_mut(t).iter_mut().zip(&delta) {
            *g = 2.0 * y * p * dc;
        }
    }
    Ok(PairGradient { params: grad, bias: -y })
}

/// Subgradient for the kernelized model with respect to `A`, given the two
/// kernel vectors: `2·y·(A·δk)·δkᵀ`.
pub fn kml_pair_subgradient(model: &KernelizedModel, ki: &[f64], kj: &[f64], y: f64) -> Result<PairGradient> {
    let n = model.anchors.rows();
    check_dim(n, ki.len())?;
    check_dim(n, kj.len())?;
    let dk: Vec<f64> = ki.iter().zip(kj).map(|(a, b)| a - b).collect();
    let proj: Vec<f64> = model.coefficients.iter_rows().map(|r| dot(r, &dk)).collect();
    let mut grad = Matrix::zeros(model.output_dim(), n);
    if !is_active(y, model.bias, model.margin, dot(&proj, &proj)) {
        return Ok(PairGradient {
            params: grad,
            bias: 0.0,
        });
    }
    for (t, p) in proj.iter().enumerate() {
        for (g, dc) in grad.row_mut(t).iter_mut().zip(&dk) {
            *g = 2.0 * y * p * dc;
        }
    }
    Ok(PairGradient { params: grad, bias: -y })
}

/// Mean hinge loss of an embedding model over `pairs` (at most
/// [`MAX_MONITOR_PAIRS`] of them are used by the trainers, any number here).
pub fn mean_hinge_loss(
    model: &(impl Embedding + Sync + ?Sized),
    bias: f64,
    margin: f64,
    features: &FeatureMatrix,
    pairs: &PairSet,
) -> Result<f64> {
    use rayon::prelude::*;
    check_dim(model.input_dim(), features.dims())?;
    pairs.check_bounds(features.rows())?;
    if pairs.is_empty() {
        return Err(Error::EmptyPairSet);
    }
    let d = model.output_dim();
    // per-pair losses in pair order, summed sequentially for a stable result
    let losses: Vec<f64> = pairs
        .as_slice()
        .par_iter()
        .map(|p| {
            let (mut ei, mut ej) = (vec![0.0; d], vec![0.0; d]);
            model.embed_into(features.row(p.i), &mut ei);
            model.embed_into(features.row(p.j), &mut ej);
            let d2 = crate::matrix::squared_euclidean(&ei, &ej);
            hinge_loss(p.y(), bias, margin, d2)
        })
        .collect();
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

fn check_inputs(features: &FeatureMatrix, pairs: &PairSet, d: usize, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if d == 0 {
        return Err(Error::InvalidParameter(
            "projection dimension must be at least 1".into(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyPairSet);
    }
    pairs.check_bounds(features.rows())
}

/// Learns `d` landmarks with the given kernel.
pub fn train_nml(
    features: &FeatureMatrix,
    pairs: &PairSet,
    d: usize,
    kernel: KernelId,
    cfg: &TrainConfig,
) -> Result<(NonlinearModel, TrainReport)> {
    train_nml_monitored(features, pairs, d, kernel, cfg, None)
}

/// [`train_nml`] with checkpoint objectives measured on `holdout` instead of
/// the leading training pairs.
pub fn train_nml_monitored(
    features: &FeatureMatrix,
    pairs: &PairSet,
    d: usize,
    kernel: KernelId,
    cfg: &TrainConfig,
    holdout: Option<Holdout<'_>>,
) -> Result<(NonlinearModel, TrainReport)> {
    check_inputs(features, pairs, d, cfg)?;
    if !features.is_l1_histogram() {
        match kernel {
            KernelId::Chi2 => return Err(Error::NotL1Normalized),
            KernelId::Linear => warn!("training on features that are not l1-normalized histograms"),
        }
    }
    let mut rng = crate::rng::seeded_rng(cfg.seed);
    let landmarks = sgd::uniform_matrix(&mut rng, d, features.dims(), cfg, 1.0);
    let model = NonlinearModel::new(landmarks, cfg.bias, cfg.margin, kernel)?;
    let state = sgd::NonlinearState::new(model, features);
    sgd::run(state, features, pairs, cfg, holdout, rng)
}

/// Learns a `d × D` linear projection.
pub fn train_linear(
    features: &FeatureMatrix,
    pairs: &PairSet,
    d: usize,
    cfg: &TrainConfig,
) -> Result<(LinearModel, TrainReport)> {
    train_linear_monitored(features, pairs, d, cfg, None)
}

pub fn train_linear_monitored(
    features: &FeatureMatrix,
    pairs: &PairSet,
    d: usize,
    cfg: &TrainConfig,
    holdout: Option<Holdout<'_>>,
) -> Result<(LinearModel, TrainReport)> {
    check_inputs(features, pairs, d, cfg)?;
    let mut rng = crate::rng::seeded_rng(cfg.seed);
    let projection = sgd::uniform_matrix(&mut rng, d, features.dims(), cfg, 1.0);
    let model = LinearModel::new(projection, cfg.bias, cfg.margin)?;
    let state = sgd::LinearState::new(model, features);
    sgd::run(state, features, pairs, cfg, holdout, rng)
}

/// Learns the coefficient matrix of an exact kernelized projection over all
/// training rows. The `N × N` kernel matrix is precomputed.
pub fn train_kml(
    features: &FeatureMatrix,
    pairs: &PairSet,
    d: usize,
    kernel: KernelId,
    cfg: &TrainConfig,
) -> Result<(KernelizedModel, TrainReport)> {
    train_kml_monitored(features, pairs, d, kernel, cfg, None)
}

pub fn train_kml_monitored(
    features: &FeatureMatrix,
    pairs: &PairSet,
    d: usize,
    kernel: KernelId,
    cfg: &TrainConfig,
    holdout: Option<Holdout<'_>>,
) -> Result<(KernelizedModel, TrainReport)> {
    let n = features.rows();
    if n > MAX_KML_ANCHORS {
        return Err(Error::TooManyAnchors {
            anchors: n,
            limit: MAX_KML_ANCHORS,
        });
    }
    check_inputs(features, pairs, d, cfg)?;
    let mut rng = crate::rng::seeded_rng(cfg.seed);
    let coefficients = sgd::uniform_matrix(&mut rng, d, n, cfg, 1.0 / n as f64);
    let model = KernelizedModel::new(coefficients, features.values().clone(), cfg.bias, cfg.margin, kernel)?;
    let state = sgd::KernelizedState::new(model);
    sgd::run(state, features, pairs, cfg, holdout, rng)
}
