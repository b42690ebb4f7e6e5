use rand::Rng;

use super::{hinge_loss, is_active, mean_hinge_loss, Holdout, TrainConfig, TrainReport, MAX_MONITOR_PAIRS};
use crate::data::{FeatureMatrix, PairSet};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::model::{Embedding, KernelizedModel, LinearModel, NonlinearModel};
use crate::rng::SeededRng;

/// Entries drawn row-major from `U[init_low, init_high)`, times `scale`.
pub(super) fn uniform_matrix(rng: &mut SeededRng, rows: usize, cols: usize, cfg: &TrainConfig, scale: f64) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(cfg.init_low..cfg.init_high) * scale)
        .collect();
    Matrix::new(rows, cols, data).expect("shape matches data length")
}

/// Per-family distance evaluation and parameter update. `dist2` caches what
/// `descend` needs for the same pair.
pub(super) trait SgdState {
    type Model: Embedding + Sync;

    fn dist2(&mut self, features: &FeatureMatrix, i: usize, j: usize) -> f64;

    /// Moves the parameters by `-step` times half the distance gradient
    /// (`step = r·y`). Returns false if a non-finite value was produced.
    fn descend(&mut self, features: &FeatureMatrix, i: usize, j: usize, step: f64) -> bool;

    fn model(&self) -> &Self::Model;

    fn set_bias(&mut self, bias: f64);

    fn into_model(self) -> Self::Model;
}

pub(super) fn run<S: SgdState>(
    mut state: S,
    features: &FeatureMatrix,
    pairs: &PairSet,
    cfg: &TrainConfig,
    holdout: Option<Holdout<'_>>,
    mut rng: SeededRng,
) -> Result<(S::Model, TrainReport)> {
    let monitor_pairs;
    let (monitor_features, monitor_pairs) = match holdout {
        Some(h) => {
            monitor_pairs = h.pairs.head(MAX_MONITOR_PAIRS);
            (h.features, &monitor_pairs)
        }
        None => {
            monitor_pairs = pairs.head(MAX_MONITOR_PAIRS);
            (features, &monitor_pairs)
        }
    };

    let (mut bias, margin) = (cfg.bias, cfg.margin);
    let n = pairs.len();
    let mut loss_sum = 0.0;
    let mut active = 0u64;
    let mut trace = Vec::new();
    for it in 1..=cfg.iterations {
        let p = pairs.as_slice()[rng.random_range(0..n)];
        let y = p.y();
        let d2 = state.dist2(features, p.i, p.j);
        loss_sum += hinge_loss(y, bias, margin, d2);
        if is_active(y, bias, margin, d2) {
            active += 1;
            if !state.descend(features, p.i, p.j, cfg.learning_rate * y) {
                return Err(Error::NonFinite(it));
            }
            if cfg.update_bias {
                // ∂F/∂b = −y
                bias += cfg.learning_rate * y;
                state.set_bias(bias);
            }
        }
        if cfg.eval_every > 0 && it % cfg.eval_every == 0 {
            let loss = mean_hinge_loss(state.model(), bias, margin, monitor_features, monitor_pairs)?;
            trace.push((it, loss));
        }
    }

    let report = if cfg.iterations == 0 {
        TrainReport::default()
    } else {
        TrainReport {
            iterations: cfg.iterations,
            final_objective_estimate: loss_sum / cfg.iterations as f64,
            objective_trace: trace,
            active_fraction: active as f64 / cfg.iterations as f64,
        }
    };
    Ok((state.into_model(), report))
}

pub(super) struct NonlinearState {
    model: NonlinearModel,
    ki: Vec<f64>,
    kj: Vec<f64>,
    gi: Vec<f64>,
    gj: Vec<f64>,
}

impl NonlinearState {
    pub(super) fn new(model: NonlinearModel, features: &FeatureMatrix) -> Self {
        let (d, dims) = (model.output_dim(), features.dims());
        Self {
            model,
            ki: vec![0.0; d],
            kj: vec![0.0; d],
            gi: vec![0.0; dims],
            gj: vec![0.0; dims],
        }
    }
}

impl SgdState for NonlinearState {
    type Model = NonlinearModel;

    fn dist2(&mut self, features: &FeatureMatrix, i: usize, j: usize) -> f64 {
        let (xi, xj) = (features.row(i), features.row(j));
        let kernel = self.model.kernel;
        let mut d2 = 0.0;
        for (t, l) in self.model.landmarks.iter_rows().enumerate() {
            self.ki[t] = kernel.value_unchecked(l, xi);
            self.kj[t] = kernel.value_unchecked(l, xj);
            let diff = self.ki[t] - self.kj[t];
            d2 += diff * diff;
        }
        d2
    }

    fn descend(&mut self, features: &FeatureMatrix, i: usize, j: usize, step: f64) -> bool {
        let (xi, xj) = (features.row(i), features.row(j));
        let kernel = self.model.kernel;
        let mut finite = true;
        for t in 0..self.ki.len() {
            let coef = step * (self.ki[t] - self.kj[t]);
            let row = self.model.landmarks.row_mut(t);
            kernel.gradient_into(row, xi, &mut self.gi);
            kernel.gradient_into(row, xj, &mut self.gj);
            for ((l, a), b) in row.iter_mut().zip(&self.gi).zip(&self.gj) {
                *l -= coef * (a - b);
                finite &= l.is_finite();
            }
        }
        finite
    }

    fn model(&self) -> &NonlinearModel {
        &self.model
    }

    fn set_bias(&mut self, bias: f64) {
        self.model.bias = bias;
    }

    fn into_model(self) -> NonlinearModel {
        self.model
    }
}

/// Arithmetic mirrors [`NonlinearState`] with the linear kernel operation for
/// operation, so both trainers produce the same model from the same stream.
pub(super) struct LinearState {
    model: LinearModel,
    pi: Vec<f64>,
    pj: Vec<f64>,
}

impl LinearState {
    pub(super) fn new(model: LinearModel, _features: &FeatureMatrix) -> Self {
        let d = model.output_dim();
        Self {
            model,
            pi: vec![0.0; d],
            pj: vec![0.0; d],
        }
    }
}

impl SgdState for LinearState {
    type Model = LinearModel;

    fn dist2(&mut self, features: &FeatureMatrix, i: usize, j: usize) -> f64 {
        let (xi, xj) = (features.row(i), features.row(j));
        let mut d2 = 0.0;
        for (t, r) in self.model.projection.iter_rows().enumerate() {
            self.pi[t] = dot(r, xi);
            self.pj[t] = dot(r, xj);
            let diff = self.pi[t] - self.pj[t];
            d2 += diff * diff;
        }
        d2
    }

    fn descend(&mut self, features: &FeatureMatrix, i: usize, j: usize, step: f64) -> bool {
        let (xi, xj) = (features.row(i), features.row(j));
        let mut finite = true;
        for t in 0..self.pi.len() {
            let coef = step * (self.pi[t] - self.pj[t]);
            for ((l, a), b) in self.model.projection.row_mut(t).iter_mut().zip(xi).zip(xj) {
                *l -= coef * (a - b);
                finite &= l.is_finite();
            }
        }
        finite
    }

    fn model(&self) -> &LinearModel {
        &self.model
    }

    fn set_bias(&mut self, bias: f64) {
        self.model.bias = bias;
    }

    fn into_model(self) -> LinearModel {
        self.model
    }
}

pub(super) struct KernelizedState {
    model: KernelizedModel,
    /// `K[a][b] = k(x_a, x_b)` over the training rows.
    gram: Matrix,
    dk: Vec<f64>,
    proj: Vec<f64>,
}

impl KernelizedState {
    pub(super) fn new(model: KernelizedModel) -> Self {
        let x = &model.anchors;
        let n = x.rows();
        let mut gram = Matrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v = model.kernel.value_unchecked(x.row(a), x.row(b));
                gram.row_mut(a)[b] = v;
                gram.row_mut(b)[a] = v;
            }
        }
        let d = model.output_dim();
        Self {
            model,
            gram,
            dk: vec![0.0; n],
            proj: vec![0.0; d],
        }
    }
}

impl SgdState for KernelizedState {
    type Model = KernelizedModel;

    fn dist2(&mut self, _features: &FeatureMatrix, i: usize, j: usize) -> f64 {
        for ((d, a), b) in self.dk.iter_mut().zip(self.gram.row(i)).zip(self.gram.row(j)) {
            *d = a - b;
        }
        let mut d2 = 0.0;
        for (t, r) in self.model.coefficients.iter_rows().enumerate() {
            self.proj[t] = dot(r, &self.dk);
            d2 += self.proj[t] * self.proj[t];
        }
        d2
    }

    fn descend(&mut self, _features: &FeatureMatrix, _i: usize, _j: usize, step: f64) -> bool {
        let mut finite = true;
        for t in 0..self.proj.len() {
            let coef = step * self.proj[t];
            for (a, d) in self.model.coefficients.row_mut(t).iter_mut().zip(&self.dk) {
                *a -= coef * d;
                finite &= a.is_finite();
            }
        }
        finite
    }

    fn model(&self) -> &KernelizedModel {
        &self.model
    }

    fn set_bias(&mut self, bias: f64) {
        self.model.bias = bias;
    }

    fn into_model(self) -> KernelizedModel {
        self.model
    }
}
