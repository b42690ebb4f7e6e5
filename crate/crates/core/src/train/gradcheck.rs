use rand::Rng;

use super::{hinge_loss, nml_pair_subgradient};
use crate::kernel::KernelId;
use crate::matrix::Matrix;
use crate::model::{Embedding, NonlinearModel};

const FD_STEP: f64 = 1e-6;
/// Sampled landmark coordinates and hinge arguments stay this far from the
/// non-differentiable points.
const KINK_CLEARANCE: f64 = 1e-3;
const MARGIN: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub kernel: KernelId,
    pub trials: usize,
    /// Largest `‖g_analytic − g_numeric‖_∞ / max(‖g_analytic‖_∞, ‖g_numeric‖_∞)`.
    pub max_relative_error: f64,
}

/// Compares the analytic landmark subgradient of the hinge objective with
/// central differences on random active pairs.
///
/// Each trial draws `d × D` landmarks with every coordinate at least
/// `1e-3` away from zero, two random histograms and a label, then sets the
/// bias so that the pair violates the margin by between 0.01 and 0.1.
pub fn grad_check(kernel: KernelId, d: usize, dims: usize, trials: usize, seed: u64) -> GradCheckReport {
    let mut rng = crate::rng::seeded_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let landmarks = Matrix::new(
            d,
            dims,
            (0..d * dims)
                .map(|_| {
                    let mag = rng.random_range(KINK_CLEARANCE * 2.0..0.5);
                    if rng.random_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect(),
        )
        .expect("shape");
        let xi = random_histogram(&mut rng, dims);
        let xj = random_histogram(&mut rng, dims);
        let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };

        let probe = NonlinearModel::new(landmarks.clone(), 0.0, MARGIN, kernel).expect("valid model");
        let d2 = probe.dist2(&xi, &xj).expect("dims agree");
        // y·(b − d²) = m − violation
        let violation = rng.random_range(10.0 * KINK_CLEARANCE..0.1);
        let bias = d2 + y * (MARGIN - violation);
        let model = NonlinearModel::new(landmarks, bias, MARGIN, kernel).expect("valid model");

        let analytic = nml_pair_subgradient(&model, &xi, &xj, y).expect("dims agree").params;
        let numeric = numeric_gradient(&model, &xi, &xj, y);
        worst = worst.max(relative_error(analytic.as_slice(), numeric.as_slice()));
    }
    GradCheckReport {
        kernel,
        trials,
        max_relative_error: worst,
    }
}

fn random_histogram(rng: &mut crate::rng::SeededRng, dims: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dims).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

fn numeric_gradient(model: &NonlinearModel, xi: &[f64], xj: &[f64], y: f64) -> Matrix {
    let (b, m) = (model.bias(), model.margin());
    let mut probe = model.clone();
    let mut out = Matrix::zeros(model.output_dim(), model.input_dim());
    for k in 0..out.as_slice().len() {
        let orig = probe.landmarks.as_slice()[k];
        probe.landmarks.as_mut_slice()[k] = orig + FD_STEP;
        let up = hinge_loss(y, b, m, probe.dist2(xi, xj).expect("dims agree"));
        probe.landmarks.as_mut_slice()[k] = orig - FD_STEP;
        let down = hinge_loss(y, b, m, probe.dist2(xi, xj).expect("dims agree"));
        probe.landmarks.as_mut_slice()[k] = orig;
        out.as_mut_slice()[k] = (up - down) / (2.0 * FD_STEP);
    }
    out
}

/// Max-norm relative error between two gradients; 0 when both vanish.
pub(crate) fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = inf(a).max(inf(b));
    if scale == 0.0 {
        return 0.0;
    }
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / scale
}
