//! Synthetic histogram datasets with known class structure.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{FeatureMatrix, Labels, NormState};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{seeded_rng, SeededRng};

/// Relative multiplicative noise applied to each nonzero histogram bin by
/// [`synth_nonlinear`].
const NONLINEAR_JITTER: f64 = 0.1;

/// Gaussian blobs around per-class prototype histograms.
///
/// Class `c` owns the block of coordinates `[c·D/C, (c+1)·D/C)`; its
/// prototype is `1 + separation` on that block and `1` elsewhere. Each sample
/// adds unit Gaussian noise, clips at zero and is l1-normalized. Rows are
/// grouped by class.
pub fn synth_blobs(
    classes: usize,
    per_class: usize,
    dims: usize,
    separation: f64,
    seed: u64,
) -> Result<(FeatureMatrix, Labels)> {
    if classes < 2 || per_class < 2 || dims < classes {
        return Err(Error::InvalidParameter(format!(
            "blobs need classes >= 2, per_class >= 2, dims >= classes (got {classes}, {per_class}, {dims})"
        )));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "separation must be finite and non-negative, got {separation}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut data = Vec::with_capacity(classes * per_class * dims);
    let mut labels = Vec::with_capacity(classes * per_class);
    let mut row = vec![0.0; dims];
    for c in 0..classes {
        let (lo, hi) = (c * dims / classes, (c + 1) * dims / classes);
        for _ in 0..per_class {
            loop {
                for (k, v) in row.iter_mut().enumerate() {
                    let base = if (lo..hi).contains(&k) { 1.0 + separation } else { 1.0 };
                    let noise: f64 = rng.sample(StandardNormal);
                    *v = (base + noise).max(0.0);
                }
                // an all-zero draw has no histogram; redraw it
                if row.iter().any(|&v| v > 0.0) {
                    break;
                }
            }
            push_normalized(&mut data, &row);
            labels.push(c as u32);
        }
    }
    let values = Matrix::new(classes * per_class, dims, data)?;
    Ok((FeatureMatrix::with_norm(values, NormState::L1)?, Labels::new(labels)))
}

/// Two classes of histograms that no linear functional separates.
///
/// Class 0 rows spread their mass evenly over `s = max(2, D/4)` bins. Class 1
/// rows put mass `p` on a few bins and `q` on all the others, with `p, q`
/// chosen so that both classes have the same total mass and the same sum of
/// squares. Bins are randomly permuted per row and jittered multiplicatively,
/// so the first two moments of every linear projection (and of the l2 norm)
/// match across classes while the support size, which the chi2 kernel sees,
/// differs.
pub fn synth_nonlinear(classes: usize, per_class: usize, dims: usize, seed: u64) -> Result<(FeatureMatrix, Labels)> {
    if classes != 2 || dims < 4 || per_class < 2 {
        return Err(Error::InvalidParameter(format!(
            "nonlinear data needs classes = 2, per_class >= 2, dims >= 4 (got {classes}, {per_class}, {dims})"
        )));
    }
    let profiles = nonlinear_profiles(dims);
    let mut rng = seeded_rng(seed);
    let mut data = Vec::with_capacity(2 * per_class * dims);
    let mut labels = Vec::with_capacity(2 * per_class);
    let mut row = vec![0.0; dims];
    for (c, profile) in profiles.iter().enumerate() {
        for _ in 0..per_class {
            jittered_permutation(profile, &mut row, &mut rng);
            push_normalized(&mut data, &row);
            labels.push(c as u32);
        }
    }
    let values = Matrix::new(2 * per_class, dims, data)?;
    Ok((FeatureMatrix::with_norm(values, NormState::L1)?, Labels::new(labels)))
}

/// The two sorted class profiles used by [`synth_nonlinear`].
pub(crate) fn nonlinear_profiles(dims: usize) -> [Vec<f64>; 2] {
    let spread = (dims / 4).max(2);
    let mut flat = vec![0.0; dims];
    flat[..spread].fill(1.0 / spread as f64);

    // Solve n_p·p + n_q·q = 1 and n_p·p² + n_q·q² = 1/spread for the larger root p.
    let n_p = (spread / 4).max(1) as f64;
    let n_q = dims as f64 - n_p;
    let target = 1.0 / spread as f64;
    let a = n_p * (n_p + n_q);
    let b = -2.0 * n_p;
    let c = 1.0 - target * n_q;
    let p = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    let q = (1.0 - n_p * p) / n_q;
    let mut peaked = vec![q; dims];
    peaked[..n_p as usize].fill(p);
    [flat, peaked]
}

fn jittered_permutation(profile: &[f64], row: &mut [f64], rng: &mut SeededRng) {
    loop {
        row.copy_from_slice(profile);
        row.shuffle(rng);
        for v in row.iter_mut().filter(|v| **v > 0.0) {
            let noise: f64 = rng.sample(StandardNormal);
            *v = (*v * (1.0 + NONLINEAR_JITTER * noise)).max(0.0);
        }
        if row.iter().any(|&v| v > 0.0) {
            break;
        }
    }
}

fn push_normalized(data: &mut Vec<f64>, row: &[f64]) {
    let s: f64 = row.iter().sum();
    data.extend(row.iter().map(|v| v / s));
}
