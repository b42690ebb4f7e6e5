//! Unsupervised PCA projection, the comparison baseline for the learned
//! embeddings.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::{FeatureMatrix, NormState};
use crate::error::{Error, Result};
use crate::matrix::{check_dim, dot, Matrix};
use crate::model::Embedding;

/// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    components: Matrix,
    explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn from_parts(mean: Vec<f64>, components: Matrix, explained_variance: Vec<f64>) -> Result<Self> {
        check_dim(components.cols(), mean.len())?;
        check_dim(components.rows(), explained_variance.len())?;
        if components.rows() == 0 || components.cols() == 0 {
            return Err(Error::InvalidShape("PCA needs at least one component".into()));
        }
        if let Some((row, col)) = components.find_non_finite() {
            return Err(Error::NonFiniteEntry { row, col });
        }
        if mean.iter().chain(&explained_variance).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite PCA mean or variance".into()));
        }
        Ok(Self {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `d × D`, orthonormal rows in order of decreasing variance.
    pub fn components(&self) -> &Matrix {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Number of components carrying nonzero variance.
    pub fn rank(&self) -> usize {
        self.explained_variance.iter().filter(|&&v| v > 0.0).count()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.embed(x)
    }
}

impl Embedding for PcaModel {
    fn input_dim(&self) -> usize {
        self.components.cols()
    }

    fn output_dim(&self) -> usize {
        self.components.rows()
    }

    fn embed_into(&self, x: &[f64], out: &mut [f64]) {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (o, c) in out.iter_mut().zip(self.components.iter_rows()) {
            *o = dot(c, &centered);
        }
    }
}

/// Fits the top-`d` principal directions of `features`.
///
/// Decomposes the `N × N` Gram matrix when `N < D` and the `D × D` covariance
/// otherwise. Each component is sign-flipped so that its largest-magnitude
/// entry is positive. When the centered data has rank below `d`, the missing
/// directions are completed to an orthonormal set with zero variance and a
/// warning is logged; [`PcaModel::rank`] reports the true rank.
pub fn fit_pca(features: &FeatureMatrix, d: usize) -> Result<PcaModel> {
    let (n, dims) = (features.rows(), features.dims());
    if n < 2 {
        return Err(Error::InvalidParameter("PCA needs at least two rows".into()));
    }
    if d == 0 || d > n.min(dims) {
        return Err(Error::InvalidParameter(format!(
            "PCA dimension {d} must lie in [1, min(N, D) = {}]",
            n.min(dims)
        )));
    }
    if features.norm_state() != NormState::L2 {
        warn!("PCA baseline fitted on features that are not l2-normalized");
    }

    let mut mean = vec![0.0; dims];
    for r in features.values().iter_rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, dims, |i, j| features.row(i)[j] - mean[j]);
    let scale = 1.0 / (n as f64 - 1.0);

    // (variance, direction) pairs, unsorted
    let mut pairs: Vec<(f64, Vec<f64>)> = if n < dims {
        let gram = &centered * centered.transpose();
        let eig = SymmetricEigen::new(gram);
        eig.eigenvalues
            .iter()
            .zip(eig.eigenvectors.column_iter())
            .map(|(&lambda, u)| {
                let v = centered.transpose() * u;
                let norm = v.norm();
                let dir = if norm > 0.0 {
                    v.iter().map(|x| x / norm).collect()
                } else {
                    vec![0.0; dims]
                };
                (lambda * scale, dir)
            })
            .collect()
    } else {
        let cov = centered.transpose() * &centered * scale;
        let eig = SymmetricEigen::new(cov);
        eig.eigenvalues
            .iter()
            .zip(eig.eigenvectors.column_iter())
            .map(|(&lambda, v)| (lambda, v.iter().copied().collect()))
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let top = pairs.first().map_or(0.0, |p| p.0).max(0.0);
    let threshold = top * RANK_TOLERANCE;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut variance = Vec::with_capacity(d);
    for (lambda, dir) in pairs.into_iter().take(d) {
        if lambda <= threshold || top == 0.0 {
            break;
        }
        if let Some(v) = orthonormalize(dir, &basis) {
            basis.push(v);
            variance.push(lambda);
        }
    }
    let rank = basis.len();
    if rank < d {
        warn!("data has rank {rank} < {d}; padding PCA with zero-variance directions");
        for e in 0..dims {
            if basis.len() == d {
                break;
            }
            let mut unit = vec![0.0; dims];
            unit[e] = 1.0;
            if let Some(v) = orthonormalize(unit, &basis) {
                basis.push(v);
                variance.push(0.0);
            }
        }
    }

    for v in &mut basis {
        let (_, pivot) =
            v.iter().enumerate().fold(
                (0.0f64, 0usize),
                |(best, bi), (i, x)| {
                    if x.abs() > best {
                        (x.abs(), i)
                    } else {
                        (best, bi)
                    }
                },
            );
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    PcaModel::from_parts(mean, Matrix::from_rows(&basis)?, variance)
}

/// Two passes of modified Gram-Schmidt against `basis`; `None` when `v` lies
/// (numerically) in its span.
fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let start = dot(&v, &v).sqrt();
    if start == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let norm = dot(&v, &v).sqrt();
    if norm <= 1e-8 * start {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}
