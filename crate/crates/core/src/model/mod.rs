//! Embedding models and the distances they induce.
//!
//! All three metric-learning families compare vectors by squared Euclidean
//! distance after an embedding into `R^d`:
//!
//! * [`LinearModel`]: `x ↦ L̃·x`, the factored Mahalanobis-like metric.
//! * [`NonlinearModel`]: `x ↦ [k(ℓ_1, x), …, k(ℓ_d, x)]` over learned landmarks.
//! * [`KernelizedModel`]: `x ↦ A·k_x` where `k_x` holds the kernel values of
//!   `x` against every training anchor. Test cost grows with the anchor count.

mod format;

pub use format::{load_model, read_model, save_model, write_model};

use log::warn;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::kernel::KernelId;
use crate::matrix::{check_dim, dot, squared_euclidean, Matrix};
use crate::pca::PcaModel;

/// A map from `R^D` to `R^d`.
pub trait Embedding {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// Writes the embedding of `x` into `out`. Lengths are the caller's
    /// responsibility.
    fn embed_into(&self, x: &[f64], out: &mut [f64]);

    fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        let mut out = vec![0.0; self.output_dim()];
        self.embed_into(x, &mut out);
        Ok(out)
    }

    /// Squared Euclidean distance between the two embeddings.
    fn dist2(&self, xi: &[f64], xj: &[f64]) -> Result<f64> {
        Ok(squared_euclidean(&self.embed(xi)?, &self.embed(xj)?))
    }

    /// Embeds every row of `features` into an `N × d` matrix.
    fn embed_all(&self, features: &FeatureMatrix) -> Result<Matrix> {
        check_dim(self.input_dim(), features.dims())?;
        let d = self.output_dim();
        let mut out = Matrix::zeros(features.rows(), d);
        for i in 0..features.rows() {
            self.embed_into(features.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}

fn check_hyper(bias: f64, margin: f64) -> Result<()> {
    if !bias.is_finite() || !margin.is_finite() || margin <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bias must be finite and margin finite and positive (b = {bias}, m = {margin})"
        )));
    }
    Ok(())
}

fn check_params(m: &Matrix, what: &str) -> Result<()> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InvalidShape(format!("{what} must be non-empty")));
    }
    if let Some((row, col)) = m.find_non_finite() {
        return Err(Error::NonFiniteEntry { row, col });
    }
    Ok(())
}

/// Linear projection `L̃` (d × D) with the hinge bias and margin it was
/// trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub(crate) projection: Matrix,
    pub(crate) bias: f64,
    pub(crate) margin: f64,
}

impl LinearModel {
    pub fn new(projection: Matrix, bias: f64, margin: f64) -> Result<Self> {
        check_params(&projection, "projection")?;
        check_hyper(bias, margin)?;
        Ok(Self {
            projection,
            bias,
            margin,
        })
    }

    pub fn projection(&self) -> &Matrix {
        &self.projection
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }
}

impl Embedding for LinearModel {
    fn input_dim(&self) -> usize {
        self.projection.cols()
    }

    fn output_dim(&self) -> usize {
        self.projection.rows()
    }

    #[inline]
    fn embed_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.projection.iter_rows()) {
            *o = dot(row, x);
        }
    }
}

/// Landmarks `L` (d × D): row `t` is the input-space vector `ℓ_t` whose kernel
/// values give embedding coordinate `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearModel {
    pub(crate) landmarks: Matrix,
    pub(crate) bias: f64,
    pub(crate) margin: f64,
    pub(crate) kernel: KernelId,
}

impl NonlinearModel {
    pub fn new(landmarks: Matrix, bias: f64, margin: f64, kernel: KernelId) -> Result<Self> {
        check_params(&landmarks, "landmarks")?;
        check_hyper(bias, margin)?;
        Ok(Self {
            landmarks,
            bias,
            margin,
            kernel,
        })
    }

    pub fn landmarks(&self) -> &Matrix {
        &self.landmarks
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn kernel(&self) -> KernelId {
        self.kernel
    }
}

fn warn_if_not_histogram(kernel: KernelId, x: &[f64]) {
    if kernel == KernelId::Chi2
        && (x.iter().any(|&v| v < 0.0) || (x.iter().sum::<f64>() - 1.0).abs() > crate::data::NORM_TOLERANCE)
    {
        warn!("chi2 embedding of a vector that is not an l1-normalized histogram");
    }
}

impl Embedding for NonlinearModel {
    fn input_dim(&self) -> usize {
        self.landmarks.cols()
    }

    fn output_dim(&self) -> usize {
        self.landmarks.rows()
    }

    #[inline]
    fn embed_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, l) in out.iter_mut().zip(self.landmarks.iter_rows()) {
            *o = self.kernel.value_unchecked(l, x);
        }
    }

    fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        warn_if_not_histogram(self.kernel, x);
        let mut out = vec![0.0; self.output_dim()];
        self.embed_into(x, &mut out);
        Ok(out)
    }

    fn embed_all(&self, features: &FeatureMatrix) -> Result<Matrix> {
        check_dim(self.input_dim(), features.dims())?;
        if self.kernel == KernelId::Chi2 && !features.is_l1_histogram() {
            warn!("chi2 embedding of features that are not l1-normalized histograms");
        }
        let mut out = Matrix::zeros(features.rows(), self.output_dim());
        for i in 0..features.rows() {
            self.embed_into(features.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}

/// Exact kernelized projection: coefficients `A` (d × N) over `N` anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelizedModel {
    pub(crate) coefficients: Matrix,
    pub(crate) anchors: Matrix,
    pub(crate) bias: f64,
    pub(crate) margin: f64,
    pub(crate) kernel: KernelId,
}

impl KernelizedModel {
    pub fn new(coefficients: Matrix, anchors: Matrix, bias: f64, margin: f64, kernel: KernelId) -> Result<Self> {
        check_params(&coefficients, "coefficients")?;
        check_params(&anchors, "anchors")?;
        check_dim(anchors.rows(), coefficients.cols())?;
        check_hyper(bias, margin)?;
        Ok(Self {
            coefficients,
            anchors,
            bias,
            margin,
            kernel,
        })
    }

    pub fn coefficients(&self) -> &Matrix {
        &self.coefficients
    }

    pub fn anchors(&self) -> &Matrix {
        &self.anchors
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn kernel(&self) -> KernelId {
        self.kernel
    }

    /// Kernel values of `x` against every anchor.
    pub fn kernel_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.anchors.cols(), x.len())?;
        Ok(self
            .anchors
            .iter_rows()
            .map(|a| self.kernel.value_unchecked(a, x))
            .collect())
    }

    /// `‖A(k_i − k_j)‖²` from precomputed kernel vectors.
    pub fn dist2_from_kernel_vectors(&self, ki: &[f64], kj: &[f64]) -> Result<f64> {
        check_dim(self.anchors.rows(), ki.len())?;
        check_dim(self.anchors.rows(), kj.len())?;
        let dk: Vec<f64> = ki.iter().zip(kj).map(|(a, b)| a - b).collect();
        Ok(self
            .coefficients
            .iter_rows()
            .map(|r| {
                let p = dot(r, &dk);
                p * p
            })
            .sum())
    }
}

impl Embedding for KernelizedModel {
    fn input_dim(&self) -> usize {
        self.anchors.cols()
    }

    fn output_dim(&self) -> usize {
        self.coefficients.rows()
    }

    fn embed_into(&self, x: &[f64], out: &mut [f64]) {
        let k: Vec<f64> = self
            .anchors
            .iter_rows()
            .map(|a| self.kernel.value_unchecked(a, x))
            .collect();
        for (o, r) in out.iter_mut().zip(self.coefficients.iter_rows()) {
            *o = dot(r, &k);
        }
    }
}

/// Any model that can be stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Nonlinear(NonlinearModel),
    Kernelized(KernelizedModel),
    Pca(PcaModel),
}

impl Model {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Linear(_) => "linear",
            Model::Nonlinear(_) => "nonlinear",
            Model::Kernelized(_) => "kernelized",
            Model::Pca(_) => "pca",
        }
    }

    pub fn as_embedding(&self) -> &dyn Embedding {
        match self {
            Model::Linear(m) => m,
            Model::Nonlinear(m) => m,
            Model::Kernelized(m) => m,
            Model::Pca(m) => m,
        }
    }

    /// Hinge bias and margin, for the families trained with them.
    pub fn hinge_params(&self) -> Option<(f64, f64)> {
        match self {
            Model::Linear(m) => Some((m.bias, m.margin)),
            Model::Nonlinear(m) => Some((m.bias, m.margin)),
            Model::Kernelized(m) => Some((m.bias, m.margin)),
            Model::Pca(_) => None,
        }
    }
}

impl From<LinearModel> for Model {
    fn from(m: LinearModel) -> Self {
        Model::Linear(m)
    }
}

impl From<NonlinearModel> for Model {
    fn from(m: NonlinearModel) -> Self {
        Model::Nonlinear(m)
    }
}

impl From<KernelizedModel> for Model {
    fn from(m: KernelizedModel) -> Self {
        Model::Kernelized(m)
    }
}

impl From<PcaModel> for Model {
    fn from(m: PcaModel) -> Self {
        Model::Pca(m)
    }
}
