//! Feature matrices, class labels and pairwise constraints.

mod pairs;
mod synth;

pub use pairs::{generate_pairs, PairConstraint, PairLabel, PairSet, DEFAULT_POS_FRACTION};
pub use synth::{synth_blobs, synth_nonlinear};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Tolerance on row sums / norms for a matrix declared normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormState {
    #[default]
    Raw,
    L1,
    L2,
}

/// `N` feature vectors of dimension `D`, with the normalization they are
/// known to satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Matrix,
    norm: NormState,
}

impl FeatureMatrix {
    /// Wraps raw values. Requires `N, D >= 1` and finite entries.
    pub fn new(values: Matrix) -> Result<Self> {
        Self::with_norm(values, NormState::Raw)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Wraps values and checks that they satisfy the declared normalization.
    pub fn with_norm(values: Matrix, norm: NormState) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::InvalidShape(format!(
                "feature matrix must be non-empty, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if let Some((row, col)) = values.find_non_finite() {
            return Err(Error::NonFiniteEntry { row, col });
        }
        let fm = Self { values, norm };
        match norm {
            NormState::Raw => {}
            NormState::L1 => {
                fm.check_non_negative()?;
                for (i, r) in fm.values.iter_rows().enumerate() {
                    let s: f64 = r.iter().sum();
                    if (s - 1.0).abs() > NORM_TOLERANCE {
                        return Err(Error::InvalidParameter(format!("row {i} sums to {s}, not 1")));
                    }
                }
            }
            NormState::L2 => {
                for (i, r) in fm.values.iter_rows().enumerate() {
                    let n = crate::matrix::dot(r, r).sqrt();
                    if (n - 1.0).abs() > NORM_TOLERANCE {
                        return Err(Error::InvalidParameter(format!("row {i} has norm {n}, not 1")));
                    }
                }
            }
        }
        Ok(fm)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn dims(&self) -> usize {
        self.values.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn norm_state(&self) -> NormState {
        self.norm
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    /// True when every row is a non-negative histogram summing to one,
    /// whatever the declared state.
    pub fn is_l1_histogram(&self) -> bool {
        self.norm == NormState::L1
            || self
                .values
                .iter_rows()
                .all(|r| r.iter().all(|&v| v >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() <= NORM_TOLERANCE)
    }

    fn check_non_negative(&self) -> Result<()> {
        for (row, r) in self.values.iter_rows().enumerate() {
            if let Some(col) = r.iter().position(|&v| v < 0.0) {
                return Err(Error::NegativeEntry {
                    row,
                    col,
                    value: r[col],
                });
            }
        }
        Ok(())
    }

    /// Divides each row by its entry sum.
    pub fn l1_normalize(&self) -> Result<Self> {
        if self.norm == NormState::L1 {
            return Ok(self.clone());
        }
        self.check_non_negative()?;
        let mut values = self.values.clone();
        for i in 0..values.rows() {
            let row = values.row_mut(i);
            let s: f64 = row.iter().sum();
            if s <= 0.0 {
                return Err(Error::ZeroRow(i));
            }
            row.iter_mut().for_each(|v| *v /= s);
        }
        Ok(Self {
            values,
            norm: NormState::L1,
        })
    }

    /// Divides each row by its Euclidean norm.
    pub fn l2_normalize(&self) -> Result<Self> {
        if self.norm == NormState::L2 {
            return Ok(self.clone());
        }
        let mut values = self.values.clone();
        for i in 0..values.rows() {
            let row = values.row_mut(i);
            let n = crate::matrix::dot(row, row).sqrt();
            if n == 0.0 {
                return Err(Error::ZeroRow(i));
            }
            row.iter_mut().for_each(|v| *v /= n);
        }
        Ok(Self {
            values,
            norm: NormState::L2,
        })
    }

    /// Returns a matrix with `other`'s rows appended. The normalization state
    /// survives only if both sides agree.
    pub fn concat(&self, other: &FeatureMatrix) -> Result<Self> {
        crate::matrix::check_dim(self.dims(), other.dims())?;
        let mut data = self.values.as_slice().to_vec();
        data.extend_from_slice(other.values.as_slice());
        let norm = if self.norm == other.norm {
            self.norm
        } else {
            NormState::Raw
        };
        Ok(Self {
            values: Matrix::new(self.rows() + other.rows(), self.dims(), data)?,
            norm,
        })
    }
}

/// One class identifier per feature row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels(Vec<u32>);

impl Labels {
    pub fn new(labels: Vec<u32>) -> Self {
        Self(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn check_matches(&self, features: &FeatureMatrix) -> Result<()> {
        if self.len() != features.rows() {
            return Err(Error::LabelCountMismatch {
                labels: self.len(),
                rows: features.rows(),
            });
        }
        Ok(())
    }

    /// Sorted distinct class identifiers.
    pub fn classes(&self) -> Vec<u32> {
        let mut c = self.0.clone();
        c.sort_unstable();
        c.dedup();
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn l1_examples() {
        assert_eq!(fm(&[&[2.0, 2.0]]).l1_normalize().unwrap().row(0), &[0.5, 0.5]);
        assert_eq!(fm(&[&[1.0, 0.0, 0.0]]).l1_normalize().unwrap().row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(fm(&[&[1.0, 3.0]]).l1_normalize().unwrap().row(0), &[0.25, 0.75]);
    }

    #[test]
    fn l1_errors() {
        assert!(matches!(
            fm(&[&[1.0, -1.0]]).l1_normalize(),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            fm(&[&[1.0, 1.0], &[0.0, 0.0]]).l1_normalize(),
            Err(Error::ZeroRow(1))
        ));
    }

    #[test]
    fn l2_examples() {
        let n = fm(&[&[3.0, 4.0]]).l2_normalize().unwrap();
        assert!((n.row(0)[0] - 0.6).abs() < 1e-15);
        assert!((n.row(0)[1] - 0.8).abs() < 1e-15);
        assert_eq!(fm(&[&[1.0, 0.0]]).l2_normalize().unwrap().row(0), &[1.0, 0.0]);
        assert!(matches!(fm(&[&[0.0, 0.0]]).l2_normalize(), Err(Error::ZeroRow(0))));
    }

    #[test]
    fn construction_rejects_bad_values() {
        assert!(FeatureMatrix::new(Matrix::zeros(0, 3)).is_err());
        assert!(matches!(
            FeatureMatrix::from_rows(&[[1.0, f64::INFINITY]]),
            Err(Error::NonFiniteEntry { row: 0, col: 1 })
        ));
        let m = Matrix::from_rows(&[[0.5, 0.6]]).unwrap();
        assert!(FeatureMatrix::with_norm(m, NormState::L1).is_err());
    }

    #[test]
    fn histogram_detection_ignores_declared_state() {
        let raw = fm(&[&[0.25, 0.75]]);
        assert_eq!(raw.norm_state(), NormState::Raw);
        assert!(raw.is_l1_histogram());
        assert!(!fm(&[&[0.5, 0.6]]).is_l1_histogram());
    }

    #[test]
    fn concat_appends_rows() {
        let a = fm(&[&[1.0, 2.0]]);
        let b = fm(&[&[3.0, 4.0], &[5.0, 6.0]]);
        let c = a.concat(&b).unwrap();
        assert_eq!(c.rows(), 3);
        assert_eq!(c.row(2), &[5.0, 6.0]);
        assert!(a.concat(&fm(&[&[1.0]])).is_err());
    }
}
