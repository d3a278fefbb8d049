use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("dataset has no rows")]
    Empty,
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    Length {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("weight at row {row} is {value}; weights must be positive and finite")]
    BadWeight { row: usize, value: f64 },
    #[error("non-finite value in {what} at row {row}")]
    NonFinite { what: &'static str, row: usize },
    #[error("response at row {row} is {value}; logistic models need y in {{0, 1}}")]
    NonBinary { row: usize, value: f64 },
}

/// Response, predictors and sampling weights for one fit.
///
/// `x` holds predictors only. The intercept column is implicit and added by
/// the fitters, so `x` has `p` columns for a model with `p + 1` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    y: Vec<T>,
    x: Matrix<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    /// Validates and builds a dataset; `weights = None` means unit weights.
    pub fn new(y: Vec<T>, x: Matrix<T>, weights: Option<Vec<T>>) -> Result<Self, DataError> {
        let n = y.len();
        if n == 0 {
            return Err(DataError::Empty);
        }
        if x.nrows() != n {
            return Err(DataError::Length {
                what: "design matrix",
                got: x.nrows(),
                expected: n,
            });
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(DataError::Length {
                        what: "weights",
                        got: w.len(),
                        expected: n,
                    });
                }
                w
            }
            None => vec![T::one(); n],
        };
        for (row, w) in weights.iter().enumerate() {
            if !(w.is_finite() && *w > T::zero()) {
                return Err(DataError::BadWeight {
                    row,
                    value: w.to_f64_lossy(),
                });
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { what: "response", row });
        }
        if let Some(row) = x.rows().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(DataError::NonFinite {
                what: "design matrix",
                row,
            });
        }
        Ok(Self { y, x, weights })
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of predictors, excluding the intercept.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn weight_sum(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Same rows with unit weights; the "ignore the design" refit.
    pub fn unweighted(&self) -> Self {
        Self {
            y: self.y.clone(),
            x: self.x.clone(),
            weights: vec![T::one(); self.n()],
        }
    }

    pub fn with_weights(&self, weights: Vec<T>) -> Result<Self, DataError> {
        Self::new(self.y.clone(), self.x.clone(), Some(weights))
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|w| *w == T::one())
    }

    pub(crate) fn check_binary(&self) -> Result<(), DataError> {
        match self.y.iter().position(|v| *v != T::zero() && *v != T::one()) {
            Some(row) => Err(DataError::NonBinary {
                row,
                value: self.y[row].to_f64_lossy(),
            }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x1(v: &[f64]) -> Matrix<f64> {
        Matrix::from_columns(v.len(), &[v.to_vec()]).unwrap()
    }

    #[test]
    fn default_weights_are_unit() {
        let d = Dataset::new(vec![0.0, 1.0], x1(&[1.0, 2.0]), None).unwrap();
        assert!(d.has_unit_weights());
        assert_eq!(d.weight_sum(), 2.0);
        assert_eq!(d.p(), 1);
    }

    #[test]
    fn rejects_non_positive_weight() {
        let err = Dataset::new(vec![0.0, 1.0], x1(&[1.0, 2.0]), Some(vec![1.0, 0.0])).unwrap_err();
        assert_eq!(err, DataError::BadWeight { row: 1, value: 0.0 });
        let err = Dataset::new(vec![0.0, 1.0], x1(&[1.0, 2.0]), Some(vec![f64::NAN, 1.0]));
        assert!(err.is_err());
    }

    #[test]
    fn rejects_non_finite_design() {
        let err = Dataset::new(vec![0.0, 1.0], x1(&[1.0, f64::INFINITY]), None).unwrap_err();
        assert!(matches!(err, DataError::NonFinite { row: 1, .. }));
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert_eq!(
            Dataset::<f64>::new(vec![], Matrix::zeros(0, 0), None).unwrap_err(),
            DataError::Empty
        );
        assert!(Dataset::new(vec![0.0], x1(&[1.0, 2.0]), None).is_err());
    }

    #[test]
    fn binary_check() {
        let d = Dataset::new(vec![0.0, 0.5], x1(&[1.0, 2.0]), None).unwrap();
        assert!(matches!(d.check_binary(), Err(DataError::NonBinary { row: 1, .. })));
    }
}
