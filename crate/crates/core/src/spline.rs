use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("spline knots must be finite and strictly increasing, got {0:?}")]
    Knots(Vec<f64>),
}

/// Interior knots of a continuous piecewise-linear spline.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpec<T> {
    knots: Vec<T>,
}

impl<T: Scalar> SplineSpec<T> {
    pub fn new(knots: Vec<T>) -> Result<Self, SplineError> {
        let ok = knots.iter().all(|k| k.is_finite()) && knots.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(SplineError::Knots(knots.iter().map(|k| k.to_f64_lossy()).collect()));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }
}

/// Truncated-power basis `[x, (x − k₁)₊, (x − k₂)₊, …]`, one row per value.
pub fn spline_basis<T: Scalar>(x: &[T], spec: &SplineSpec<T>) -> Matrix<T> {
    let ncols = spec.knots.len() + 1;
    let mut data = Vec::with_capacity(x.len() * ncols);
    for &v in x {
        data.push(v);
        data.extend(spec.knots.iter().map(|k| (v - *k).max(T::zero())));
    }
    Matrix::from_row_major(x.len(), ncols, data).expect("shape computed above")
}
