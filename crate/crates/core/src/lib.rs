//! Survey-weighted logistic and Gaussian regression with classical and
//! design-based Cox–Snell and Nagelkerke pseudo-R².
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the usual `f64` instantiation.
//!
//! ```
//! use svyrsq::{fit_logistic, Dataset64, Matrix, RsqSummary, SolverOptions};
//!
//! let x = Matrix::from_columns(6, &[vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]]).unwrap();
//! let y = vec![0.0, 0.0, 1.0, 1.0, 1.0, 0.0];
//! let w = vec![10.0, 10.0, 1.0, 1.0, 1.0, 10.0];
//! let data = Dataset64::new(y, x, Some(w)).unwrap();
//! let fit = fit_logistic(&data, &SolverOptions::default()).unwrap();
//! let r2 = RsqSummary::from_fit(&fit).unwrap();
//! assert!(r2.design_cox_snell < r2.cox_snell);
//! ```

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod data;
pub mod esoph;
pub mod formula;
pub mod frame;
pub mod glm;
pub mod harness;
pub mod linalg;
pub mod report;
pub mod rng;
pub mod rsq;
pub mod sampling;
pub mod scalar;
pub mod spline;

use thiserror::Error;

pub use data::{DataError, Dataset};
pub use formula::{Formula, FormulaError};
pub use frame::{Column, Frame, FrameError};
pub use glm::{
    fit, fit_gaussian_mle, fit_logistic, fit_null, logistic_loglik, logistic_score, Family, FitResult, GlmError,
    SolverOptions,
};
pub use harness::HarnessError;
pub use linalg::Matrix;
pub use rsq::{census_rsq, cox_snell, design_cox_snell, design_nagelkerke, nagelkerke, RsqError, RsqSummary};
pub use sampling::{DesignKind, DesignSample, Population, SamplingError};
pub use scalar::Scalar;
pub use spline::{spline_basis, SplineSpec};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type FitResult64 = FitResult<f64>;
pub type FitResult32 = FitResult<f32>;
pub type RsqSummary64 = RsqSummary<f64>;
pub type Population64 = Population<f64>;
pub type Frame64 = Frame<f64>;
pub type Matrix64 = Matrix<f64>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Rsq(#[from] RsqError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl Error {
    /// True for failures of the fit itself (separation, singular design,
    /// degenerate response, non-convergence) as opposed to bad input.
    pub fn is_fit_failure(&self) -> bool {
        matches!(self, Error::Glm(e) if !matches!(e, GlmError::Data(_) | GlmError::Dimension { .. } | GlmError::Shape(_)))
            || matches!(self, Error::Rsq(RsqError::Unconverged { .. }))
    }
}
