use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the fitting and sampling code is generic over.
///
/// Implemented for `f32` and `f64`. Solver defaults that depend on the
/// precision of the type (convergence tolerance, condition-number limit)
/// live here so generic code never hard-codes `f64` thresholds.
pub trait Scalar: Float + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Send + Sync + 'static {
    /// Converts an `f64` literal. Finite literals always convert for the
    /// implemented types.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to float")
    }

    /// Default score-norm / relative-loglik tolerance for Newton iterations.
    fn default_tol() -> Self;

    /// Largest accepted ratio |R₁₁| / |Rₖₖ| of a pivoted QR factor.
    fn cond_limit() -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn default_tol() -> Self {
        1e-10
    }

    fn cond_limit() -> Self {
        1e10
    }
}

impl Scalar for f32 {
    fn default_tol() -> Self {
        1e-3
    }

    fn cond_limit() -> Self {
        1e5
    }
}
