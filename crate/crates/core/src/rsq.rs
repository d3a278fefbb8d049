//! Cox–Snell and Nagelkerke pseudo-R², classical and design-based.
//!
//! The classical statistics divide the loglikelihood ratio by the row count
//! `n`. The design-based statistics divide by the estimated population size
//! `N̂ = Σ wᵢ`, both in the Cox–Snell exponent and in the Nagelkerke
//! rescaling `1 − exp(2 ℓ̂(0) / N̂)`. Using `N̂` in both places keeps the
//! design statistics invariant to rescaling the weights and makes them
//! coincide with the classical ones when every weight is 1.

use serde::Serialize;
use thiserror::Error;

use crate::formula::Formula;
use crate::glm::{fit_logistic, Family, FitResult, SolverOptions};
use crate::sampling::{Population, SamplingError};
use crate::scalar::Scalar;
use crate::Error as CrateError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RsqError {
    #[error("fit did not converge after {iterations} iterations; pseudo-R2 refused")]
    Unconverged { iterations: usize },
    #[error("Nagelkerke rescaling needs a bounded per-observation likelihood; not available for the {0} family")]
    FamilyNotSupported(Family),
    #[error("divisor must be positive, got {0}")]
    BadDivisor(f64),
}

fn check_converged<T: Scalar>(fit: &FitResult<T>) -> Result<(), RsqError> {
    if fit.converged {
        Ok(())
    } else {
        Err(RsqError::Unconverged {
            iterations: fit.iterations,
        })
    }
}

/// `1 − exp(−2·LR / divisor)`, with LR clamped at zero.
fn cox_snell_with<T: Scalar>(fit: &FitResult<T>, divisor: T) -> Result<T, RsqError> {
    check_converged(fit)?;
    if !(divisor > T::zero()) {
        return Err(RsqError::BadDivisor(divisor.to_f64_lossy()));
    }
    let ratio = fit.loglik_ratio().max(T::zero());
    let two = T::lit(2.0);
    Ok(-(-two * ratio / divisor).exp_m1())
}

fn nagelkerke_with<T: Scalar>(fit: &FitResult<T>, divisor: T) -> Result<T, RsqError> {
    if fit.family != Family::Logistic {
        return Err(RsqError::FamilyNotSupported(fit.family));
    }
    let cs = cox_snell_with(fit, divisor)?;
    let max_cs = -(T::lit(2.0) * fit.null_loglik / divisor).exp_m1();
    Ok(cs / max_cs)
}

/// Classical Cox–Snell R², `1 − (L(0)/L(β̂))^{2/n}`.
pub fn cox_snell<T: Scalar>(fit: &FitResult<T>) -> Result<T, RsqError> {
    cox_snell_with(fit, T::from_usize_lossy(fit.n))
}

/// Classical Nagelkerke R², Cox–Snell over its maximum `1 − L(0)^{2/n}`.
pub fn nagelkerke<T: Scalar>(fit: &FitResult<T>) -> Result<T, RsqError> {
    nagelkerke_with(fit, T::from_usize_lossy(fit.n))
}

/// Design-based Cox–Snell R̂², `log(1 − R̂²) = 2(ℓ̂(0) − ℓ̂(β̂)) / N̂`.
pub fn design_cox_snell<T: Scalar>(fit: &FitResult<T>) -> Result<T, RsqError> {
    cox_snell_with(fit, fit.weight_sum)
}

/// Design-based Nagelkerke R̂²; the rescaling divisor uses `N̂`.
pub fn design_nagelkerke<T: Scalar>(fit: &FitResult<T>) -> Result<T, RsqError> {
    nagelkerke_with(fit, fit.weight_sum)
}

/// All four statistics for one fit. Nagelkerke entries are `None` for the
/// Gaussian family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RsqSummary<T> {
    pub cox_snell: T,
    pub nagelkerke: Option<T>,
    pub design_cox_snell: T,
    pub design_nagelkerke: Option<T>,
    pub loglik_ratio: T,
    pub n: usize,
    pub weight_sum: T,
}

impl<T: Scalar> RsqSummary<T> {
    pub fn from_fit(fit: &FitResult<T>) -> Result<Self, RsqError> {
        let (nagelkerke, design_nagelkerke) = match fit.family {
            Family::Logistic => (Some(nagelkerke(fit)?), Some(design_nagelkerke(fit)?)),
            Family::GaussianMle => (None, None),
        };
        Ok(Self {
            cox_snell: cox_snell(fit)?,
            nagelkerke,
            design_cox_snell: design_cox_snell(fit)?,
            design_nagelkerke,
            loglik_ratio: fit.loglik_ratio().max(T::zero()),
            n: fit.n,
            weight_sum: fit.weight_sum,
        })
    }
}

/// Census parameter: the logistic model fitted to the whole population
/// with unit weights. Sampling experiments use it as ground truth.
pub fn census_rsq<T: Scalar>(pop: &Population<T>, formula: &Formula) -> Result<RsqSummary<T>, CrateError> {
    if pop.is_degenerate() {
        return Err(SamplingError::Degenerate {
            cases: pop.case_count(),
            size: pop.size(),
        }
        .into());
    }
    let data = pop.dataset(formula)?;
    let fit = fit_logistic(&data, &SolverOptions::default())?;
    Ok(RsqSummary::from_fit(&fit)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(loglik: f64, null_loglik: f64, n: usize, weight_sum: f64) -> FitResult<f64> {
        FitResult {
            family: Family::Logistic,
            coef: vec![0.0, 0.0],
            loglik,
            null_loglik,
            n,
            weight_sum,
            converged: true,
            iterations: 3,
            max_score_norm: 0.0,
            scale: None,
        }
    }

    #[test]
    fn null_model_gives_zero() {
        let f = fake(-10.0, -10.0, 20, 20.0);
        assert_eq!(cox_snell(&f).unwrap(), 0.0);
        assert_eq!(nagelkerke(&f).unwrap(), 0.0);
        assert_eq!(design_cox_snell(&f).unwrap(), 0.0);
    }

    #[test]
    fn direct_formula_value() {
        let f = fake(-1.0, -2.0, 4, 4.0);
        let want = 1.0 - (-0.5f64).exp();
        assert!((cox_snell(&f).unwrap() - 0.393_469_340_287_366_6).abs() < 1e-15);
        assert!((cox_snell(&f).unwrap() - want).abs() < 1e-15);
        let nag_want = want / (1.0 - (2.0 * -2.0 / 4.0f64).exp());
        assert!((nagelkerke(&f).unwrap() - nag_want).abs() < 1e-15);
    }

    #[test]
    fn design_uses_weight_sum() {
        let f = fake(-100.0, -102.0, 10, 400.0);
        let want = 1.0 - (-4.0f64 / 400.0).exp();
        assert!((design_cox_snell(&f).unwrap() - want).abs() < 1e-15);
        let dn = design_nagelkerke(&f).unwrap();
        assert!((dn - want / (1.0 - (-204.0f64 / 400.0).exp())).abs() < 1e-15);
    }

    #[test]
    fn tiny_negative_ratio_clamped() {
        let f = fake(-10.0 - 1e-10, -10.0, 20, 20.0);
        assert_eq!(cox_snell(&f).unwrap(), 0.0);
    }

    #[test]
    fn unconverged_refused() {
        let mut f = fake(-1.0, -2.0, 4, 4.0);
        f.converged = false;
        assert!(matches!(cox_snell(&f), Err(RsqError::Unconverged { .. })));
        assert!(design_nagelkerke(&f).is_err());
    }

    #[test]
    fn gaussian_has_no_nagelkerke() {
        let mut f = fake(-1.0, -2.0, 4, 4.0);
        f.family = Family::GaussianMle;
        assert_eq!(
            nagelkerke(&f).unwrap_err(),
            RsqError::FamilyNotSupported(Family::GaussianMle)
        );
        let s = RsqSummary::from_fit(&f).unwrap();
        assert!(s.nagelkerke.is_none());
    }
}
