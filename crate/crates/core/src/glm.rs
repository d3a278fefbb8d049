//! Weighted maximum-likelihood fitting for logistic and Gaussian
//! (variance-profiled) regression.
//!
//! All loglikelihoods are weighted pseudo-loglikelihoods
//! `Σ wᵢ log f(yᵢ | xᵢ; θ)`; with unit weights they are ordinary
//! loglikelihoods.

use serde::Serialize;
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::linalg::{design_condition, weighted_least_squares, LinalgError};
use crate::scalar::Scalar;

/// Linear predictors are clipped to this range before evaluating the
/// inverse link, so fitted probabilities are never exactly 0 or 1.
pub const ETA_CLAMP: f64 = 30.0;
/// Every observation classified with |η| beyond this counts as separated.
pub const SEPARATION_ETA: f64 = 25.0;
/// Slope vectors with a Euclidean norm beyond this count as diverging.
pub const SEPARATION_SLOPE_NORM: f64 = 1e4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlmError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("coefficient vector has length {got}, model needs {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("singular system: design matrix is rank deficient (condition estimate {condition:e} exceeds {limit:e})")]
    Singular { condition: f64, limit: f64 },
    #[error("complete separation detected after {iterations} iterations: {detail}")]
    Separation { iterations: usize, detail: String },
    #[error("degenerate response: the null model needs both outcome classes (weighted mean of y is {mean})")]
    DegenerateNull { mean: f64 },
    #[error("degenerate response: y is constant, so the null variance is zero")]
    ConstantResponse,
    #[error("perfect fit: residual variance is zero, so the Gaussian likelihood is unbounded")]
    PerfectFit,
    #[error("{n} rows cannot identify {params} mean parameters plus a variance")]
    TooFewRows { n: usize, params: usize },
}

impl From<LinalgError> for GlmError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { condition, limit } => GlmError::Singular { condition, limit },
            LinalgError::Dimension(msg) => GlmError::Shape(msg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    /// Normal errors with identity link, variance maximised out.
    GaussianMle,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Logistic => f.write_str("logistic"),
            Family::GaussianMle => f.write_str("gaussian_mle"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Bound on both the score ∞-norm and the relative loglik change.
    pub tol: T,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::default_tol(),
            max_iter: 50,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub family: Family,
    /// Intercept first, then one slope per predictor column.
    pub coef: Vec<T>,
    pub loglik: T,
    pub null_loglik: T,
    pub n: usize,
    /// Σ wᵢ, the estimated population size.
    pub weight_sum: T,
    pub converged: bool,
    pub iterations: usize,
    pub max_score_norm: T,
    /// MLE residual variance (Gaussian family only).
    pub scale: Option<T>,
}

impl<T: Scalar> FitResult<T> {
    pub fn loglik_ratio(&self) -> T {
        self.loglik - self.null_loglik
    }
}

/// Inverse logit of a clamped linear predictor.
pub fn inv_logit<T: Scalar>(eta: T) -> T {
    let c = T::lit(ETA_CLAMP);
    let e = eta.max(-c).min(c);
    T::one() / (T::one() + (-e).exp())
}

/// `log(1 + exp(t))` without overflow.
fn softplus<T: Scalar>(t: T) -> T {
    t.max(T::zero()) + (-t.abs()).exp().ln_1p()
}

fn bernoulli_loglik<T: Scalar>(y: &[T], w: &[T], eta: impl Iterator<Item = T>) -> T {
    let c = T::lit(ETA_CLAMP);
    y.iter()
        .zip(w)
        .zip(eta)
        .map(|((yi, wi), e)| {
            let e = e.max(-c).min(c);
            // log μ = −softplus(−η), log(1 − μ) = −softplus(η)
            -*wi * (*yi * softplus(-e) + (T::one() - *yi) * softplus(e))
        })
        .sum()
}

fn check_coef<T: Scalar>(data: &Dataset<T>, coef: &[T]) -> Result<(), GlmError> {
    if coef.len() != data.p() + 1 {
        return Err(GlmError::Dimension {
            expected: data.p() + 1,
            got: coef.len(),
        });
    }
    Ok(())
}

/// Weighted Bernoulli loglikelihood `Σ wᵢ [yᵢ log μᵢ + (1 − yᵢ) log(1 − μᵢ)]`.
pub fn logistic_loglik<T: Scalar>(data: &Dataset<T>, coef: &[T]) -> Result<T, GlmError> {
    check_coef(data, coef)?;
    let eta = data.x().affine(coef);
    Ok(bernoulli_loglik(data.y(), data.weights(), eta.into_iter()))
}

/// Weighted score `Σ wᵢ (yᵢ − μᵢ)(1, xᵢ)`, the gradient of [`logistic_loglik`].
pub fn logistic_score<T: Scalar>(data: &Dataset<T>, coef: &[T]) -> Result<Vec<T>, GlmError> {
    check_coef(data, coef)?;
    Ok(score_at(data, &data.x().affine(coef)))
}

fn score_at<T: Scalar>(data: &Dataset<T>, eta: &[T]) -> Vec<T> {
    let mut g = vec![T::zero(); data.p() + 1];
    for (i, row) in data.x().rows().enumerate() {
        let r = data.weights()[i] * (data.y()[i] - inv_logit(eta[i]));
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(row) {
            *gj += r * *xj;
        }
    }
    g
}

fn inf_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn weighted_mean<T: Scalar>(v: &[T], w: &[T]) -> T {
    let s: T = v.iter().zip(w).map(|(a, b)| *a * *b).sum();
    s / w.iter().copied().sum()
}

/// Intercept-only fit in closed form.
///
/// Logistic: intercept `logit(Σwy / Σw)`. Gaussian: weighted mean with the
/// weighted MLE variance.
pub fn fit_null<T: Scalar>(data: &Dataset<T>, family: Family) -> Result<FitResult<T>, GlmError> {
    let w = data.weights();
    let weight_sum = data.weight_sum();
    let mean = weighted_mean(data.y(), w);
    let (coef, loglik, score, scale) = match family {
        Family::Logistic => {
            data.check_binary()?;
            if !(mean > T::zero() && mean < T::one()) {
                return Err(GlmError::DegenerateNull {
                    mean: mean.to_f64_lossy(),
                });
            }
            let alpha = (mean / (T::one() - mean)).ln();
            let ll = bernoulli_loglik(data.y(), w, std::iter::repeat(alpha));
            let score: T = data
                .y()
                .iter()
                .zip(w)
                .map(|(y, wi)| *wi * (*y - inv_logit(alpha)))
                .sum();
            (alpha, ll, score, None)
        }
        Family::GaussianMle => {
            let resid: Vec<T> = data.y().iter().map(|y| *y - mean).collect();
            let sigma2 = weighted_mean(&resid.iter().map(|r| *r * *r).collect::<Vec<_>>(), w);
            if !(sigma2 > T::zero()) {
                return Err(GlmError::ConstantResponse);
            }
            let ll = gaussian_loglik(&resid, w, sigma2);
            let score: T = resid.iter().zip(w).map(|(r, wi)| *wi * *r).sum::<T>() / sigma2;
            (mean, ll, score, Some(sigma2))
        }
    };
    Ok(FitResult {
        family,
        coef: vec![coef],
        loglik,
        null_loglik: loglik,
        n: data.n(),
        weight_sum,
        converged: true,
        iterations: 0,
        max_score_norm: score.abs(),
        scale,
    })
}

fn gaussian_loglik<T: Scalar>(resid: &[T], w: &[T], sigma2: T) -> T {
    let two_pi = T::lit(std::f64::consts::TAU);
    let half = T::lit(0.5);
    -half
        * resid
            .iter()
            .zip(w)
            .map(|(r, wi)| *wi * ((two_pi * sigma2).ln() + *r * *r / sigma2))
            .sum::<T>()
}

fn check_rank<T: Scalar>(data: &Dataset<T>) -> Result<(), GlmError> {
    let limit = T::cond_limit();
    let condition = design_condition(data.x(), data.weights());
    if !(condition <= limit) || data.n() < data.p() + 1 {
        return Err(GlmError::Singular {
            condition: condition.to_f64_lossy(),
            limit: limit.to_f64_lossy(),
        });
    }
    Ok(())
}

fn separation_detail<T: Scalar>(data: &Dataset<T>, coef: &[T], eta: &[T]) -> Option<String> {
    let slope_norm = coef[1..].iter().map(|b| *b * *b).sum::<T>().sqrt();
    if slope_norm > T::lit(SEPARATION_SLOPE_NORM) {
        return Some(format!(
            "slope norm {:e} exceeds {SEPARATION_SLOPE_NORM:e}",
            slope_norm.to_f64_lossy()
        ));
    }
    let bound = T::lit(SEPARATION_ETA);
    let all_classified = data
        .y()
        .iter()
        .zip(eta)
        .all(|(y, e)| if *y == T::one() { *e > bound } else { *e < -bound });
    all_classified.then(|| format!("every observation is classified with |eta| > {SEPARATION_ETA}"))
}

/// Maximises the weighted Bernoulli loglikelihood by Newton–Raphson in
/// IRLS form, halving steps that would decrease the loglikelihood.
///
/// Running out of iterations is not an error: the result comes back with
/// `converged == false` and callers decide what to do with it.
pub fn fit_logistic<T: Scalar>(data: &Dataset<T>, opts: &SolverOptions<T>) -> Result<FitResult<T>, GlmError> {
    data.check_binary()?;
    let null = fit_null(data, Family::Logistic)?;
    check_rank(data)?;

    let x = data.x();
    let y = data.y();
    let w = data.weights();
    let mut coef = vec![T::zero(); data.p() + 1];
    coef[0] = null.coef[0];
    let mut ll = null.loglik;
    let mut eta = x.affine(&coef);
    let mut converged = false;
    let mut iterations = 0;
    let slack = T::epsilon() * T::lit(16.0);

    for iter in 1..=opts.max_iter {
        iterations = iter;
        let mut working_w = Vec::with_capacity(y.len());
        let mut z = Vec::with_capacity(y.len());
        for i in 0..y.len() {
            let mu = inv_logit(eta[i]);
            let v = mu * (T::one() - mu);
            working_w.push(w[i] * v);
            z.push(eta[i] + (y[i] - mu) / v);
        }
        let target = match weighted_least_squares(x, &z, &working_w, T::cond_limit()) {
            Ok(t) => t,
            Err(LinalgError::Singular { .. }) if eta.iter().any(|e| e.abs() > T::lit(SEPARATION_ETA)) => {
                return Err(GlmError::Separation {
                    iterations: iter,
                    detail: "working weights collapsed at saturated fitted probabilities".into(),
                });
            }
            Err(e) => return Err(e.into()),
        };

        let step: Vec<T> = target.iter().zip(&coef).map(|(t, c)| *t - *c).collect();
        let mut scale = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<T> = coef.iter().zip(&step).map(|(c, s)| *c + scale * *s).collect();
            let cand_eta = x.affine(&cand);
            let cand_ll = bernoulli_loglik(y, w, cand_eta.iter().copied());
            if cand_ll + slack * (ll.abs() + T::one()) >= ll {
                accepted = Some((cand, cand_eta, cand_ll));
                break;
            }
            scale *= T::lit(0.5);
        }
        let Some((cand, cand_eta, cand_ll)) = accepted else {
            // no ascent direction left at working precision
            break;
        };
        let rel_change = (cand_ll - ll).abs() / (cand_ll.abs() + T::lit(0.1));
        coef = cand;
        eta = cand_eta;
        ll = cand_ll;

        if let Some(detail) = separation_detail(data, &coef, &eta) {
            return Err(GlmError::Separation {
                iterations: iter,
                detail,
            });
        }
        let score_norm = inf_norm(&score_at(data, &eta));
        if score_norm < opts.tol && rel_change < opts.tol {
            converged = true;
            break;
        }
    }

    let max_score_norm = inf_norm(&score_at(data, &eta));
    Ok(FitResult {
        family: Family::Logistic,
        coef,
        loglik: ll,
        null_loglik: null.loglik,
        n: data.n(),
        weight_sum: data.weight_sum(),
        converged,
        iterations,
        max_score_norm,
        scale: None,
    })
}

/// Weighted least squares with the variance maximised out,
/// `σ̂² = Σ wᵢ (yᵢ − μ̂ᵢ)² / Σ wᵢ`.
pub fn fit_gaussian_mle<T: Scalar>(data: &Dataset<T>) -> Result<FitResult<T>, GlmError> {
    let params = data.p() + 1;
    if data.n() <= params {
        return Err(GlmError::TooFewRows { n: data.n(), params });
    }
    let null = fit_null(data, Family::GaussianMle)?;
    let w = data.weights();
    let coef = weighted_least_squares(data.x(), data.y(), w, T::cond_limit())?;
    let fitted = data.x().affine(&coef);
    let resid: Vec<T> = data.y().iter().zip(&fitted).map(|(y, f)| *y - *f).collect();
    let sigma2 = weighted_mean(&resid.iter().map(|r| *r * *r).collect::<Vec<_>>(), w);
    let null_sigma2 = null.scale.expect("gaussian null has a scale");
    if !(sigma2 > null_sigma2 * T::epsilon()) {
        return Err(GlmError::PerfectFit);
    }
    let loglik = gaussian_loglik(&resid, w, sigma2);

    let mut score = vec![T::zero(); params];
    for (i, row) in data.x().rows().enumerate() {
        let r = w[i] * resid[i] / sigma2;
        score[0] += r;
        for (s, xj) in score[1..].iter_mut().zip(row) {
            *s += r * *xj;
        }
    }
    Ok(FitResult {
        family: Family::GaussianMle,
        coef,
        loglik,
        null_loglik: null.loglik,
        n: data.n(),
        weight_sum: data.weight_sum(),
        converged: true,
        iterations: 1,
        max_score_norm: inf_norm(&score),
        scale: Some(sigma2),
    })
}

/// Dispatches on the family.
pub fn fit<T: Scalar>(data: &Dataset<T>, family: Family, opts: &SolverOptions<T>) -> Result<FitResult<T>, GlmError> {
    match family {
        Family::Logistic => fit_logistic(data, opts),
        Family::GaussianMle => fit_gaussian_mle(data),
    }
}
