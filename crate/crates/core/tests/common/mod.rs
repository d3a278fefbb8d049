//! Test helpers: random instance generators and independent oracles that
//! do not go through the crate's solver.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svyrsq::{Dataset, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller; keeps the helpers free of distribution crates.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Columns of standard normal predictors, `n × p`.
pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Matrix<f64> {
    let data = (0..n * p).map(|_| normal(rng)).collect();
    Matrix::from_row_major(n, p, data).unwrap()
}

/// Logistic data with both outcome classes present.
pub fn logistic_instance(rng: &mut ChaCha8Rng, n: usize, p: usize, weights: Option<(f64, f64)>) -> Dataset<f64> {
    loop {
        let x = normal_matrix(rng, n, p);
        let coef: Vec<f64> = (0..=p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eta = x.affine(&coef);
        let y: Vec<f64> = eta
            .iter()
            .map(|e| f64::from(rng.random::<f64>() < 1.0 / (1.0 + (-e).exp())))
            .collect();
        let cases = y.iter().sum::<f64>();
        if cases < 2.0 || cases > n as f64 - 2.0 {
            continue;
        }
        let w = weights.map(|(lo, hi)| (0..n).map(|_| rng.random_range(lo..hi)).collect());
        return Dataset::new(y, x, w).unwrap();
    }
}

pub fn gaussian_instance(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset<f64> {
    let x = normal_matrix(rng, n, p);
    let coef: Vec<f64> = (0..=p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = x.affine(&coef).iter().map(|m| m + normal(rng)).collect();
    Dataset::new(y, x, None).unwrap()
}

/// Weighted Bernoulli loglikelihood summed term by term.
pub fn oracle_loglik(y: &[f64], x: &[f64], w: &[f64], a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..y.len() {
        let eta = a + b * x[i];
        // log(1 + e^η) without overflow
        let softplus = if eta > 0.0 {
            eta + (-eta).exp().ln_1p()
        } else {
            eta.exp().ln_1p()
        };
        total += w[i] * (y[i] * eta - softplus);
    }
    total
}

/// Maximiser of the one-predictor logistic loglikelihood by exhaustive
/// grid search on `[-20, 20]²` followed by shrinking local grids. `None`
/// when the best coarse point is on the boundary (no interior maximum).
pub fn grid_mle(y: &[f64], x: &[f64], w: &[f64]) -> Option<(f64, f64, f64)> {
    let f = |a: f64, b: f64| oracle_loglik(y, x, w, a, b);
    let (lim, step) = (20.0, 0.05);
    let k = (2.0 * lim / step) as i64;
    let (mut best, mut ba, mut bb) = (f64::NEG_INFINITY, 0.0, 0.0);
    let (mut bi, mut bj) = (0, 0);
    for i in 0..=k {
        for j in 0..=k {
            let (a, b) = (-lim + i as f64 * step, -lim + j as f64 * step);
            let v = f(a, b);
            if v > best {
                (best, ba, bb, bi, bj) = (v, a, b, i, j);
            }
        }
    }
    if bi == 0 || bj == 0 || bi == k || bj == k {
        return None;
    }
    let mut h = step;
    while h > 1e-9 {
        // 1e-3 is reached after a few rounds; keep shrinking for the loglik.
        let (ca, cb) = (ba, bb);
        for i in -10..=10 {
            for j in -10..=10 {
                let (a, b) = (ca + i as f64 * h / 10.0, cb + j as f64 * h / 10.0);
                let v = f(a, b);
                if v > best {
                    (best, ba, bb) = (v, a, b);
                }
            }
        }
        if ba == ca && bb == cb {
            h /= 4.0;
        }
    }
    Some((ba, bb, best))
}

/// Residual and total sums of squares of the least-squares line through
/// `(x, y)` with intercept, via normal equations and Gaussian elimination.
pub fn ols_rss_tss(y: &[f64], x: &Matrix<f64>) -> (f64, f64) {
    let n = y.len();
    let q = x.ncols() + 1;
    let row = |i: usize| -> Vec<f64> { std::iter::once(1.0).chain(x.row(i).iter().copied()).collect() };
    let mut a = vec![vec![0.0; q + 1]; q];
    for i in 0..n {
        let r = row(i);
        for j in 0..q {
            for k in 0..q {
                a[j][k] += r[j] * r[k];
            }
            a[j][q] += r[j] * y[i];
        }
    }
    for c in 0..q {
        let piv = (c..q).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..q {
            if r != c {
                let m = a[r][c] / a[c][c];
                for k in c..=q {
                    a[r][k] -= m * a[c][k];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..q).map(|j| a[j][q] / a[j][j]).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut rss = 0.0;
    let mut tss = 0.0;
    for i in 0..n {
        let fit: f64 = row(i).iter().zip(&beta).map(|(r, b)| r * b).sum();
        rss += (y[i] - fit).powi(2);
        tss += (y[i] - mean).powi(2);
    }
    (rss, tss)
}
