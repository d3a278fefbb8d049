//! Small dense matrix type and a column-pivoted Householder QR used for
//! weighted least squares and rank checks.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("singular system: design matrix is rank deficient (condition estimate {condition:e} exceeds {limit:e})")]
    Singular { condition: f64, limit: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != nrows * ncols {
            return Err(LinalgError::Dimension(format!(
                "{} values for a {nrows}x{ncols} matrix",
                data.len()
            )));
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(LinalgError::Dimension(format!(
                    "row {i} has {} columns, expected {ncols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            nrows: rows.len(),
            ncols,
            data,
        })
    }

    /// Builds an `nrows × columns.len()` matrix from column vectors.
    pub fn from_columns(nrows: usize, columns: &[Vec<T>]) -> Result<Self, LinalgError> {
        let ncols = columns.len();
        let mut m = Self::zeros(nrows, ncols);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != nrows {
                return Err(LinalgError::Dimension(format!(
                    "column {j} has {} rows, expected {nrows}",
                    c.len()
                )));
            }
            for (i, v) in c.iter().enumerate() {
                m.data[i * ncols + j] = *v;
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        // chunks_exact panics on a zero chunk size
        (0..self.nrows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.ncols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            nrows: idx.len(),
            ncols: self.ncols,
            data,
        }
    }

    /// Linear predictor `coef[0] + Σ_j coef[j+1]·x_ij` for every row.
    pub fn affine(&self, coef: &[T]) -> Vec<T> {
        debug_assert_eq!(coef.len(), self.ncols + 1);
        self.rows()
            .map(|r| r.iter().zip(&coef[1..]).fold(coef[0], |acc, (x, b)| acc + *x * *b))
            .collect()
    }
}

/// Column-pivoted Householder QR of a tall matrix, stored column-major.
struct PivotedQr<T> {
    /// Columns of the factored matrix; R sits in the upper triangle,
    /// Householder vectors below it.
    cols: Vec<Vec<T>>,
    tau: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> PivotedQr<T> {
    fn factor(mut cols: Vec<Vec<T>>) -> Self {
        let p = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        let mut perm: Vec<usize> = (0..p).collect();
        let mut tau = vec![T::zero(); p];
        let mut norms: Vec<T> = cols.iter().map(|c| c.iter().map(|v| *v * *v).sum::<T>()).collect();

        for k in 0..p.min(n) {
            let (best, _) = norms[k..]
                .iter()
                .enumerate()
                .fold(
                    (k, T::neg_infinity()),
                    |(bi, bv), (i, v)| {
                        if *v > bv {
                            (k + i, *v)
                        } else {
                            (bi, bv)
                        }
                    },
                );
            cols.swap(k, best);
            norms.swap(k, best);
            perm.swap(k, best);

            let alpha = cols[k][k..].iter().map(|v| *v * *v).sum::<T>().sqrt();
            if alpha == T::zero() {
                continue;
            }
            let beta = if cols[k][k] > T::zero() { -alpha } else { alpha };
            let v0 = cols[k][k] - beta;
            for v in cols[k][k + 1..].iter_mut() {
                *v /= v0;
            }
            tau[k] = (beta - cols[k][k]) / beta;
            cols[k][k] = beta;

            let (head, tail) = cols.split_at_mut(k + 1);
            let hv = &head[k];
            for c in tail.iter_mut() {
                let mut s = c[k];
                for i in k + 1..n {
                    s += hv[i] * c[i];
                }
                s *= tau[k];
                c[k] -= s;
                for i in k + 1..n {
                    c[i] -= s * hv[i];
                }
            }
            // recompute remaining norms from scratch; cheap for the small p used here
            for j in k + 1..p {
                norms[j] = cols[j][k + 1..].iter().map(|v| *v * *v).sum::<T>();
            }
        }
        Self { cols, tau, perm }
    }

    fn condition(&self) -> T {
        let p = self.cols.len();
        if p == 0 {
            return T::one();
        }
        let first = self.cols[0][0].abs();
        let last = self.cols[p - 1][p - 1].abs();
        if last == T::zero() {
            T::infinity()
        } else {
            first / last
        }
    }

    fn apply_qt(&self, b: &mut [T]) {
        let n = b.len();
        for k in 0..self.cols.len() {
            if self.tau[k] == T::zero() {
                continue;
            }
            let hv = &self.cols[k];
            let mut s = b[k];
            for i in k + 1..n {
                s += hv[i] * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in k + 1..n {
                b[i] -= s * hv[i];
            }
        }
    }

    fn solve(&self, mut b: Vec<T>) -> Vec<T> {
        let p = self.cols.len();
        self.apply_qt(&mut b);
        let mut z = vec![T::zero(); p];
        for k in (0..p).rev() {
            let mut s = b[k];
            for j in k + 1..p {
                s -= self.cols[j][k] * z[j];
            }
            z[k] = s / self.cols[k][k];
        }
        let mut out = vec![T::zero(); p];
        for (k, &orig) in self.perm.iter().enumerate() {
            out[orig] = z[k];
        }
        out
    }
}

fn weighted_columns<T: Scalar>(x: &Matrix<T>, sqrt_w: &[T]) -> Vec<Vec<T>> {
    let n = x.nrows();
    let mut cols = Vec::with_capacity(x.ncols() + 1);
    cols.push(sqrt_w.to_vec());
    for j in 0..x.ncols() {
        let mut c = Vec::with_capacity(n);
        for i in 0..n {
            c.push(x.get(i, j) * sqrt_w[i]);
        }
        cols.push(c);
    }
    cols
}

/// Minimises `Σ wᵢ (zᵢ − b₀ − xᵢᵀb)²` over the intercept-augmented design.
///
/// Returns the coefficient vector with the intercept first. Fails with
/// [`LinalgError::Singular`] when the pivoted-QR condition estimate of the
/// weighted design exceeds `cond_limit`.
pub fn weighted_least_squares<T: Scalar>(
    x: &Matrix<T>,
    z: &[T],
    w: &[T],
    cond_limit: T,
) -> Result<Vec<T>, LinalgError> {
    let n = x.nrows();
    if z.len() != n || w.len() != n {
        return Err(LinalgError::Dimension(format!(
            "design has {n} rows, response {} and weights {}",
            z.len(),
            w.len()
        )));
    }
    if n < x.ncols() + 1 {
        return Err(LinalgError::Singular {
            condition: f64::INFINITY,
            limit: cond_limit.to_f64_lossy(),
        });
    }
    let sqrt_w: Vec<T> = w.iter().map(|v| v.sqrt()).collect();
    let qr = PivotedQr::factor(weighted_columns(x, &sqrt_w));
    let condition = qr.condition();
    if !(condition <= cond_limit) {
        return Err(LinalgError::Singular {
            condition: condition.to_f64_lossy(),
            limit: cond_limit.to_f64_lossy(),
        });
    }
    let b: Vec<T> = z.iter().zip(&sqrt_w).map(|(zi, s)| *zi * *s).collect();
    Ok(qr.solve(b))
}

/// Condition estimate of the weighted, intercept-augmented design.
pub fn design_condition<T: Scalar>(x: &Matrix<T>, w: &[T]) -> T {
    let sqrt_w: Vec<T> = w.iter().map(|v| v.sqrt()).collect();
    PivotedQr::factor(weighted_columns(x, &sqrt_w)).condition()
}
