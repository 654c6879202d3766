use super::{Regressor, TrainingSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Linear model `intercept + coef . x` fitted by ridge regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel<F = f64> {
    pub columns: Vec<String>,
    pub coef: Vec<F>,
    pub intercept: F,
    pub lambda: F,
}

impl<F: Scalar> RidgeModel<F> {
    /// Fits on raw arrays; columns centered, `lambda` added to the diagonal of
    /// the centered normal equations, intercept unpenalized.
    pub fn fit_arrays(columns: Vec<String>, x: &[Vec<F>], y: &[F], lambda: F) -> Result<Self> {
        let n = y.len();
        if n < 2 || x.len() != n {
            return Err(Error::Argument(format!("ridge needs >= 2 aligned rows, got {n}")));
        }
        if lambda < F::zero() {
            return Err(Error::Argument("ridge lambda must be >= 0".into()));
        }
        let p = columns.len();
        let nf = F::from_usize_lossy(n);
        let mut xm = vec![F::zero(); p];
        for row in x {
            for (m, &v) in xm.iter_mut().zip(row) {
                *m = *m + v;
            }
        }
        xm.iter_mut().for_each(|m| *m = *m / nf);
        let ym = y.iter().copied().sum::<F>() / nf;

        let mut gram = vec![vec![F::zero(); p]; p];
        let mut rhs = vec![F::zero(); p];
        for (row, &yi) in x.iter().zip(y) {
            let xc: Vec<F> = row.iter().zip(&xm).map(|(&v, &m)| v - m).collect();
            let yc = yi - ym;
            for i in 0..p {
                rhs[i] = rhs[i] + xc[i] * yc;
                for j in i..p {
                    gram[i][j] = gram[i][j] + xc[i] * xc[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                gram[i][j] = gram[j][i];
            }
            gram[i][i] = gram[i][i] + lambda;
        }
        let coef = solve(gram, rhs).ok_or_else(|| {
            Error::Numerical(format!(
                "ridge normal equations are singular at lambda = {lambda}; use lambda > 0"
            ))
        })?;
        let intercept = ym - coef.iter().zip(&xm).map(|(&b, &m)| b * m).sum::<F>();
        Ok(Self {
            columns,
            coef,
            intercept,
            lambda,
        })
    }

    pub fn predict_values(&self, x: &[F]) -> F {
        self.intercept + self.coef.iter().zip(x).map(|(&b, &v)| b * v).sum::<F>()
    }
}

pub fn fit_ridge(train: &TrainingSet, lambda: f64) -> Result<RidgeModel<f64>> {
    RidgeModel::fit_arrays(train.columns.clone(), &train.x, &train.y, lambda)
}

impl Regressor for RidgeModel<f64> {
    fn columns(&self) -> &[String] {
        &self.columns
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict_values(x)
    }
}

/// Gaussian elimination with partial pivoting; `None` when numerically singular.
fn solve<F: Scalar>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = b.len();
    let scale = a
        .iter()
        .enumerate()
        .map(|(i, r)| r[i].abs())
        .fold(F::zero(), F::max);
    let tol = F::epsilon() * F::from_usize_lossy(n.max(1)) * scale.max(F::min_positive_value());
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(a[piv][col].abs() > tol) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == F::zero() {
                continue;
            }
            for c in col..n {
                a[r][c] = a[r][c] - f * a[col][c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let s: F = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}
