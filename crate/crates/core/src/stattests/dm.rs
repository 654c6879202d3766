use super::{two_sided_normal_p, Degeneracy};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmResult<F = f64> {
    pub statistic: F,
    /// Two-sided normal p-value.
    pub p_value: F,
    pub degeneracy: Option<Degeneracy>,
    pub n: usize,
}

/// Bartlett-kernel long-run variance of `d` with `lags` autocovariances.
fn long_run_variance<F: Scalar>(d: &[F], mean: F, lags: usize) -> F {
    let n = d.len();
    let nf = F::from_usize_lossy(n);
    let gamma = |j: usize| -> F {
        let mut s = F::zero();
        for t in j..n {
            s = s + (d[t] - mean) * (d[t - j] - mean);
        }
        s / nf
    };
    let mut lrv = gamma(0);
    for j in 1..=lags.min(n - 1) {
        let w = F::one() - F::from_usize_lossy(j) / F::from_usize_lossy(lags + 1);
        lrv = lrv + F::lit(2.0) * w * gamma(j);
    }
    lrv
}

/// DM test on `d_t = loss_a,t - loss_b,t`.
pub fn dm_test<F: Scalar>(loss_a: &[F], loss_b: &[F], hac_lags: usize) -> Result<DmResult<F>> {
    if loss_a.len() != loss_b.len() {
        return Err(Error::Argument(format!(
            "loss series lengths differ: {} vs {}",
            loss_a.len(),
            loss_b.len()
        )));
    }
    let n = loss_a.len();
    if n < 10 {
        return Err(Error::Argument(format!("DM test needs n >= 10, got {n}")));
    }
    let d: Vec<F> = loss_a.iter().zip(loss_b).map(|(&a, &b)| a - b).collect();
    let mean = d.iter().copied().sum::<F>() / F::from_usize_lossy(n);
    if d.iter().all(|x| x.is_zero()) {
        return Ok(DmResult {
            statistic: F::zero(),
            p_value: F::one(),
            degeneracy: Some(Degeneracy::ZeroDifference),
            n,
        });
    }
    let var_mean = long_run_variance(&d, mean, hac_lags) / F::from_usize_lossy(n);
    // rounding noise around a constant difference counts as zero variance
    if !(var_mean.sqrt() > F::lit(1e-12) * mean.abs()) || var_mean.is_zero() {
        let statistic = if mean > F::zero() {
            F::infinity()
        } else if mean < F::zero() {
            F::neg_infinity()
        } else {
            F::zero()
        };
        let degenerate = !mean.is_zero();
        return Ok(DmResult {
            statistic,
            p_value: if degenerate { F::zero() } else { F::one() },
            degeneracy: Some(if degenerate {
                Degeneracy::ZeroVariance
            } else {
                Degeneracy::ZeroDifference
            }),
            n,
        });
    }
    let statistic = mean / var_mean.sqrt();
    Ok(DmResult {
        statistic,
        p_value: F::lit(two_sided_normal_p(statistic.as_f64())),
        degeneracy: None,
        n,
    })
}
