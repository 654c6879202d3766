use super::{norm_cdf, Degeneracy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtResult {
    /// `NaN` when degenerate.
    pub statistic: f64,
    /// One-sided upper-tail p-value; `NaN` when degenerate.
    pub p_value: f64,
    pub hit_rate: f64,
    pub degeneracy: Option<Degeneracy>,
    pub n: usize,
}

/// PT test on values, with "up" meaning strictly positive.
pub fn pt_test(forecast: &[f64], realized: &[f64]) -> Result<PtResult> {
    let f: Vec<bool> = forecast.iter().map(|x| *x > 0.0).collect();
    let r: Vec<bool> = realized.iter().map(|x| *x > 0.0).collect();
    pt_test_signs(&f, &r)
}

pub fn pt_test_signs(forecast_up: &[bool], realized_up: &[bool]) -> Result<PtResult> {
    if forecast_up.len() != realized_up.len() {
        return Err(Error::Argument("sign series lengths differ".into()));
    }
    let n = forecast_up.len();
    if n < 10 {
        return Err(Error::Argument(format!("PT test needs n >= 10, got {n}")));
    }
    let nf = n as f64;
    let hits = forecast_up.iter().zip(realized_up).filter(|(a, b)| a == b).count();
    let p_hat = hits as f64 / nf;
    let px = forecast_up.iter().filter(|x| **x).count() as f64 / nf;
    let py = realized_up.iter().filter(|x| **x).count() as f64 / nf;
    let degenerate = |d| PtResult {
        statistic: f64::NAN,
        p_value: f64::NAN,
        hit_rate: p_hat,
        degeneracy: Some(d),
        n,
    };
    if px == 0.0 || px == 1.0 || py == 0.0 || py == 1.0 {
        return Ok(degenerate(Degeneracy::OneClass));
    }
    let p_star = py * px + (1.0 - py) * (1.0 - px);
    let v_hat = p_star * (1.0 - p_star) / nf;
    let v_star = (2.0 * py - 1.0).powi(2) * px * (1.0 - px) / nf
        + (2.0 * px - 1.0).powi(2) * py * (1.0 - py) / nf
        + 4.0 * py * px * (1.0 - py) * (1.0 - px) / (nf * nf);
    let v = v_hat - v_star;
    if !(v > 0.0) {
        return Ok(degenerate(Degeneracy::NonPositiveVariance));
    }
    let statistic = (p_hat - p_star) / v.sqrt();
    Ok(PtResult {
        statistic,
        p_value: (1.0 - norm_cdf(statistic)).clamp(0.0, 1.0),
        hit_rate: p_hat,
        degeneracy: None,
        n,
    })
}
