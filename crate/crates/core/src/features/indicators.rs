//! Per-ticker indicator kernels over a contiguous series of observations.
//!
//! Every kernel returns one entry per input observation, `None` where the
//! history is insufficient.

use crate::scalar::{sample_std, Scalar};

/// `close[t] / close[t-n] - 1`.
pub fn momentum<F: Scalar>(closes: &[F], n: usize) -> Vec<Option<F>> {
    (0..closes.len())
        .map(|t| (t >= n && n > 0).then(|| closes[t] / closes[t - n] - F::one()))
        .collect()
}

/// One-day simple returns; entry 0 is `None`.
pub fn daily_returns<F: Scalar>(closes: &[F]) -> Vec<Option<F>> {
    momentum(closes, 1)
}

/// Sample stdev of the last `n` one-day returns.
pub fn volatility<F: Scalar>(closes: &[F], n: usize) -> Vec<Option<F>> {
    let rets = daily_returns(closes);
    (0..closes.len())
        .map(|t| {
            if n < 2 || t < n {
                return None;
            }
            let window: Vec<F> = rets[t + 1 - n..=t].iter().map(|r| r.unwrap()).collect();
            Some(sample_std(&window))
        })
        .collect()
}

/// `volume[t] / volume[t-n] - 1`, absent when the lagged volume is zero.
pub fn volume_change<F: Scalar>(volumes: &[F], n: usize) -> Vec<Option<F>> {
    (0..volumes.len())
        .map(|t| {
            (t >= n && n > 0 && volumes[t - n] > F::zero())
                .then(|| volumes[t] / volumes[t - n] - F::one())
        })
        .collect()
}

/// Distance below the trailing `window`-day high (including today); always `<= 0`.
pub fn drawdown<F: Scalar>(closes: &[F], window: usize) -> Vec<Option<F>> {
    let window = window.max(1);
    (0..closes.len())
        .map(|t| {
            let lo = (t + 1).saturating_sub(window);
            let peak = closes[lo..=t]
                .iter()
                .copied()
                .fold(F::neg_infinity(), F::max);
            Some((closes[t] / peak - F::one()).min(F::zero()))
        })
        .collect()
}

/// Wilder RSI. Flat history (no gains, no losses) reads 50.
pub fn rsi_wilder<F: Scalar>(closes: &[F], period: usize) -> Vec<Option<F>> {
    let mut out = vec![None; closes.len()];
    if period == 0 || closes.len() <= period {
        return out;
    }
    let p = F::from_usize_lossy(period);
    let (mut gain, mut loss) = (F::zero(), F::zero());
    for t in 1..=period {
        let c = closes[t] - closes[t - 1];
        gain = gain + c.max(F::zero());
        loss = loss + (-c).max(F::zero());
    }
    gain = gain / p;
    loss = loss / p;
    out[period] = Some(rsi_from(gain, loss));
    for t in period + 1..closes.len() {
        let c = closes[t] - closes[t - 1];
        gain = (gain * (p - F::one()) + c.max(F::zero())) / p;
        loss = (loss * (p - F::one()) + (-c).max(F::zero())) / p;
        out[t] = Some(rsi_from(gain, loss));
    }
    out
}

fn rsi_from<F: Scalar>(gain: F, loss: F) -> F {
    let hundred = F::lit(100.0);
    if loss == F::zero() {
        if gain == F::zero() {
            F::lit(50.0)
        } else {
            hundred
        }
    } else {
        hundred - hundred / (F::one() + gain / loss)
    }
}

/// EMA with multiplier `2/(n+1)` seeded at the first observation.
pub fn ema<F: Scalar>(xs: &[F], n: usize) -> Vec<F> {
    let alpha = F::lit(2.0) / F::from_usize_lossy(n + 1);
    let mut out = Vec::with_capacity(xs.len());
    let mut prev = None;
    for &x in xs {
        let v = match prev {
            None => x,
            Some(p) => alpha * x + (F::one() - alpha) * p,
        };
        out.push(v);
        prev = Some(v);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Macd<F> {
    pub macd: Vec<F>,
    pub signal: Vec<F>,
    pub hist: Vec<F>,
}

/// EMA(12) - EMA(26), its EMA(9) signal, and the histogram `macd - signal`.
pub fn macd<F: Scalar>(closes: &[F]) -> Macd<F> {
    let fast = ema(closes, 12);
    let slow = ema(closes, 26);
    let macd: Vec<F> = fast.iter().zip(&slow).map(|(&a, &b)| a - b).collect();
    let signal = ema(&macd, 9);
    let hist = macd.iter().zip(&signal).map(|(&m, &s)| m - s).collect();
    Macd { macd, signal, hist }
}

/// Skewness and excess kurtosis (moment estimators) of the last `n` one-day returns.
pub fn return_moments<F: Scalar>(closes: &[F], n: usize) -> (Vec<Option<F>>, Vec<Option<F>>) {
    let rets = daily_returns(closes);
    let mut skew = vec![None; closes.len()];
    let mut kurt = vec![None; closes.len()];
    for t in 0..closes.len() {
        if n < 3 || t < n {
            continue;
        }
        let w: Vec<F> = rets[t + 1 - n..=t].iter().map(|r| r.unwrap()).collect();
        let nf = F::from_usize_lossy(n);
        let m = w.iter().copied().sum::<F>() / nf;
        let (mut m2, mut m3, mut m4) = (F::zero(), F::zero(), F::zero());
        for &x in &w {
            let d = x - m;
            m2 = m2 + d * d;
            m3 = m3 + d * d * d;
            m4 = m4 + d * d * d * d;
        }
        m2 = m2 / nf;
        m3 = m3 / nf;
        m4 = m4 / nf;
        if m2 > F::zero() {
            skew[t] = Some(m3 / m2.powf(F::lit(1.5)));
            kurt[t] = Some(m4 / (m2 * m2) - F::lit(3.0));
        }
    }
    (skew, kurt)
}

/// OLS slope of `y` on `x` over the trailing `n` points where both are present.
pub fn rolling_beta<F: Scalar>(y: &[Option<F>], x: &[Option<F>], n: usize) -> Vec<Option<F>> {
    (0..y.len())
        .map(|t| {
            if t + 1 < n {
                return None;
            }
            let pairs: Vec<(F, F)> = (t + 1 - n..=t)
                .filter_map(|i| Some((x[i]?, y[i]?)))
                .collect();
            if pairs.len() < n.max(2) {
                return None;
            }
            let nf = F::from_usize_lossy(pairs.len());
            let mx = pairs.iter().map(|p| p.0).sum::<F>() / nf;
            let my = pairs.iter().map(|p| p.1).sum::<F>() / nf;
            let sxy: F = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: F = pairs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            (sxx > F::zero()).then(|| sxy / sxx)
        })
        .collect()
}

/// Running sum of `sign(return) * volume` from the start of the series.
pub fn obv_like<F: Scalar>(closes: &[F], volumes: &[F]) -> Vec<Option<F>> {
    let mut acc = F::zero();
    let mut out = Vec::with_capacity(closes.len());
    for t in 0..closes.len() {
        if t == 0 {
            out.push(None);
            continue;
        }
        let d = closes[t] - closes[t - 1];
        let s = if d > F::zero() {
            F::one()
        } else if d < F::zero() {
            -F::one()
        } else {
            F::zero()
        };
        acc = acc + s * volumes[t];
        out.push(Some(acc));
    }
    out
}
