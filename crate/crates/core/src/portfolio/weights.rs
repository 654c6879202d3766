use std::collections::BTreeMap;

use super::PortfolioConfig;
use crate::scalar::Scalar;

pub type Weights<F = f64> = BTreeMap<String, F>;

/// Target book for one date; `None` with fewer than two names or all scores equal.
pub fn form_weights<F: Scalar>(scores: &[(String, F)], config: &PortfolioConfig) -> Option<Weights<F>> {
    let n = scores.len();
    if n < 2 || scores.iter().all(|(_, s)| *s == scores[0].1) {
        return None;
    }
    let k = |p: f64| ((p * n as f64).floor() as usize).max(1);
    let k_long = k(config.p_long).min(n - 1);
    let k_short = k(config.p_short).min(n - k_long);
    let mut desc: Vec<&(String, F)> = scores.iter().collect();
    desc.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite scores").then_with(|| a.0.cmp(&b.0)));
    let mut asc: Vec<&(String, F)> = scores.iter().collect();
    asc.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite scores").then_with(|| a.0.cmp(&b.0)));

    let mut w: Weights<F> = scores.iter().map(|(t, _)| (t.clone(), F::zero())).collect();
    let long_w = F::one() / F::from_usize_lossy(k_long);
    for (t, _) in desc.iter().take(k_long) {
        w.insert(t.clone(), long_w);
    }
    let short_w = -F::one() / F::from_usize_lossy(k_short);
    let mut placed = 0;
    for (t, _) in asc.iter() {
        if placed == k_short {
            break;
        }
        if w[t].is_zero() {
            w.insert(t.clone(), short_w);
            placed += 1;
        }
    }
    Some(w)
}

/// `sum_i |w_i - prev_i|` over the union of names.
pub fn turnover<F: Scalar>(target: &Weights<F>, previous: &Weights<F>) -> F {
    let mut total = F::zero();
    for (t, w) in target {
        total = total + (*w - previous.get(t).copied().unwrap_or_else(F::zero)).abs();
    }
    for (t, p) in previous {
        if !target.contains_key(t) {
            total = total + p.abs();
        }
    }
    total
}

/// Scales the trade toward `target` so that turnover does not exceed `cap`.
pub fn apply_turnover_cap<F: Scalar>(target: &Weights<F>, previous: &Weights<F>, cap: F) -> (Weights<F>, F) {
    let tv = turnover(target, previous);
    if tv <= cap {
        return (target.clone(), tv);
    }
    let alpha = cap / tv;
    let mut names: Vec<&String> = target.keys().chain(previous.keys()).collect();
    names.sort();
    names.dedup();
    let out: Weights<F> = names
        .into_iter()
        .map(|t| {
            let p = previous.get(t).copied().unwrap_or_else(F::zero);
            let g = target.get(t).copied().unwrap_or_else(F::zero);
            (t.clone(), p + alpha * (g - p))
        })
        .collect();
    let realized = turnover(&out, previous);
    (out, realized)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnlBreakdown<F = f64> {
    pub gross: F,
    pub trading_cost: F,
    pub borrow_cost: F,
    pub net: F,
    pub short_notional: F,
    /// Held names without a return, counted as zero.
    pub missing_returns: usize,
}

/// `sum w r - turnover * c / 1e4 - b / 1e4 * sum max(0, -w)` for the held book.
pub fn daily_net_pnl<F: Scalar>(
    held: &Weights<F>,
    returns: &BTreeMap<String, F>,
    turnover: F,
    config: &PortfolioConfig,
) -> PnlBreakdown<F> {
    let mut gross = F::zero();
    let mut short_notional = F::zero();
    let mut missing = 0;
    for (t, &w) in held {
        if w.is_zero() {
            continue;
        }
        match returns.get(t) {
            Some(&r) => gross = gross + w * r,
            None => missing += 1,
        }
        short_notional = short_notional + (-w).max(F::zero());
    }
    let bp = F::lit(10_000.0);
    let trading_cost = turnover * F::lit(config.cost_bps) / bp;
    let borrow_cost = F::lit(config.borrow_bps) / bp * short_notional;
    PnlBreakdown {
        gross,
        trading_cost,
        borrow_cost,
        net: gross - trading_cost - borrow_cost,
        short_notional,
        missing_returns: missing,
    }
}
