//! Equal-weight long/short construction, turnover capping and cost-adjusted P&L.

mod backtest;
mod costs;
mod weights;

pub use backtest::{backtest, BacktestDay, BacktestResult, BACKTEST_HEADER};
pub use costs::{cost_perturbation_table, cost_sensitivity_table, grouped_sharpe, rank_models, CostRow, PERTURBATIONS};
pub use weights::{apply_turnover_cap, daily_net_pnl, form_weights, turnover, PnlBreakdown, Weights};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioConfig {
    pub p_long: f64,
    pub p_short: f64,
    /// Max one-way turnover per day, as a fraction of gross notional.
    pub turnover_cap: f64,
    /// One-way trading cost, basis points.
    pub cost_bps: f64,
    /// Borrow cost per day on short notional, basis points.
    pub borrow_bps: f64,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        Self {
            p_long: 0.2,
            p_short: 0.2,
            turnover_cap: 1.0,
            cost_bps: 15.0,
            borrow_bps: 5.0,
        }
    }
}

impl PortfolioConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (name, p) in [("p_long", self.p_long), ("p_short", self.p_short)] {
            if !(p > 0.0 && p <= 0.5) {
                errs.push(format!("portfolio.{name} must lie in (0, 0.5], got {p}"));
            }
        }
        if self.p_long + self.p_short > 1.0 {
            errs.push("portfolio.p_long + p_short must be <= 1".into());
        }
        if !(self.turnover_cap > 0.0) {
            errs.push("portfolio.turnover_cap must be > 0".into());
        }
        if !(self.cost_bps >= 0.0) || !(self.borrow_bps >= 0.0) {
            errs.push("portfolio costs must be >= 0".into());
        }
        match errs.len() {
            0 => Ok(()),
            _ => Err(Error::ConfigList(errs)),
        }
    }
}

/// Annualized Sharpe of daily returns; absent on fewer than two days or zero variance.
pub fn sharpe(daily: &[f64]) -> Option<f64> {
    if daily.len() < 2 {
        return None;
    }
    let m = crate::scalar::mean(daily);
    let s = crate::scalar::sample_std(daily);
    (s > 0.0 && s.is_finite()).then(|| m / s * 252f64.sqrt())
}
