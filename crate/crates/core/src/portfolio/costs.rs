use std::fmt::Write as _;

use super::backtest::BacktestDay;
use super::{sharpe, PortfolioConfig};
use crate::textfmt::repr_f64;

/// Scale factors applied to (one-way cost, borrow cost).
pub const PERTURBATIONS: [(f64, f64); 9] = [
    (0.5, 0.5),
    (0.5, 1.0),
    (0.5, 1.5),
    (1.0, 0.5),
    (1.0, 1.0),
    (1.0, 1.5),
    (1.5, 0.5),
    (1.5, 1.0),
    (1.5, 1.5),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub model: String,
    pub sharpe: f64,
    pub rank: usize,
}

/// Mean over groups (e.g. universes) of the net Sharpe at the given costs.
pub fn grouped_sharpe(groups: &[Vec<BacktestDay>], cost_bps: f64, borrow_bps: f64) -> Option<f64> {
    let s: Vec<f64> = groups
        .iter()
        .filter_map(|g| sharpe(&g.iter().map(|d| d.net_at(cost_bps, borrow_bps)).collect::<Vec<_>>()))
        .collect();
    (!s.is_empty()).then(|| s.iter().sum::<f64>() / s.len() as f64)
}

/// Rank 1 = highest Sharpe; ties by model name.
pub fn rank_models(entries: &[(String, f64)]) -> Vec<CostRow> {
    let mut v: Vec<&(String, f64)> = entries.iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.into_iter()
        .enumerate()
        .map(|(i, (m, s))| CostRow {
            model: m.clone(),
            sharpe: *s,
            rank: i + 1,
        })
        .collect()
}

pub fn cost_sensitivity_table(entries: &[(String, f64)]) -> String {
    let mut out = String::from("Model\tBase Net Sharpe\tRank\n");
    for r in rank_models(entries) {
        writeln!(out, "{}\t{:.3}\t{}", r.model, r.sharpe, r.rank).unwrap();
    }
    out
}

/// Net Sharpe and rank for every model under each cost perturbation.
pub fn cost_perturbation_table(models: &[(String, Vec<Vec<BacktestDay>>)], base: &PortfolioConfig) -> String {
    let mut out = String::from("Model\tc_one_way_bps\tborrow_bps\tNet Sharpe\tRank\n");
    for (cs, bs) in PERTURBATIONS {
        let (c, b) = (base.cost_bps * cs, base.borrow_bps * bs);
        let entries: Vec<(String, f64)> = models
            .iter()
            .filter_map(|(m, g)| grouped_sharpe(g, c, b).map(|s| (m.clone(), s)))
            .collect();
        for r in rank_models(&entries) {
            writeln!(out, "{}\t{}\t{}\t{:.3}\t{}", r.model, repr_f64(c), repr_f64(b), r.sharpe, r.rank).unwrap();
        }
    }
    out
}
