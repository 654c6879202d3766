use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::NaiveDate;
use log::warn;

use super::weights::{apply_turnover_cap, daily_net_pnl, form_weights, Weights};
use super::{sharpe, PortfolioConfig};
use crate::market_data::ReturnFrame;
use crate::models::ScoreFrame;
use crate::textfmt::repr_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestDay {
    pub date: NaiveDate,
    pub gross: f64,
    pub trading_cost: f64,
    pub borrow_cost: f64,
    pub net: f64,
    pub turnover: f64,
    pub short_notional: f64,
}

pub const BACKTEST_HEADER: &str = "date\tgross\ttrading_cost\tborrow_cost\tnet\tturnover\tshort_notional";

impl BacktestDay {
    /// Net P&L under other cost settings, holding the trades fixed.
    pub fn net_at(&self, cost_bps: f64, borrow_bps: f64) -> f64 {
        self.gross - self.turnover * cost_bps / 10_000.0 - borrow_bps / 10_000.0 * self.short_notional
    }

    pub fn parse_row(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return None;
        }
        let n = |i: usize| f[i].parse::<f64>().ok();
        Some(Self {
            date: f[0].parse().ok()?,
            gross: n(1)?,
            trading_cost: n(2)?,
            borrow_cost: n(3)?,
            net: n(4)?,
            turnover: n(5)?,
            short_notional: n(6)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BacktestResult {
    pub days: Vec<BacktestDay>,
    /// Held book after each day's rebalance.
    pub positions: Vec<(NaiveDate, Weights)>,
    pub skipped_dates: usize,
    pub missing_returns: usize,
}

impl BacktestResult {
    pub fn net(&self) -> Vec<f64> {
        self.days.iter().map(|d| d.net).collect()
    }

    pub fn net_sharpe(&self) -> Option<f64> {
        sharpe(&self.net())
    }

    pub fn gross_sharpe(&self) -> Option<f64> {
        sharpe(&self.days.iter().map(|d| d.gross).collect::<Vec<_>>())
    }

    pub fn cumulative_net(&self) -> f64 {
        self.days.iter().map(|d| d.net).sum()
    }

    pub fn mean_turnover(&self) -> Option<f64> {
        (!self.days.is_empty())
            .then(|| self.days.iter().map(|d| d.turnover).sum::<f64>() / self.days.len() as f64)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("{BACKTEST_HEADER}\n");
        for d in &self.days {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                d.date,
                repr_f64(d.gross),
                repr_f64(d.trading_cost),
                repr_f64(d.borrow_cost),
                repr_f64(d.net),
                repr_f64(d.turnover),
                repr_f64(d.short_notional)
            )
            .unwrap();
        }
        out
    }

    /// Non-zero weights, one row per (date, ticker).
    pub fn positions_tsv(&self) -> String {
        let mut out = String::from("date\tticker\tweight\n");
        for (date, w) in &self.positions {
            for (t, v) in w.iter().filter(|(_, v)| **v != 0.0) {
                writeln!(out, "{date}\t{t}\t{}", repr_f64(*v)).unwrap();
            }
        }
        out
    }
}

/// Daily loop from a zero book: form target, cap the trade, book one-day P&L of the held weights.
/// Dates without a usable ranking keep the previous book; dates whose next
/// trading day lies past the end of the panel are not traded.
pub fn backtest(scores: &ScoreFrame, returns_1d: &ReturnFrame, config: &PortfolioConfig) -> BacktestResult {
    let dates: BTreeSet<NaiveDate> = scores
        .by_date()
        .keys()
        .chain(scores.invalid_dates().iter())
        .copied()
        .collect();
    let mut held: Option<Weights> = None;
    let mut out = BacktestResult::default();
    for date in dates {
        if returns_1d.calendar_index(date).and_then(|i| returns_1d.realized_on(i)).is_none() {
            out.skipped_dates += 1;
            continue;
        }
        let target = if scores.invalid_dates().contains(&date) {
            None
        } else {
            scores.by_date().get(&date).and_then(|row| form_weights(row, config))
        };
        if target.is_none() {
            out.skipped_dates += 1;
        }
        let (book, tv) = match (target, &held) {
            (Some(t), prev) => apply_turnover_cap(&t, prev.as_ref().unwrap_or(&Weights::new()), config.turnover_cap),
            (None, Some(prev)) => (prev.clone(), 0.0),
            (None, None) => continue,
        };
        let r: BTreeMap<String, f64> = book
            .keys()
            .filter_map(|t| returns_1d.get_by_name(t, date).map(|v| (t.clone(), v)))
            .collect();
        let pnl = daily_net_pnl(&book, &r, tv, config);
        if pnl.missing_returns > 0 {
            warn!("{date}: {} held names without a return, counted as 0", pnl.missing_returns);
            out.missing_returns += pnl.missing_returns;
        }
        out.days.push(BacktestDay {
            date,
            gross: pnl.gross,
            trading_cost: pnl.trading_cost,
            borrow_cost: pnl.borrow_cost,
            net: pnl.net,
            turnover: tv,
            short_notional: pnl.short_notional,
        });
        out.positions.push((date, book.clone()));
        held = Some(book);
    }
    out
}
