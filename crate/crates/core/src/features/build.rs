use chrono::NaiveDate;

use super::cross_section::{cross_sectional_ranks, market_context};
use super::frame::{ColumnKind, FeatureFrame};
use super::indicators as ind;
use super::policy::{FeatureBlockPolicy, CONTEXT_COLUMNS, CORE_SCALAR, RICH_SCALAR, XRANK_SOURCES};
use crate::market_data::PricePanel;

/// Raw (unstandardized) per-ticker indicators over the full calendar.
///
/// Computed on each ticker's own observed bars, so "n days ago" means n
/// observations of that ticker. Independent of universe and window.
#[derive(Debug, Clone)]
pub struct RawFeatureStore {
    tickers: Vec<String>,
    calendar: Vec<NaiveDate>,
    columns: Vec<&'static str>,
    // values[ticker][column][calendar index]
    values: Vec<Vec<Vec<Option<f64>>>>,
}

impl RawFeatureStore {
    pub fn compute(panel: &PricePanel) -> Self {
        let columns: Vec<&'static str> = CORE_SCALAR.iter().chain(RICH_SCALAR).copied().collect();
        let n = panel.calendar().len();
        let market = equal_weight_market_returns(panel);

        let values = (0..panel.tickers().len())
            .map(|ti| {
                let series = panel.series(ti);
                let idx: Vec<usize> = (0..n).filter(|&d| series[d].is_some()).collect();
                let closes: Vec<f64> = idx.iter().map(|&d| series[d].unwrap().close).collect();
                let volumes: Vec<f64> = idx.iter().map(|&d| series[d].unwrap().volume).collect();
                let mkt: Vec<Option<f64>> = idx.iter().map(|&d| market[d]).collect();
                let rets = ind::daily_returns(&closes);
                let macd = ind::macd(&closes);
                let (skew, kurt) = ind::return_moments(&closes, 20);
                let wrap = |v: Vec<f64>| v.into_iter().map(Some).collect::<Vec<_>>();
                let mom5 = ind::momentum(&closes, 5);
                let compact = |name: &str| -> Vec<Option<f64>> {
                    match name {
                        "mom_2" => ind::momentum(&closes, 2),
                        "mom_5" => mom5.clone(),
                        "mom_10" => ind::momentum(&closes, 10),
                        "mom_20" => ind::momentum(&closes, 20),
                        "mom_60" => ind::momentum(&closes, 60),
                        "mom_120" => ind::momentum(&closes, 120),
                        "vol_5" => ind::volatility(&closes, 5),
                        "vol_20" => ind::volatility(&closes, 20),
                        "vol_60" => ind::volatility(&closes, 60),
                        "rev_5" => mom5.iter().map(|m| m.map(|v| -v)).collect(),
                        "volchg_5" => ind::volume_change(&volumes, 5),
                        "volchg_20" => ind::volume_change(&volumes, 20),
                        "drawdown_20" => ind::drawdown(&closes, 20),
                        "rsi_14" => ind::rsi_wilder(&closes, 14),
                        "macd" => wrap(macd.macd.clone()),
                        "macd_signal" => wrap(macd.signal.clone()),
                        "macd_hist" => wrap(macd.hist.clone()),
                        "ret1_skew_20" => skew.clone(),
                        "ret1_kurt_20" => kurt.clone(),
                        "beta_mkt_60" => ind::rolling_beta(&rets, &mkt, 60),
                        "obv_like" => ind::obv_like(&closes, &volumes),
                        other => unreachable!("unknown column {other}"),
                    }
                };
                columns
                    .iter()
                    .map(|c| {
                        let mut full = vec![None; n];
                        for (v, &d) in compact(c).into_iter().zip(&idx) {
                            full[d] = v.filter(|x| x.is_finite());
                        }
                        full
                    })
                    .collect()
            })
            .collect();
        Self {
            tickers: panel.tickers().to_vec(),
            calendar: panel.calendar().to_vec(),
            columns,
            values,
        }
    }

    pub fn get(&self, ticker: &str, column: &str, date_idx: usize) -> Option<f64> {
        let t = self.tickers.binary_search_by(|x| x.as_str().cmp(ticker)).ok()?;
        let c = self.columns.iter().position(|x| *x == column)?;
        self.values[t][c][date_idx]
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }
}

/// Equal-weight mean one-day return over every panel ticker with bars on both days.
fn equal_weight_market_returns(panel: &PricePanel) -> Vec<Option<f64>> {
    let n = panel.calendar().len();
    (0..n)
        .map(|d| {
            if d == 0 {
                return None;
            }
            let rets: Vec<f64> = (0..panel.tickers().len())
                .filter_map(|t| {
                    let a = panel.bar(t, d - 1)?;
                    let b = panel.bar(t, d)?;
                    Some(b.close / a.close - 1.0)
                })
                .collect();
            (!rets.is_empty()).then(|| rets.iter().sum::<f64>() / rets.len() as f64)
        })
        .collect()
}

/// Raw frame for one universe over `[start, end]`: scalar columns copied from the
/// store, then per-date `*_xrank` and `mkt_mean_*` columns over the universe.
pub fn build_window_frame(
    store: &RawFeatureStore,
    universe: &[String],
    start: NaiveDate,
    end: NaiveDate,
    policy: &FeatureBlockPolicy,
) -> FeatureFrame {
    let lo = store.calendar.partition_point(|d| *d < start);
    let hi = store.calendar.partition_point(|d| *d <= end);
    let dates = store.calendar[lo..hi.max(lo)].to_vec();
    let scalar = policy.scalar_columns(universe.len());
    let mut frame = FeatureFrame::new(
        dates,
        universe.to_vec(),
        scalar
            .iter()
            .map(|c| (c.to_string(), ColumnKind::Scalar))
            .collect(),
    );
    for (t, ticker) in universe.iter().enumerate() {
        for (c, col) in scalar.iter().enumerate() {
            for d in 0..frame.dates().len() {
                frame.set(d, t, c, store.get(ticker, col, lo + d));
            }
        }
    }
    cross_sectional_ranks(&mut frame, XRANK_SOURCES);
    market_context(&mut frame, CONTEXT_COLUMNS);
    frame
}
