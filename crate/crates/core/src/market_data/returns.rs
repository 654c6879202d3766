use chrono::NaiveDate;

use super::PricePanel;
use crate::error::{Error, Result};

/// Forward returns `r(t -> t+k)` aligned on the panel calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnFrame {
    horizon: usize,
    tickers: Vec<String>,
    calendar: Vec<NaiveDate>,
    values: Vec<Vec<Option<f64>>>,
}

impl ReturnFrame {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn get(&self, ticker_idx: usize, date_idx: usize) -> Option<f64> {
        self.values[ticker_idx][date_idx]
    }

    pub fn calendar_index(&self, date: NaiveDate) -> Option<usize> {
        self.calendar.binary_search(&date).ok()
    }

    pub fn get_by_name(&self, ticker: &str, date: NaiveDate) -> Option<f64> {
        let t = self.tickers.binary_search_by(|x| x.as_str().cmp(ticker)).ok()?;
        let d = self.calendar.binary_search(&date).ok()?;
        self.get(t, d)
    }

    /// Date on which the return recorded at `date_idx` becomes known.
    pub fn realized_on(&self, date_idx: usize) -> Option<NaiveDate> {
        self.calendar.get(date_idx + self.horizon).copied()
    }

    pub fn series(&self, ticker_idx: usize) -> &[Option<f64>] {
        &self.values[ticker_idx]
    }
}

/// `r(t -> t+k) = close[t+k] / close[t] - 1`, absent when either close is missing.
pub fn forward_returns(panel: &PricePanel, k: usize) -> Result<ReturnFrame> {
    if k == 0 {
        return Err(Error::Argument("horizon k must be >= 1".into()));
    }
    let n = panel.calendar().len();
    let values = (0..panel.tickers().len())
        .map(|ti| {
            let s = panel.series(ti);
            (0..n)
                .map(|t| match (s[t].as_ref(), s.get(t + k).and_then(|b| b.as_ref())) {
                    (Some(a), Some(b)) => Some(b.close / a.close - 1.0),
                    _ => None,
                })
                .collect()
        })
        .collect();
    Ok(ReturnFrame {
        horizon: k,
        tickers: panel.tickers().to_vec(),
        calendar: panel.calendar().to_vec(),
        values,
    })
}
