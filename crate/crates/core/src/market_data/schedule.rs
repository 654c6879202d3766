use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

/// Train/test date bounds of one walk-forward step (inclusive on both ends).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowSpan {
    pub index: usize,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
}

impl WindowSpan {
    pub fn is_chronological(&self) -> bool {
        self.train_start <= self.train_end
            && self.train_end < self.test_start
            && self.test_start <= self.test_end
    }

    pub fn in_train(&self, d: NaiveDate) -> bool {
        d >= self.train_start && d <= self.train_end
    }

    pub fn in_test(&self, d: NaiveDate) -> bool {
        d >= self.test_start && d <= self.test_end
    }
}

/// A scheduled window together with the universe held fixed over its test month(s).
#[derive(Debug, Clone, PartialEq)]
pub struct WalkForwardWindow {
    pub span: WindowSpan,
    pub universe: Vec<String>,
}

/// Rolling schedule over calendar months of the trading calendar.
///
/// Window `i` trains on months `[i*test, i*test + train)` and tests on the
/// following `test` months; a month ends on its last trading date.
pub fn build_schedule(
    calendar: &[NaiveDate],
    train_months: usize,
    test_months: usize,
) -> Result<Vec<WindowSpan>> {
    if train_months == 0 || test_months == 0 {
        return Err(Error::Argument(
            "train_months and test_months must be >= 1".into(),
        ));
    }
    if calendar.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("calendar must be strictly increasing".into()));
    }
    // (first, last) trading date of each calendar month
    let mut months: Vec<(NaiveDate, NaiveDate)> = Vec::new();
    for &d in calendar {
        match months.last_mut() {
            Some((first, last)) if (first.year(), first.month()) == (d.year(), d.month()) => {
                *last = d
            }
            _ => months.push((d, d)),
        }
    }
    let required = train_months + test_months;
    if months.len() < required {
        return Err(Error::InsufficientHistory {
            available: months.len(),
            required,
        });
    }
    let mut windows = Vec::new();
    let mut i = 0;
    while i * test_months + required <= months.len() {
        let s = i * test_months;
        windows.push(WindowSpan {
            index: i,
            train_start: months[s].0,
            train_end: months[s + train_months - 1].1,
            test_start: months[s + train_months].0,
            test_end: months[s + required - 1].1,
        });
        i += 1;
    }
    Ok(windows)
}
