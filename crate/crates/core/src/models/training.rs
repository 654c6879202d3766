use chrono::NaiveDate;

use crate::access::Probe;
use crate::features::FeatureFrame;
use crate::market_data::{ReturnFrame, WindowSpan};

/// Pooled (date, ticker) training rows with complete features and a realized target.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub columns: Vec<String>,
    pub keys: Vec<(NaiveDate, String)>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Rows dropped because a feature was absent.
    pub dropped: usize,
}

impl TrainingSet {
    /// Rows dated in the training span whose target `r(t -> t+k)` is realized
    /// no later than the training end; columns in sorted order.
    pub fn build(
        frame: &FeatureFrame,
        returns: &ReturnFrame,
        span: &WindowSpan,
        probe: Probe<'_>,
    ) -> Self {
        let columns = sorted_columns(frame);
        let order: Vec<usize> = columns
            .iter()
            .map(|c| frame.column_index(c).expect("column from frame"))
            .collect();
        let mut set = TrainingSet {
            columns,
            keys: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
            dropped: 0,
        };
        for (d, &date) in frame.dates().iter().enumerate() {
            if !span.in_train(date) {
                continue;
            }
            let Some(ci) = returns.calendar_index(date) else { continue };
            match returns.realized_on(ci) {
                Some(r) if r <= span.train_end => probe.read(r),
                _ => continue,
            }
            for (t, ticker) in frame.tickers().iter().enumerate() {
                let Some(target) = returns
                    .tickers()
                    .binary_search(ticker)
                    .ok()
                    .and_then(|ti| returns.get(ti, ci))
                else {
                    continue;
                };
                let row: Option<Vec<f64>> = order.iter().map(|&c| frame.get(d, t, c)).collect();
                match row {
                    Some(x) => {
                        set.keys.push((date, ticker.clone()));
                        set.x.push(x);
                        set.y.push(target);
                    }
                    None => set.dropped += 1,
                }
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }
}

pub(crate) fn sorted_columns(frame: &FeatureFrame) -> Vec<String> {
    let mut cols = frame.columns().to_vec();
    cols.sort();
    cols
}

/// Feature rows to score, in training column order, for the given dates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DesignRows {
    pub columns: Vec<String>,
    pub keys: Vec<(NaiveDate, String)>,
    pub x: Vec<Vec<f64>>,
    /// Rows skipped because a required feature was absent.
    pub skipped: usize,
}

pub fn design_rows(frame: &FeatureFrame, columns: &[String], dates: &[NaiveDate]) -> DesignRows {
    let order: Vec<Option<usize>> = columns.iter().map(|c| frame.column_index(c)).collect();
    let mut rows = DesignRows {
        columns: columns.to_vec(),
        ..DesignRows::default()
    };
    for &date in dates {
        let Some(d) = frame.date_index(date) else { continue };
        for (t, ticker) in frame.tickers().iter().enumerate() {
            let x: Option<Vec<f64>> = order.iter().map(|c| c.and_then(|c| frame.get(d, t, c))).collect();
            match x {
                Some(x) => {
                    rows.keys.push((date, ticker.clone()));
                    rows.x.push(x);
                }
                None => rows.skipped += 1,
            }
        }
    }
    if rows.skipped > 0 {
        log::debug!("design rows: skipped {} rows with absent features", rows.skipped);
    }
    rows
}
