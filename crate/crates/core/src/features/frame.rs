use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::textfmt::repr_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// Per-ticker indicator, z-scored over time.
    Scalar,
    /// Per-date cross-sectional value, passed through unstandardized.
    CrossSectional,
    /// Product of two standardized scalar columns.
    Interaction,
}

/// (date x ticker x column) values; `None` marks an absent value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    columns: Vec<String>,
    kinds: Vec<ColumnKind>,
    values: Vec<Option<f64>>,
}

impl FeatureFrame {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, columns: Vec<(String, ColumnKind)>) -> Self {
        let (columns, kinds): (Vec<_>, Vec<_>) = columns.into_iter().unzip();
        let len = dates.len() * tickers.len() * columns.len();
        Self {
            dates,
            tickers,
            columns,
            kinds,
            values: vec![None; len],
        }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn kind(&self, col: usize) -> ColumnKind {
        self.kinds[col]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    #[inline]
    fn offset(&self, d: usize, t: usize, c: usize) -> usize {
        (d * self.tickers.len() + t) * self.columns.len() + c
    }

    #[inline]
    pub fn get(&self, d: usize, t: usize, c: usize) -> Option<f64> {
        self.values[self.offset(d, t, c)]
    }

    #[inline]
    pub fn set(&mut self, d: usize, t: usize, c: usize, v: Option<f64>) {
        let o = self.offset(d, t, c);
        self.values[o] = v.filter(|x| x.is_finite());
    }

    pub(crate) fn add_column(&mut self, name: &str, kind: ColumnKind) -> usize {
        let old_cols = self.columns.len();
        let mut values = Vec::with_capacity(self.dates.len() * self.tickers.len() * (old_cols + 1));
        for chunk in self.values.chunks(old_cols.max(1)) {
            if old_cols > 0 {
                values.extend_from_slice(chunk);
            }
            values.push(None);
        }
        if old_cols == 0 {
            values.truncate(self.dates.len() * self.tickers.len());
        }
        self.values = values;
        self.columns.push(name.to_string());
        self.kinds.push(kind);
        old_cols
    }

    /// Present `(column, value)` pairs for one (date, ticker) in column order.
    pub fn present(&self, d: usize, t: usize) -> Vec<(&str, f64)> {
        (0..self.columns.len())
            .filter_map(|c| self.get(d, t, c).map(|v| (self.columns[c].as_str(), v)))
            .collect()
    }

    /// Delimited snapshot, one row per (date, ticker), absent cells empty.
    pub fn to_tsv(&self) -> String {
        self.to_tsv_between(NaiveDate::MIN, NaiveDate::MAX)
    }

    /// Snapshot restricted to dates in `[start, end]`.
    pub fn to_tsv_between(&self, start: NaiveDate, end: NaiveDate) -> String {
        let mut out = String::from("date\tticker");
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (d, date) in self.dates.iter().enumerate() {
            if *date < start || *date > end {
                continue;
            }
            for (t, ticker) in self.tickers.iter().enumerate() {
                let _ = write!(out, "{date}\t{ticker}");
                for c in 0..self.columns.len() {
                    out.push('\t');
                    if let Some(v) = self.get(d, t, c) {
                        out.push_str(&repr_f64(v));
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}
