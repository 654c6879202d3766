use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub date: NaiveDate,
    pub close: f64,
    pub volume: f64,
    pub open: Option<f64>,
    pub high: Option<f64>,
    pub low: Option<f64>,
}

impl Bar {
    pub fn new(date: NaiveDate, close: f64, volume: f64) -> Self {
        Self {
            date,
            close,
            volume,
            open: None,
            high: None,
            low: None,
        }
    }
}

/// Header names for the required and optional input columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub ticker: String,
    pub date: String,
    pub close: String,
    pub volume: String,
    pub open: Option<String>,
    pub high: Option<String>,
    pub low: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            ticker: "ticker".into(),
            date: "date".into(),
            close: "close".into(),
            volume: "volume".into(),
            open: None,
            high: None,
            low: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    pub columns: ColumnMap,
    pub delimiter: u8,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            columns: ColumnMap::default(),
            delimiter: b',',
        }
    }
}

/// Immutable per-ticker bars aligned on a shared trading calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    tickers: Vec<String>,
    calendar: Vec<NaiveDate>,
    // bars[ticker][calendar index]
    bars: Vec<Vec<Option<Bar>>>,
}

impl PricePanel {
    /// Builds a panel from unordered bars. Rejects duplicates and invalid values.
    pub fn from_bars(rows: impl IntoIterator<Item = (String, Bar)>) -> Result<Self> {
        let mut by_ticker: BTreeMap<String, BTreeMap<NaiveDate, Bar>> = BTreeMap::new();
        let mut dates = BTreeSet::new();
        for (ticker, bar) in rows {
            validate_bar(&ticker, &bar).map_err(Error::Data)?;
            dates.insert(bar.date);
            if by_ticker
                .entry(ticker.clone())
                .or_default()
                .insert(bar.date, bar)
                .is_some()
            {
                return Err(Error::Data(format!(
                    "duplicate bar for ({ticker}, {})",
                    bar.date
                )));
            }
        }
        let calendar: Vec<NaiveDate> = dates.into_iter().collect();
        let index: BTreeMap<NaiveDate, usize> =
            calendar.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        let mut tickers = Vec::with_capacity(by_ticker.len());
        let mut bars = Vec::with_capacity(by_ticker.len());
        for (ticker, series) in by_ticker {
            let mut aligned = vec![None; calendar.len()];
            for (date, bar) in series {
                aligned[index[&date]] = Some(bar);
            }
            tickers.push(ticker);
            bars.push(aligned);
        }
        Ok(Self {
            tickers,
            calendar,
            bars,
        })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn n_bars(&self) -> usize {
        self.bars.iter().map(|s| s.iter().flatten().count()).sum()
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.binary_search_by(|t| t.as_str().cmp(ticker)).ok()
    }

    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        self.calendar.binary_search(&date).ok()
    }

    /// Bars of one ticker aligned to the calendar (absent where no bar was loaded).
    pub fn series(&self, ticker_idx: usize) -> &[Option<Bar>] {
        &self.bars[ticker_idx]
    }

    pub fn bar(&self, ticker_idx: usize, date_idx: usize) -> Option<&Bar> {
        self.bars[ticker_idx][date_idx].as_ref()
    }

    /// Index range `[lo, hi)` of calendar dates within `[start, end]`.
    pub fn date_range(&self, start: NaiveDate, end: NaiveDate) -> std::ops::Range<usize> {
        let lo = self.calendar.partition_point(|d| *d < start);
        let hi = self.calendar.partition_point(|d| *d <= end);
        lo..hi.max(lo)
    }

    /// Canonical text form: one line per bar sorted by (ticker, date).
    pub fn canonical_string(&self) -> String {
        let mut out = String::new();
        for (t, series) in self.tickers.iter().zip(&self.bars) {
            for bar in series.iter().flatten() {
                let _ = writeln!(
                    out,
                    "{t}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}",
                    bar.date, bar.close, bar.volume, bar.open, bar.high, bar.low
                );
            }
        }
        out
    }
}

fn validate_bar(ticker: &str, bar: &Bar) -> std::result::Result<(), String> {
    if ticker.is_empty() {
        return Err("empty ticker".into());
    }
    if !(bar.close.is_finite() && bar.close > 0.0) {
        return Err(format!("close must be > 0, got {}", bar.close));
    }
    if !(bar.volume.is_finite() && bar.volume >= 0.0) {
        return Err(format!("volume must be >= 0, got {}", bar.volume));
    }
    Ok(())
}

/// Loads a delimited file with a header row, one row per (ticker, date).
pub fn load_panel(path: impl AsRef<Path>, options: &LoadOptions) -> Result<PricePanel> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Config(format!(
                "column '{name}' not found in {} (header: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            ))
        })
    };
    let cols = &options.columns;
    let (ti, di, ci, vi) = (
        find(&cols.ticker)?,
        find(&cols.date)?,
        find(&cols.close)?,
        find(&cols.volume)?,
    );
    let opt = |name: &Option<String>| -> Result<Option<usize>> {
        name.as_deref().map(find).transpose()
    };
    let (oi, hi, li) = (opt(&cols.open)?, opt(&cols.high)?, opt(&cols.low)?);

    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        // header is line 1
        let line = n + 2;
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize, what: &str| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| parse_err(format!("cannot parse {what} '{}'", field(i))))
        };
        let opt_num = |i: Option<usize>, what: &str| -> Result<Option<f64>> {
            match i {
                Some(i) if !field(i).is_empty() => num(i, what).map(Some),
                _ => Ok(None),
            }
        };
        let ticker = field(ti).to_string();
        let date = NaiveDate::parse_from_str(field(di), "%Y-%m-%d")
            .map_err(|_| parse_err(format!("cannot parse date '{}'", field(di))))?;
        let bar = Bar {
            date,
            close: num(ci, "close")?,
            volume: num(vi, "volume")?,
            open: opt_num(oi, "open")?,
            high: opt_num(hi, "high")?,
            low: opt_num(li, "low")?,
        };
        validate_bar(&ticker, &bar).map_err(parse_err)?;
        if !seen.insert((ticker.clone(), date)) {
            return Err(parse_err(format!("duplicate row for ({ticker}, {date})")));
        }
        rows.push((ticker, bar));
    }
    PricePanel::from_bars(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("{other:?}"),
        },
    }
}
