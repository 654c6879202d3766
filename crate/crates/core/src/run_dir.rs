//! On-disk layout of a run directory and readers for its files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::market_data::ReturnFrame;
use crate::metrics::DateMetrics;
use crate::models::ScoreFrame;
use crate::portfolio::BacktestDay;
use crate::textfmt::repr_f64;

pub const MANIFEST: &str = "manifest.txt";
pub const CALL_LOG: &str = "calls.tsv";
pub const WINDOWS: &str = "windows";
pub const REPORTS: &str = "reports";
pub const FEATURES: &str = "features.tsv";
pub const METRICS: &str = "metrics.tsv";
pub const SUMMARY: &str = "summary.tsv";

pub const SCORES_HEADER: &str = "date\tticker\tscore\trealized";
pub const METRICS_HEADER: &str = "label\tdate\tic\tsq_err_sum\tcount\tstatus";
pub const SUMMARY_HEADER: &str = "label\tloss\thalf_width\tdates\tmse\tinvalid_dates";

/// `k{k}_u{U}_w{idx:03}`
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowId {
    pub horizon: usize,
    pub universe: usize,
    pub index: usize,
}

impl WindowId {
    pub fn parse(s: &str) -> Option<Self> {
        let rest = s.strip_prefix('k')?;
        let (k, rest) = rest.split_once("_u")?;
        let (u, w) = rest.split_once("_w")?;
        Some(Self {
            horizon: k.parse().ok()?,
            universe: u.parse().ok()?,
            index: w.parse().ok()?,
        })
    }
}

impl std::fmt::Display for WindowId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "k{}_u{}_w{:03}", self.horizon, self.universe, self.index)
    }
}

pub fn window_dir(run: &Path, id: &WindowId) -> PathBuf {
    run.join(WINDOWS).join(id.to_string())
}

pub fn scores_file(label: &str) -> String {
    format!("scores_{label}.tsv")
}

pub fn backtest_file(label: &str) -> String {
    format!("backtest_{label}.tsv")
}

pub fn positions_file(label: &str) -> String {
    format!("positions_{label}.tsv")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(repr_f64).unwrap_or_else(|| "NA".into())
}

fn parse_opt(s: &str) -> Option<Option<f64>> {
    if s == "NA" {
        Some(None)
    } else {
        s.parse().ok().map(Some)
    }
}

pub fn scores_tsv(frame: &ScoreFrame, realized: &ReturnFrame) -> String {
    let mut out = format!("{SCORES_HEADER}\n");
    for (date, row) in frame.by_date() {
        for (t, s) in row {
            writeln!(out, "{date}\t{t}\t{}\t{}", repr_f64(*s), fmt_opt(realized.get_by_name(t, *date))).unwrap();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub date: NaiveDate,
    pub ticker: String,
    pub score: f64,
    pub realized: Option<f64>,
}

fn lines_after_header<'a>(path: &Path, text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => Ok(lines.filter(|(_, l)| !l.is_empty())),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header '{header}'"),
        }),
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line + 1,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let text = read(path)?;
    let rows = lines_after_header(path, &text, SCORES_HEADER)?
        .map(|(i, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            let bad = || parse_err(path, i, format!("malformed score row '{l}'"));
            if f.len() != 4 {
                return Err(bad());
            }
            Ok(ScoreRow {
                date: f[0].parse().map_err(|_| bad())?,
                ticker: f[1].to_string(),
                score: f[2].parse().map_err(|_| bad())?,
                realized: parse_opt(f[3]).ok_or_else(bad)?,
            })
        })
        .collect();
    rows
}

/// One row per scored date; invalid dates appear with status `invalid`.
pub fn metrics_rows(label: &str, metrics: &[DateMetrics], invalid: impl IntoIterator<Item = NaiveDate>) -> String {
    let mut rows: Vec<(NaiveDate, String)> = metrics
        .iter()
        .map(|m| {
            (
                m.date,
                format!("{label}\t{}\t{}\t{}\t{}\tok", m.date, fmt_opt(m.ic), repr_f64(m.sq_err_sum), m.count),
            )
        })
        .collect();
    rows.extend(invalid.into_iter().map(|d| (d, format!("{label}\t{d}\tNA\tNA\t0\tinvalid"))));
    rows.sort();
    rows.into_iter().map(|(_, r)| r + "\n").collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub label: String,
    pub metrics: DateMetrics,
    pub valid: bool,
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = read(path)?;
    let rows = lines_after_header(path, &text, METRICS_HEADER)?
        .map(|(i, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            let bad = || parse_err(path, i, format!("malformed metrics row '{l}'"));
            if f.len() != 6 {
                return Err(bad());
            }
            let valid = match f[5] {
                "ok" => true,
                "invalid" => false,
                _ => return Err(bad()),
            };
            Ok(MetricsRow {
                label: f[0].to_string(),
                metrics: DateMetrics {
                    date: f[1].parse().map_err(|_| bad())?,
                    ic: parse_opt(f[2]).ok_or_else(bad)?,
                    sq_err_sum: parse_opt(f[3]).ok_or_else(bad)?.unwrap_or(0.0),
                    count: f[4].parse().map_err(|_| bad())?,
                },
                valid,
            })
        })
        .collect();
    rows
}

pub fn read_backtest(path: &Path) -> Result<Vec<BacktestDay>> {
    let text = read(path)?;
    let rows = lines_after_header(path, &text, crate::portfolio::BACKTEST_HEADER)?
        .map(|(i, l)| BacktestDay::parse_row(l).ok_or_else(|| parse_err(path, i, format!("malformed backtest row '{l}'"))))
        .collect();
    rows
}

/// `key=value` lines in file order; later duplicates are rejected.
pub fn read_manifest(run: &Path) -> Result<BTreeMap<String, String>> {
    let path = run.join(MANIFEST);
    let text = read(&path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(&path, i, format!("expected key=value, got '{line}'")))?;
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(parse_err(&path, i, format!("duplicate key '{k}'")));
        }
    }
    Ok(map)
}

/// Windows listed in the manifest with their recorded status.
pub fn manifest_windows(manifest: &BTreeMap<String, String>) -> Vec<(WindowId, String)> {
    let mut out: Vec<(WindowId, String)> = manifest
        .iter()
        .filter_map(|(k, v)| {
            let id = k.strip_prefix("window.")?.strip_suffix(".status")?;
            Some((WindowId::parse(id)?, v.clone()))
        })
        .collect();
    out.sort();
    out
}
