use std::fmt::Write as _;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::features::FeatureFrame;

/// System prompt shared by the direct and reasoning variants.
pub const SYSTEM_PROMPT: &str = include_str!("../../resources/system_prompt.txt");
/// Version tag of the bundled system prompt, recorded in run manifests.
pub const SYSTEM_PROMPT_VERSION: &str = "v1";

pub const BEGIN_MARKER: &str = "<<BEGIN>>";
pub const END_MARKER: &str = "<<END>>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Effort {
    Low,
    Medium,
    High,
}

impl Effort {
    pub fn as_str(self) -> &'static str {
        match self {
            Effort::Low => "low",
            Effort::Medium => "medium",
            Effort::High => "high",
        }
    }
}

impl FromStr for Effort {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Effort::Low),
            "medium" => Ok(Effort::Medium),
            "high" => Ok(Effort::High),
            other => Err(Error::Config(format!("effort must be low|medium|high, got '{other}'"))),
        }
    }
}

/// One ticker's present features, in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct TickerFeatures {
    pub ticker: String,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
    pub expected: Vec<String>,
    pub effort: Option<Effort>,
}

fn fixed6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// Serializes one date's feature table. Absent features are left out, never zero-filled.
pub fn build_user_message(rows: &[TickerFeatures], k: usize, effort: Option<Effort>) -> Result<String> {
    let rows: Vec<&TickerFeatures> = rows.iter().filter(|r| !r.values.is_empty()).collect();
    if rows.is_empty() {
        return Err(Error::Argument("prompt needs at least one ticker with a present feature".into()));
    }
    let mut out = String::new();
    writeln!(out, "INPUT").unwrap();
    writeln!(out, "horizon k={k}").unwrap();
    if let Some(e) = effort {
        writeln!(out, "effort={}", e.as_str()).unwrap();
    }
    writeln!(out, "tickers={}", rows.len()).unwrap();
    writeln!(out, "FEATURES").unwrap();
    for r in &rows {
        out.push_str(&r.ticker);
        for (name, v) in &r.values {
            write!(out, "\t{name}={}", fixed6(*v)).unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "OUTPUT").unwrap();
    writeln!(
        out,
        "Return one line per input ticker, formatted TICKER<TAB>SCORE, strictly between {BEGIN_MARKER} and {END_MARKER}."
    )
    .unwrap();
    write!(out, "SCORE is the expected {k}-day forward return as a decimal. No other text.").unwrap();
    Ok(out)
}

/// Features of every universe ticker on `date`, taken from a standardized frame.
pub fn date_features(frame: &FeatureFrame, date: NaiveDate) -> Result<Vec<TickerFeatures>> {
    let d = frame
        .date_index(date)
        .ok_or_else(|| Error::Data(format!("date {date} not in feature frame")))?;
    Ok(frame
        .tickers()
        .iter()
        .enumerate()
        .map(|(t, ticker)| TickerFeatures {
            ticker: ticker.clone(),
            values: frame.present(d, t).into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
        })
        .collect())
}

pub fn build_bundle(rows: &[TickerFeatures], k: usize, effort: Option<Effort>) -> Result<PromptBundle> {
    let user = build_user_message(rows, k, effort)?;
    Ok(PromptBundle {
        system: SYSTEM_PROMPT.to_string(),
        user,
        expected: rows.iter().filter(|r| !r.values.is_empty()).map(|r| r.ticker.clone()).collect(),
        effort,
    })
}
