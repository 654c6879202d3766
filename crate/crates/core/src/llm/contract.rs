use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::prompt::{BEGIN_MARKER, END_MARKER};

/// Machine-readable reason for rejecting a response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationCode {
    MissingBegin,
    MissingEnd,
    MultipleBlocks,
    EmptyBlock,
    MalformedLine,
    NonNumericScore,
    NonFiniteScore,
    UnknownTicker,
    DuplicateTicker,
    MissingTicker,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::MissingBegin => "missing_begin",
            ViolationCode::MissingEnd => "missing_end",
            ViolationCode::MultipleBlocks => "multiple_blocks",
            ViolationCode::EmptyBlock => "empty_block",
            ViolationCode::MalformedLine => "malformed_line",
            ViolationCode::NonNumericScore => "non_numeric_score",
            ViolationCode::NonFiniteScore => "non_finite_score",
            ViolationCode::UnknownTicker => "unknown_ticker",
            ViolationCode::DuplicateTicker => "duplicate_ticker",
            ViolationCode::MissingTicker => "missing_ticker",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseStatus {
    Ok,
    ContractViolation { code: ViolationCode, detail: String },
    TransportError(String),
}

impl ResponseStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, ResponseStatus::Ok)
    }

    pub fn code(&self) -> &str {
        match self {
            ResponseStatus::Ok => "ok",
            ResponseStatus::ContractViolation { code, .. } => code.as_str(),
            ResponseStatus::TransportError(_) => "transport_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmResponse {
    pub raw: String,
    /// Filled only when `status` is ok.
    pub scores: BTreeMap<String, f64>,
    pub status: ResponseStatus,
    /// Non-whitespace text outside the marker block.
    pub surrounding_text: bool,
}

impl LlmResponse {
    pub fn transport_error(message: String) -> Self {
        Self {
            raw: String::new(),
            scores: BTreeMap::new(),
            status: ResponseStatus::TransportError(message),
            surrounding_text: false,
        }
    }

    /// Scores in the order of `expected`.
    pub fn ordered(&self, expected: &[String]) -> Vec<(String, f64)> {
        expected
            .iter()
            .filter_map(|t| self.scores.get(t).map(|s| (t.clone(), *s)))
            .collect()
    }
}

/// Extracts the unique marker block and validates every line as `TICKER\tSCORE`.
pub fn parse_response(raw: &str, expected: &[String]) -> LlmResponse {
    let fail = |code: ViolationCode, detail: String, surrounding: bool| LlmResponse {
        raw: raw.to_string(),
        scores: BTreeMap::new(),
        status: ResponseStatus::ContractViolation { code, detail },
        surrounding_text: surrounding,
    };
    let Some(begin) = raw.find(BEGIN_MARKER) else {
        return fail(ViolationCode::MissingBegin, "no begin marker".into(), false);
    };
    let body_start = begin + BEGIN_MARKER.len();
    let Some(end_rel) = raw[body_start..].find(END_MARKER) else {
        return fail(ViolationCode::MissingEnd, "no end marker after begin".into(), false);
    };
    let body = &raw[body_start..body_start + end_rel];
    let after = &raw[body_start + end_rel + END_MARKER.len()..];
    let surrounding = !raw[..begin].trim().is_empty() || !after.trim().is_empty();
    if body.contains(BEGIN_MARKER) || after.contains(BEGIN_MARKER) {
        return fail(ViolationCode::MultipleBlocks, "more than one begin marker".into(), surrounding);
    }

    let known: BTreeSet<&str> = expected.iter().map(String::as_str).collect();
    let mut scores = BTreeMap::new();
    let mut lines = 0;
    for (i, line) in body.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields[0].trim().is_empty() {
            return fail(ViolationCode::MalformedLine, format!("block line {}: '{line}'", i), surrounding);
        }
        let ticker = fields[0].trim();
        let score: f64 = match fields[1].trim().parse() {
            Ok(v) => v,
            Err(_) => {
                return fail(
                    ViolationCode::NonNumericScore,
                    format!("{ticker}: '{}'", fields[1].trim()),
                    surrounding,
                )
            }
        };
        if !score.is_finite() {
            return fail(ViolationCode::NonFiniteScore, format!("{ticker}: {score}"), surrounding);
        }
        if !known.contains(ticker) {
            return fail(ViolationCode::UnknownTicker, ticker.to_string(), surrounding);
        }
        if scores.insert(ticker.to_string(), score).is_some() {
            return fail(ViolationCode::DuplicateTicker, ticker.to_string(), surrounding);
        }
    }
    if lines == 0 {
        return fail(ViolationCode::EmptyBlock, "block has no lines".into(), surrounding);
    }
    let missing: Vec<&str> = expected
        .iter()
        .map(String::as_str)
        .filter(|t| !scores.contains_key(*t))
        .collect();
    if !missing.is_empty() {
        return fail(ViolationCode::MissingTicker, missing.join(","), surrounding);
    }
    LlmResponse {
        raw: raw.to_string(),
        scores,
        status: ResponseStatus::Ok,
        surrounding_text: surrounding,
    }
}

/// Renders scores in the contract format; used by the mock transport.
pub fn format_block(scores: &[(String, f64)]) -> String {
    let mut out = String::from(BEGIN_MARKER);
    out.push('\n');
    for (t, s) in scores {
        out.push_str(&format!("{t}\t{}\n", crate::textfmt::repr_f64(*s)));
    }
    out.push_str(END_MARKER);
    out
}
