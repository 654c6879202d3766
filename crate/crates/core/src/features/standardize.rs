use chrono::NaiveDate;

use super::frame::{ColumnKind, FeatureFrame};
use super::policy::INTERACTIONS;
use crate::access::{Phase, Probe};
use crate::scalar::{mean, sample_std};

/// Fitted per-(ticker, column) statistics and the pairs dropped as degenerate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Standardization {
    /// `(ticker, column, mean, std)` for each standardized pair.
    pub fitted: Vec<(String, String, f64, f64)>,
    /// Pairs with fewer than two training values or `std < 1e-12`; absent everywhere.
    pub absent: Vec<(String, String)>,
}

const MIN_STD: f64 = 1e-12;

pub fn standardize_per_ticker(
    frame: &FeatureFrame,
    train_start: NaiveDate,
    train_end: NaiveDate,
) -> (FeatureFrame, Standardization) {
    standardize_per_ticker_probed(
        frame,
        train_start,
        train_end,
        Probe::none(Phase::StandardizationFit),
    )
}

/// z-scores every `Scalar` column per ticker with statistics fitted on the
/// training dates only, applied to all dates of the frame. Cross-sectional
/// columns pass through.
pub fn standardize_per_ticker_probed(
    frame: &FeatureFrame,
    train_start: NaiveDate,
    train_end: NaiveDate,
    probe: Probe<'_>,
) -> (FeatureFrame, Standardization) {
    let train: Vec<usize> = frame
        .dates()
        .iter()
        .enumerate()
        .filter(|(_, d)| **d >= train_start && **d <= train_end)
        .map(|(i, _)| i)
        .collect();
    for &d in &train {
        probe.read(frame.dates()[d]);
    }
    let mut out = frame.clone();
    let mut report = Standardization::default();
    for c in 0..frame.columns().len() {
        if frame.kind(c) != ColumnKind::Scalar {
            continue;
        }
        for t in 0..frame.tickers().len() {
            let xs: Vec<f64> = train.iter().filter_map(|&d| frame.get(d, t, c)).collect();
            let (mu, sd) = (mean(&xs), sample_std(&xs));
            let name = || (frame.tickers()[t].clone(), frame.columns()[c].clone());
            if xs.len() < 2 || !(sd >= MIN_STD) {
                let (tk, col) = name();
                log::debug!("standardization: {tk}/{col} absent ({} training values)", xs.len());
                for d in 0..frame.dates().len() {
                    out.set(d, t, c, None);
                }
                report.absent.push((tk, col));
                continue;
            }
            for d in 0..frame.dates().len() {
                out.set(d, t, c, frame.get(d, t, c).map(|x| (x - mu) / sd));
            }
            let (tk, col) = name();
            report.fitted.push((tk, col, mu, sd));
        }
    }
    (out, report)
}

/// Appends the richer-block interaction products of standardized pairs.
pub fn add_interactions(frame: &mut FeatureFrame) {
    for (name, left, right) in INTERACTIONS {
        let (Some(l), Some(r)) = (frame.column_index(left), frame.column_index(right)) else {
            continue;
        };
        let out = frame.add_column(name, ColumnKind::Interaction);
        for d in 0..frame.dates().len() {
            for t in 0..frame.tickers().len() {
                let v = frame.get(d, t, l).zip(frame.get(d, t, r)).map(|(a, b)| a * b);
                frame.set(d, t, out, v);
            }
        }
    }
}
