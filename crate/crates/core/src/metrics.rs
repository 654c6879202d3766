//! Per-date ranking metrics and their aggregation.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::market_data::ReturnFrame;
use crate::models::ScoreFrame;
use crate::rank::spearman;
use crate::scalar::{mean, sample_std, Scalar};

/// Rank IC of one cross-section; `None` below three pairs or on zero rank variance.
pub fn spearman_ic<F: Scalar>(scores: &[F], realized: &[F]) -> Option<F> {
    if scores.len() != realized.len() || scores.len() < 3 {
        return None;
    }
    spearman(scores, realized)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DateMetrics {
    pub date: NaiveDate,
    pub ic: Option<f64>,
    pub sq_err_sum: f64,
    pub count: usize,
}

impl DateMetrics {
    pub fn mse(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sq_err_sum / self.count as f64)
    }
}

/// Metrics for every scored, valid date of a frame against realized returns.
pub fn date_metrics(scores: &ScoreFrame, realized: &ReturnFrame) -> Vec<DateMetrics> {
    scores
        .by_date()
        .iter()
        .filter(|(d, _)| !scores.invalid_dates().contains(*d))
        .map(|(&date, row)| {
            let pairs: Vec<(f64, f64)> = row
                .iter()
                .filter_map(|(t, s)| realized.get_by_name(t, date).map(|r| (*s, r)))
                .collect();
            let (s, r): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            DateMetrics {
                date,
                ic: spearman_ic(&s, &r),
                sq_err_sum: pairs.iter().map(|(s, r)| (s - r).powi(2)).sum(),
                count: pairs.len(),
            }
        })
        .collect()
}

/// Mean squared error over all scored pairs; `None` without pairs.
pub fn mse(metrics: &[DateMetrics]) -> Option<f64> {
    let n: usize = metrics.iter().map(|m| m.count).sum();
    (n > 0).then(|| metrics.iter().map(|m| m.sq_err_sum).sum::<f64>() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMode {
    /// Normal-approximation interval over per-date ICs.
    Dates,
    /// Interval over per-window mean ICs.
    Windows,
}

impl std::str::FromStr for CiMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "dates" => Ok(CiMode::Dates),
            "windows" => Ok(CiMode::Windows),
            other => Err(crate::Error::Config(format!("ci mode must be dates|windows, got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingLoss<F = f64> {
    /// Mean of `1 - IC`.
    pub loss: F,
    /// `1.96 * sd / sqrt(n)`; absent below two observations.
    pub half_width: Option<F>,
    pub n: usize,
}

/// Aggregates per-observation ICs (dates or window means) into `1 - IC` with a 95% interval.
pub fn aggregate_ranking_loss<F: Scalar>(ics: &[F]) -> Option<RankingLoss<F>> {
    if ics.is_empty() {
        return None;
    }
    let loss = F::one() - mean(ics);
    let half_width = (ics.len() >= 2)
        .then(|| F::lit(1.96) * sample_std(ics) / F::from_usize_lossy(ics.len()).sqrt());
    Some(RankingLoss {
        loss,
        half_width,
        n: ics.len(),
    })
}

/// Ranking loss over windows, each given as its per-date metrics.
pub fn ranking_loss(windows: &[Vec<DateMetrics>], mode: CiMode) -> Option<RankingLoss> {
    let ics: Vec<f64> = match mode {
        CiMode::Dates => windows.iter().flatten().filter_map(|m| m.ic).collect(),
        CiMode::Windows => windows
            .iter()
            .filter_map(|w| {
                let v: Vec<f64> = w.iter().filter_map(|m| m.ic).collect();
                (!v.is_empty()).then(|| mean(&v))
            })
            .collect(),
    };
    aggregate_ranking_loss(&ics)
}

/// Per-date losses keyed by date: `1 - IC` or date MSE.
pub fn loss_series(metrics: &[DateMetrics], use_ic: bool) -> BTreeMap<NaiveDate, f64> {
    metrics
        .iter()
        .filter_map(|m| {
            let v = if use_ic { m.ic.map(|ic| 1.0 - ic) } else { m.mse() };
            v.map(|v| (m.date, v))
        })
        .collect()
}
