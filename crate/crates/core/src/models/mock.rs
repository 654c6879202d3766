use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ForecastContext, ScoreFrame};
use crate::calibration::zscore_by_date;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Signal correlation of a noisy oracle, optionally depending on universe size.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoSchedule {
    Constant(f64),
    /// Piecewise-linear in U between the given points, clamped at the ends.
    ByUniverse(BTreeMap<usize, f64>),
}

impl RhoSchedule {
    pub fn at(&self, u: usize) -> f64 {
        match self {
            RhoSchedule::Constant(r) => *r,
            RhoSchedule::ByUniverse(points) => {
                let (first, last) = match (points.first_key_value(), points.last_key_value()) {
                    (Some(f), Some(l)) => (f, l),
                    _ => return 0.0,
                };
                if u <= *first.0 {
                    return *first.1;
                }
                if u >= *last.0 {
                    return *last.1;
                }
                let (lo_u, lo_r) = points.range(..=u).next_back().expect("bounded below");
                let (hi_u, hi_r) = points.range(u..).next().expect("bounded above");
                if lo_u == hi_u {
                    return *lo_r;
                }
                let w = (u - lo_u) as f64 / (hi_u - lo_u) as f64;
                lo_r + w * (hi_r - lo_r)
            }
        }
    }

    /// Parses `0.4` or `5:0.8,11:0.55,21:0.3`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse rho schedule '{text}'"));
        if !text.contains(':') {
            return text.trim().parse().map(RhoSchedule::Constant).map_err(|_| bad());
        }
        let mut points = BTreeMap::new();
        for part in text.split(',') {
            let (u, r) = part.split_once(':').ok_or_else(bad)?;
            points.insert(u.trim().parse().map_err(|_| bad())?, r.trim().parse().map_err(|_| bad())?);
        }
        Ok(RhoSchedule::ByUniverse(points))
    }

    fn validate(&self) -> Result<()> {
        let ok = |r: f64| (-1.0..=1.0).contains(&r);
        let valid = match self {
            RhoSchedule::Constant(r) => ok(*r),
            RhoSchedule::ByUniverse(p) => !p.is_empty() && p.values().all(|r| ok(*r)),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Config("rho must lie in [-1, 1]".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MockRule {
    /// Scores equal one (standardized) feature column.
    EchoFeature(String),
    Constant(f64),
    /// `rho * z(truth) + sqrt(1 - rho^2) * noise`, with `z` the per-date
    /// cross-sectional z-score of realized returns.
    NoisyOracle { rho: RhoSchedule, seed: u64 },
}

impl MockRule {
    pub fn from_params(params: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| params.get(k).map(String::as_str);
        let rule = match get("rule") {
            Some("echo_feature") => MockRule::EchoFeature(
                get("column")
                    .ok_or_else(|| Error::Config("echo_feature needs 'column'".into()))?
                    .to_string(),
            ),
            Some("constant") => MockRule::Constant(
                get("value")
                    .unwrap_or("0")
                    .parse()
                    .map_err(|_| Error::Config("constant mock needs numeric 'value'".into()))?,
            ),
            Some("noisy_oracle") => MockRule::NoisyOracle {
                rho: RhoSchedule::parse(get("rho").unwrap_or("0"))?,
                seed: get("seed")
                    .unwrap_or("0")
                    .parse()
                    .map_err(|_| Error::Config("noisy_oracle 'seed' must be an integer".into()))?,
            },
            Some(other) => return Err(Error::Config(format!("unknown mock rule '{other}'"))),
            None => return Err(Error::Config("mock forecaster needs 'rule'".into())),
        };
        if let MockRule::NoisyOracle { rho, .. } = &rule {
            rho.validate()?;
        }
        Ok(rule)
    }
}

/// Deterministic stand-in forecaster for end-to-end runs without a live model.
#[derive(Debug, Clone, PartialEq)]
pub struct MockForecaster {
    pub rule: MockRule,
}

impl MockForecaster {
    pub fn new(rule: MockRule) -> Self {
        Self { rule }
    }

    /// Scores for one date over the context universe.
    pub fn scores_for_date(&self, ctx: &ForecastContext<'_>, date: NaiveDate) -> Result<Vec<(String, f64)>> {
        let universe = ctx.features.tickers();
        match &self.rule {
            MockRule::Constant(c) => Ok(universe.iter().map(|t| (t.clone(), *c)).collect()),
            MockRule::EchoFeature(col) => {
                let c = ctx.features.column_index(col).ok_or_else(|| {
                    Error::Config(format!("echo_feature column '{col}' not in feature frame"))
                })?;
                let d = ctx
                    .features
                    .date_index(date)
                    .ok_or_else(|| Error::Data(format!("date {date} not in feature frame")))?;
                Ok(universe
                    .iter()
                    .enumerate()
                    .filter_map(|(t, name)| ctx.features.get(d, t, c).map(|v| (name.clone(), v)))
                    .collect())
            }
            MockRule::NoisyOracle { rho, seed } => {
                let r = rho.at(universe.len());
                let truth: Vec<Option<f64>> =
                    universe.iter().map(|t| ctx.truth.get_by_name(t, date)).collect();
                let present: Vec<f64> = truth.iter().flatten().copied().collect();
                let z = zscore_by_date(&present, 1e-12);
                let mut zi = z.into_iter();
                let day_seed = derive_seed(*seed, &[&date.num_days_from_ce().to_string()]);
                let mut rng = ChaCha8Rng::seed_from_u64(day_seed);
                let noise_scale = (1.0 - r * r).max(0.0).sqrt();
                Ok(universe
                    .iter()
                    .zip(&truth)
                    .map(|(t, tr)| {
                        let signal = tr.map(|_| zi.next().expect("z per truth")).unwrap_or(0.0);
                        let eps: f64 = StandardNormal.sample(&mut rng);
                        (t.clone(), r * signal + noise_scale * eps)
                    })
                    .collect())
            }
        }
    }

    pub fn forecast_frame(&self, model_id: &str, ctx: &ForecastContext<'_>) -> Result<ScoreFrame> {
        let mut frame = ScoreFrame::new_raw(model_id);
        for &date in ctx.test_dates {
            frame.insert_date(date, self.scores_for_date(ctx, date)?);
        }
        Ok(frame)
    }
}
