//! Per-date z-score, rescale to the training target scale, winsorize, blend.
//!
//! A calibrated [`ScoreFrame`] can only be produced by [`Calibrator::calibrate`],
//! which always applies the three steps in order and records them as provenance.

use std::collections::BTreeSet;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::models::{CalStep, ScoreFrame, Stage};
use crate::scalar::{mean, sample_std, Scalar};

/// Mean and sample stdev of realized k-day returns over a training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainTargetStats<F = f64> {
    pub mean: F,
    pub std: F,
}

impl<F: Scalar> TrainTargetStats<F> {
    pub fn from_targets(targets: &[F]) -> Self {
        Self {
            mean: mean(targets),
            std: sample_std(targets),
        }
    }

    pub fn is_usable(&self) -> bool {
        self.mean.is_finite() && self.std.is_finite() && self.std > F::zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub lower_pct: f64,
    pub upper_pct: f64,
    /// Dates with cross-sectional stdev below this get all-zero z-scores.
    pub epsilon: f64,
    pub blend_weight: f64,
    pub blend_partner: String,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            lower_pct: 5.0,
            upper_pct: 95.0,
            epsilon: 1e-8,
            blend_weight: 0.5,
            blend_partner: "ridge".into(),
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lower_pct && self.lower_pct < self.upper_pct && self.upper_pct <= 100.0) {
            return Err(Error::Config(format!(
                "winsor percentiles must satisfy 0 <= lower < upper <= 100, got {} / {}",
                self.lower_pct, self.upper_pct
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("calibration epsilon must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.blend_weight) {
            return Err(Error::Config("blend weight must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Cross-sectional z-scores with the sample stdev; all zeros when the stdev
/// is below `epsilon` or fewer than two scores are present.
pub fn zscore_by_date<F: Scalar>(scores: &[F], epsilon: F) -> Vec<F> {
    if scores.len() < 2 {
        return vec![F::zero(); scores.len()];
    }
    let mu = mean(scores);
    let sd = sample_std(scores);
    if !(sd >= epsilon) {
        return vec![F::zero(); scores.len()];
    }
    scores.iter().map(|&s| (s - mu) / sd).collect()
}

pub fn rescale_to_train<F: Scalar>(z: &[F], stats: &TrainTargetStats<F>) -> Vec<F> {
    z.iter().map(|&v| v * stats.std + stats.mean).collect()
}

/// Linear-interpolation percentile (`p` in `[0, 100]`) over the given values.
pub fn percentile<F: Scalar>(values: &[F], p: f64) -> F {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    percentile_sorted(&sorted, p)
}

fn percentile_sorted<F: Scalar>(sorted: &[F], p: f64) -> F {
    let n = sorted.len();
    if n == 0 {
        return F::nan();
    }
    let h = (n - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = F::lit(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Clips to `[P_lower, P_upper]` computed on this date's values.
pub fn winsorize_by_date<F: Scalar>(values: &[F], lower_pct: f64, upper_pct: f64) -> Vec<F> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let lo = percentile_sorted(&sorted, lower_pct);
    let hi = percentile_sorted(&sorted, upper_pct);
    values.iter().map(|&v| v.max(lo).min(hi)).collect()
}

/// `w * primary + (1 - w) * partner`, elementwise.
pub fn blend_values<F: Scalar>(primary: &[F], partner: &[F], w: F) -> Vec<F> {
    primary
        .iter()
        .zip(partner)
        .map(|(&a, &b)| w * a + (F::one() - w) * b)
        .collect()
}

/// Applies the calibration pipeline to score frames.
#[derive(Debug, Clone)]
pub struct Calibrator {
    config: CalibrationConfig,
}

impl Calibrator {
    pub fn new(config: CalibrationConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &CalibrationConfig {
        &self.config
    }

    /// raw -> cal. Errors unless the input is a raw frame and `stats` are usable.
    pub fn calibrate(&self, raw: &ScoreFrame, stats: &TrainTargetStats) -> Result<ScoreFrame> {
        if raw.stage() != Stage::Raw {
            return Err(Error::Argument(format!(
                "calibration expects a raw frame, got stage {:?} for {}",
                raw.stage(),
                raw.model_id()
            )));
        }
        if !stats.is_usable() {
            return Err(Error::Numerical(format!(
                "training target stdev {} unusable; calibration disabled for {}",
                stats.std,
                raw.model_id()
            )));
        }
        let mut out = raw.derive(Stage::Cal);
        for (date, row) in raw.by_date() {
            let scores: Vec<f64> = row.iter().map(|r| r.1).collect();
            let z = zscore_by_date(&scores, self.config.epsilon);
            let rescaled = rescale_to_train(&z, stats);
            let clipped = winsorize_by_date(&rescaled, self.config.lower_pct, self.config.upper_pct);
            out.insert_date(
                *date,
                row.iter().map(|r| r.0.clone()).zip(clipped).collect(),
            );
        }
        out.set_provenance(vec![CalStep::ZScore, CalStep::Rescale, CalStep::Winsorize]);
        Ok(out)
    }

    /// cal -> cal_blend against a partner frame covering the same (date, ticker) keys.
    pub fn blend(&self, primary: &ScoreFrame, partner: &ScoreFrame) -> Result<ScoreFrame> {
        blend(primary, partner, self.config.blend_weight)
    }
}

/// Blends a calibrated frame with a partner's final frame.
pub fn blend(primary: &ScoreFrame, partner: &ScoreFrame, w: f64) -> Result<ScoreFrame> {
    if primary.stage() != Stage::Cal {
        return Err(Error::Argument(format!(
            "blend expects a calibrated primary, got {:?}",
            primary.stage()
        )));
    }
    if partner.stage() == Stage::CalBlend {
        return Err(Error::Argument("blend partner must not itself be blended".into()));
    }
    let a: BTreeSet<(NaiveDate, String)> = primary.keys().collect();
    let b: BTreeSet<(NaiveDate, String)> = partner.keys().collect();
    if a != b {
        let fmt = |s: Vec<&(NaiveDate, String)>| {
            s.iter()
                .take(10)
                .map(|(d, t)| format!("{d}/{t}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        return Err(Error::Data(format!(
            "blend coverage mismatch: missing in partner [{}]; missing in primary [{}]",
            fmt(a.difference(&b).collect()),
            fmt(b.difference(&a).collect())
        )));
    }
    let mut out = primary.derive(Stage::CalBlend);
    for ((date, row), (_, prow)) in primary.by_date().iter().zip(partner.by_date()) {
        let p: Vec<f64> = row.iter().map(|r| r.1).collect();
        let q: Vec<f64> = row
            .iter()
            .map(|r| prow.iter().find(|x| x.0 == r.0).expect("coverage checked").1)
            .collect();
        let v = blend_values(&p, &q, w);
        out.insert_date(*date, row.iter().map(|r| r.0.clone()).zip(v).collect());
    }
    let mut prov = primary.provenance().to_vec();
    prov.push(CalStep::Blend);
    out.set_provenance(prov);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::spearman;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn day(i: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 3, 1).unwrap() + chrono::Days::new(i)
    }

    #[test]
    fn zscore_cases() {
        assert_eq!(zscore_by_date(&[1.0, 2.0, 3.0], 1e-8), vec![-1.0, 0.0, 1.0]);
        assert_eq!(zscore_by_date(&[5.0, 5.0, 5.0], 1e-8), vec![0.0; 3]);
        assert_eq!(zscore_by_date(&[5.0], 1e-8), vec![0.0]);
    }

    #[test]
    fn zscore_matches_direct_formula() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let s: Vec<f64> = (0..11).map(|_| rng.gen_range(-0.05..0.05)).collect();
        let n = s.len() as f64;
        let mu = s.iter().sum::<f64>() / n;
        let sd = (s.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0)).sqrt();
        for (z, x) in zscore_by_date(&s, 1e-8).iter().zip(&s) {
            assert!((z - (x - mu) / sd).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_cases() {
        let st = TrainTargetStats { mean: 0.001, std: 0.01 };
        let out = rescale_to_train(&[-1.0, 0.0, 1.0], &st);
        let want: [f64; 3] = [-0.009, 0.001, 0.011];
        for (o, w) in out.iter().zip(want) {
            assert!((o - w).abs() < 1e-15);
        }
        assert_eq!(rescale_to_train(&[0.0; 3], &st), vec![0.001; 3]);
    }

    #[test]
    fn winsorize_cases() {
        let inside = [1.0, 1.0, 1.0];
        assert_eq!(winsorize_by_date(&inside, 5.0, 95.0), inside.to_vec());

        // 21 values 0..=20 with the last replaced by an extreme outlier
        let mut v: Vec<f64> = (0..21).map(f64::from).collect();
        v[20] = 1000.0;
        let w = winsorize_by_date(&v, 5.0, 95.0);
        // oracle: sorted position h = 20 * 0.95 = 19 -> value 19; lower h = 1 -> 1
        assert_eq!(w[20], 19.0);
        assert_eq!(w[0], 1.0);
        for i in 1..20 {
            assert_eq!(w[i], v[i]);
        }

        // two values: h = 0.05 and 0.95 between them
        let two: Vec<f64> = winsorize_by_date(&[0.0, 10.0], 5.0, 95.0);
        assert!((two[0] - 0.5).abs() < 1e-12 && (two[1] - 9.5).abs() < 1e-12);
    }

    #[test]
    fn blend_endpoints_and_midpoint() {
        let p = [0.02, -0.02];
        let q = [0.0, 0.0];
        assert_eq!(blend_values(&p, &q, 1.0), p.to_vec());
        assert_eq!(blend_values(&p, &q, 0.0), q.to_vec());
        assert_eq!(blend_values(&p, &q, 0.5), vec![0.01, -0.01]);
    }

    fn raw_frame(rows: &[(u64, &[(&str, f64)])]) -> ScoreFrame {
        let mut f = ScoreFrame::new_raw("tllm_B512");
        for (d, r) in rows {
            f.insert_date(day(*d), r.iter().map(|(t, v)| (t.to_string(), *v)).collect());
        }
        f
    }

    #[test]
    fn stage_order_is_enforced() {
        let c = Calibrator::new(CalibrationConfig::default()).unwrap();
        let st = TrainTargetStats { mean: 0.0, std: 0.01 };
        let raw = raw_frame(&[(0, &[("A", 1.0), ("B", 2.0), ("C", 3.0)])]);
        // blend needs a calibrated primary
        assert!(c.blend(&raw, &raw).is_err());
        let cal = c.calibrate(&raw, &st).unwrap();
        assert_eq!(cal.stage(), Stage::Cal);
        assert_eq!(cal.provenance(), &[CalStep::ZScore, CalStep::Rescale, CalStep::Winsorize]);
        // a calibrated frame cannot be calibrated again
        assert!(c.calibrate(&cal, &st).is_err());
        let blended = c.blend(&cal, &raw).unwrap();
        assert_eq!(blended.stage(), Stage::CalBlend);
        assert!(c.blend(&blended, &raw).is_err());
        assert!(c.calibrate(&raw, &TrainTargetStats { mean: 0.0, std: 0.0 }).is_err());
    }

    #[test]
    fn blend_coverage_mismatch_lists_keys() {
        let c = Calibrator::new(CalibrationConfig::default()).unwrap();
        let st = TrainTargetStats { mean: 0.0, std: 0.01 };
        let cal = c.calibrate(&raw_frame(&[(0, &[("A", 1.0), ("B", 2.0)])]), &st).unwrap();
        let partner = raw_frame(&[(0, &[("A", 0.0)])]);
        let err = c.blend(&cal, &partner).unwrap_err().to_string();
        assert!(err.contains("/B"), "{err}");
    }

    #[test]
    fn bad_config_rejected() {
        let bad = CalibrationConfig { lower_pct: 95.0, upper_pct: 5.0, ..Default::default() };
        assert!(Calibrator::new(bad).is_err());
    }

    proptest! {
        #[test]
        fn rescaled_mean_and_rank_preserved(scores in prop::collection::vec(-1.0f64..1.0, 3..40), mu in -0.01f64..0.01, sd in 0.001f64..0.05) {
            let st = TrainTargetStats { mean: mu, std: sd };
            let z = zscore_by_date(&scores, 1e-8);
            let r = rescale_to_train(&z, &st);
            let m = r.iter().sum::<f64>() / r.len() as f64;
            prop_assert!((m - mu).abs() < 1e-12);
            if let Some(rho) = spearman(&scores, &r) {
                prop_assert!((rho - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn winsorize_keeps_order(values in prop::collection::vec(-5.0f64..5.0, 1..50)) {
            let w = winsorize_by_date(&values, 5.0, 95.0);
            for i in 0..values.len() {
                for j in 0..values.len() {
                    if values[i] < values[j] { prop_assert!(w[i] <= w[j]); }
                }
            }
        }
    }
}
