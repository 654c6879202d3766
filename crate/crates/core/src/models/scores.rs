use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Raw,
    Cal,
    CalBlend,
}

impl Stage {
    pub fn suffix(self) -> &'static str {
        match self {
            Stage::Raw => "",
            Stage::Cal => "_cal",
            Stage::CalBlend => "_cal_blend",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::Cal => "cal",
            Stage::CalBlend => "cal_blend",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalStep {
    ZScore,
    Rescale,
    Winsorize,
    Blend,
}

/// Forecast scores of one model over (date, ticker), at one stage.
///
/// Only raw frames can be built from outside the crate; later stages come
/// from the calibration module and carry the steps that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFrame {
    model_id: String,
    stage: Stage,
    provenance: Vec<CalStep>,
    rows: BTreeMap<NaiveDate, Vec<(String, f64)>>,
    invalid_dates: BTreeSet<NaiveDate>,
    skipped_rows: usize,
}

impl ScoreFrame {
    pub fn new_raw(model_id: &str) -> Self {
        Self {
            model_id: model_id.to_string(),
            stage: Stage::Raw,
            provenance: Vec::new(),
            rows: BTreeMap::new(),
            invalid_dates: BTreeSet::new(),
            skipped_rows: 0,
        }
    }

    pub(crate) fn derive(&self, stage: Stage) -> Self {
        Self {
            model_id: self.model_id.clone(),
            stage,
            provenance: Vec::new(),
            rows: BTreeMap::new(),
            invalid_dates: self.invalid_dates.clone(),
            skipped_rows: self.skipped_rows,
        }
    }

    pub(crate) fn set_provenance(&mut self, steps: Vec<CalStep>) {
        self.provenance = steps;
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Model id plus the stage suffix, e.g. `tllm_B512_cal_blend`.
    pub fn label(&self) -> String {
        format!("{}{}", self.model_id, self.stage.suffix())
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn provenance(&self) -> &[CalStep] {
        &self.provenance
    }

    /// True when the recorded steps are exactly the ones the stage requires, in order.
    pub fn provenance_is_valid(&self) -> bool {
        use CalStep::*;
        match self.stage {
            Stage::Raw => self.provenance.is_empty(),
            Stage::Cal => self.provenance == [ZScore, Rescale, Winsorize],
            Stage::CalBlend => self.provenance == [ZScore, Rescale, Winsorize, Blend],
        }
    }

    pub fn push(&mut self, date: NaiveDate, ticker: String, score: f64) {
        self.rows.entry(date).or_default().push((ticker, score));
    }

    pub fn insert_date(&mut self, date: NaiveDate, row: Vec<(String, f64)>) {
        self.rows.insert(date, row);
    }

    pub fn mark_invalid(&mut self, date: NaiveDate) {
        self.rows.remove(&date);
        self.invalid_dates.insert(date);
    }

    pub fn add_skipped(&mut self, n: usize) {
        self.skipped_rows += n;
    }

    pub fn skipped_rows(&self) -> usize {
        self.skipped_rows
    }

    pub fn invalid_dates(&self) -> &BTreeSet<NaiveDate> {
        &self.invalid_dates
    }

    pub fn by_date(&self) -> &BTreeMap<NaiveDate, Vec<(String, f64)>> {
        &self.rows
    }

    pub fn get(&self, date: NaiveDate, ticker: &str) -> Option<f64> {
        self.rows.get(&date)?.iter().find(|r| r.0 == ticker).map(|r| r.1)
    }

    pub fn keys(&self) -> impl Iterator<Item = (NaiveDate, String)> + '_ {
        self.rows
            .iter()
            .flat_map(|(d, row)| row.iter().map(move |r| (*d, r.0.clone())))
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keeps only the keys also present in `other` (same stage).
    pub fn restricted_to(&self, keys: &BTreeSet<(NaiveDate, String)>) -> Self {
        let mut out = self.clone();
        out.rows = self
            .rows
            .iter()
            .filter_map(|(d, row)| {
                let kept: Vec<(String, f64)> = row
                    .iter()
                    .filter(|r| keys.contains(&(*d, r.0.clone())))
                    .cloned()
                    .collect();
                (!kept.is_empty()).then_some((*d, kept))
            })
            .collect();
        out
    }
}
