//! Read instrumentation for leakage checks.
//!
//! Operations that must only see training data accept a [`Probe`]; when the
//! probe carries an [`AccessLog`], every date consulted is recorded under the
//! window id and phase so callers can assert nothing at or after the test
//! start was read.

use std::collections::BTreeMap;
use std::sync::Mutex;

use chrono::NaiveDate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    UniverseSelection,
    StandardizationFit,
    ModelFit,
    TargetStats,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::UniverseSelection,
        Phase::StandardizationFit,
        Phase::ModelFit,
        Phase::TargetStats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::UniverseSelection => "universe_selection",
            Phase::StandardizationFit => "standardization_fit",
            Phase::ModelFit => "model_fit",
            Phase::TargetStats => "target_stats",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessSummary {
    pub reads: u64,
    pub min_date: NaiveDate,
    pub max_date: NaiveDate,
}

/// Per (window, phase) summary of every date read.
#[derive(Debug, Default)]
pub struct AccessLog {
    inner: Mutex<BTreeMap<(String, Phase), AccessSummary>>,
}

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, window: &str, phase: Phase, date: NaiveDate) {
        let mut map = self.inner.lock().expect("access log poisoned");
        map.entry((window.to_string(), phase))
            .and_modify(|s| {
                s.reads += 1;
                s.min_date = s.min_date.min(date);
                s.max_date = s.max_date.max(date);
            })
            .or_insert(AccessSummary {
                reads: 1,
                min_date: date,
                max_date: date,
            });
    }

    pub fn summary(&self, window: &str, phase: Phase) -> Option<AccessSummary> {
        let map = self.inner.lock().expect("access log poisoned");
        map.get(&(window.to_string(), phase)).copied()
    }

    pub fn entries(&self) -> Vec<(String, Phase, AccessSummary)> {
        let map = self.inner.lock().expect("access log poisoned");
        map.iter().map(|((w, p), s)| (w.clone(), *p, *s)).collect()
    }
}

/// Where reads made by an operation should be recorded, if anywhere.
#[derive(Debug, Clone, Copy)]
pub struct Probe<'a> {
    target: Option<(&'a AccessLog, &'a str)>,
    phase: Phase,
}

impl<'a> Probe<'a> {
    pub fn none(phase: Phase) -> Self {
        Self {
            target: None,
            phase,
        }
    }

    pub fn new(log: Option<&'a AccessLog>, window: &'a str, phase: Phase) -> Self {
        Self {
            target: log.map(|l| (l, window)),
            phase,
        }
    }

    #[inline]
    pub fn read(&self, date: NaiveDate) {
        if let Some((log, window)) = self.target {
            log.record(window, self.phase, date);
        }
    }

    pub fn with_phase(self, phase: Phase) -> Self {
        Self { phase, ..self }
    }
}
